import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from relsin import perturb
from relsin.errors import EtaOutOfRangeError, NonFiniteError, NotPositiveDefiniteError

from helpers import rand_spd, rel_perturbation


def test_measure_identical():
    A = rand_spd(np.random.default_rng(0), 4)
    m = perturb.measure(A, A)
    assert (m.eta, m.psi2, m.psiF, m.phi2, m.phiF) == (0.0, 0.0, 0.0, 0.0, 0.0)


def test_measure_diagonal():
    m = perturb.measure(np.eye(2), np.diag([1.21, 1.0]))
    assert m.eta == pytest.approx(0.21, abs=1e-15)
    assert m.psi2 == pytest.approx(0.21 / 1.1, abs=1e-15)
    assert m.phi2 == m.eta


@pytest.mark.parametrize("t", [-0.5, 0.1, 3.0])
def test_measure_scalar(t):
    m = perturb.measure(np.eye(3), (1 + t) * np.eye(3))
    assert m.eta == pytest.approx(abs(t), abs=1e-15)
    assert m.psi2 == pytest.approx(abs(t) / np.sqrt(1 + t), abs=1e-14)
    assert m.phiF == pytest.approx(abs(t) * np.sqrt(3), abs=1e-14)


def test_measure_not_pd():
    with pytest.raises(NotPositiveDefiniteError):
        perturb.measure(np.eye(2), np.diag([1.0, -1.0]))


def test_measure_matches_square_roots():
    from relsin.core import spd_inv_sqrt
    rng = np.random.default_rng(4)
    A = rand_spd(rng, 6, 3.0)
    At = A + rel_perturbation(rng, A, 0.3)
    Ai, Ati = spd_inv_sqrt(A), spd_inv_sqrt(At)
    m = perturb.measure(A, At)
    assert m.eta == pytest.approx(np.linalg.norm(Ai @ (A - At) @ Ai, 2), rel=1e-10)
    assert m.psi2 == pytest.approx(np.linalg.norm(Ai @ (A - At) @ Ati, 2), rel=1e-10)
    assert m.psiF == pytest.approx(np.linalg.norm(Ai @ (A - At) @ Ati, "fro"), rel=1e-10)


@pytest.mark.parametrize("eta, psi, inv", [(0.0, 0.0, 0.0), (0.5, np.sqrt(0.5), 1.0),
                                           (0.75, 1.5, 3.0)])
def test_eta_helpers(eta, psi, inv):
    assert perturb.psi_bound_from_eta(eta) == pytest.approx(psi, abs=1e-15)
    assert perturb.eta_of_inverse(eta) == pytest.approx(inv, abs=1e-15)


@pytest.mark.parametrize("eta", [1.0, 1.5, -0.1])
def test_eta_helpers_range(eta):
    with pytest.raises(EtaOutOfRangeError):
        perturb.psi_bound_from_eta(eta)
    with pytest.raises(EtaOutOfRangeError):
        perturb.eta_of_inverse(eta)


def test_lump_examples():
    M = rand_spd(np.random.default_rng(2), 3)
    Mt, eta = perturb.lump(M, M)
    np.testing.assert_allclose(Mt, M, atol=1e-12)
    assert eta == pytest.approx(0.0, abs=1e-14)
    Mt, eta = perturb.lump(np.diag([1.0, 3.0]), np.eye(2))
    np.testing.assert_allclose(Mt, 2 * np.eye(2))
    assert eta == pytest.approx(0.5)
    Mt, eta = perturb.lump(np.diag([2.0, 2.0]), np.eye(2))
    np.testing.assert_allclose(Mt, 2 * np.eye(2))
    assert eta == 0.0


@pytest.mark.parametrize("seed", range(5))
def test_lump_equivalence_attained(seed):
    rng = np.random.default_rng(seed)
    M = rand_spd(rng, 6, 2.0)
    D = np.diag(np.diag(M))
    Mt, eta = perturb.lump(M, D)
    from relsin.core import spd_inv_sqrt
    S = spd_inv_sqrt(Mt)
    w = np.linalg.eigvalsh(S @ (M - Mt) @ S)
    assert np.max(np.abs(w)) <= eta + 1e-12
    # both extremes are attained, up to sign
    assert w[-1] == pytest.approx(eta, abs=1e-12)
    assert w[0] == pytest.approx(-eta, abs=1e-12)


def test_entrywise_examples():
    A = np.array([[4.0, 0.0, 1.0], [0.0, 3.0, -2.0], [1.0, -2.0, 5.0]])
    assert not np.any(perturb.entrywise_perturb(A, 0.0, 1))
    for seed in range(10):
        dA = perturb.entrywise_perturb(A, 0.3, seed)
        assert dA[0, 1] == 0.0 and dA[1, 0] == 0.0
        assert np.array_equal(dA, dA.T)
    dA = perturb.entrywise_perturb(A, 1e-8, 0)
    nz = A != 0
    assert np.max(np.abs(dA[nz]) / np.abs(A[nz])) <= 1e-8


def test_entrywise_deterministic():
    A = rand_spd(np.random.default_rng(0), 5)
    assert np.array_equal(perturb.entrywise_perturb(A, 0.1, 42),
                          perturb.entrywise_perturb(A, 0.1, 42))
    assert not np.array_equal(perturb.entrywise_perturb(A, 0.1, 42),
                              perturb.entrywise_perturb(A, 0.1, 43))


def test_entrywise_errors():
    with pytest.raises(NonFiniteError):
        perturb.entrywise_perturb(np.array([[np.nan]]), 0.1, 0)
    with pytest.raises(ValueError):
        perturb.entrywise_perturb(np.eye(2), -1.0, 0)


def test_perturb_spd_keeps_definiteness():
    A = np.array([[1.0, 0.999], [0.999, 1.0]])
    dA, used = perturb.perturb_spd(A, 0.01, 0)
    assert np.linalg.eigvalsh(A + dA).min() > 0
    assert used >= 0


def test_perturb_spd_resamples(monkeypatch):
    A = np.eye(2)
    seeds = []

    def fake(A, eta, seed):
        seeds.append(seed)
        return -2.0 * A if seed < 12 else np.zeros_like(A)

    monkeypatch.setattr(perturb, "entrywise_perturb", fake)
    dA, used = perturb.perturb_spd(A, 0.1, 10)
    assert used == 12 and seeds == [10, 11, 12]
    with pytest.raises(NotPositiveDefiniteError):
        perturb.perturb_spd(A, 0.1, 0, retries=3)
    assert seeds[3:] == [0, 1, 2, 3]


def test_spectral_norm_large_paths():
    rng = np.random.default_rng(0)
    A = rng.standard_normal((450, 450))
    assert perturb.spectral_norm(A) == pytest.approx(np.linalg.norm(A, 2), rel=1e-8)
    S = A + A.T
    assert perturb.spectral_norm(S, symmetric=True) == pytest.approx(np.linalg.norm(S, 2), rel=1e-8)


@given(st.integers(0, 2**32 - 1), st.integers(1, 10), st.floats(0.0, 0.95))
@settings(max_examples=60, deadline=None)
def test_measure_chain(seed, n, eta):
    rng = np.random.default_rng(seed)
    A = rand_spd(rng, n, 3.0)
    At = A + rel_perturbation(rng, A, eta)
    m = perturb.measure(A, At)
    assert m.psi2 <= perturb.psi_bound_from_eta(m.eta) + 1e-12
    x = rng.standard_normal((n, 100))
    lhs = np.abs(np.einsum("ij,ij->j", x, (A - At) @ x))
    rhs = m.eta * np.einsum("ij,ij->j", x, A @ x)
    assert np.all(lhs <= rhs * (1 + 1e-10) + 1e-14)
    inv = perturb.measure(np.linalg.inv(A), np.linalg.inv(At))
    assert inv.eta <= perturb.eta_of_inverse(m.eta) + 1e-10
