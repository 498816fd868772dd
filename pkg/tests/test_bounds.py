import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from relsin import analysis, bounds, core
from relsin.errors import (BadPError, DichotomyViolatedError, EmptySpectrumError,
                           EtaHTooLargeError, EtaTooLargeError, IndefinitePairError,
                           ResonantSpectraError, ZeroChordalGapError, ZeroGapError)

from helpers import rand_pair, rand_spd, rel_perturbation


def test_parse_p():
    assert bounds.parse_p("inf") == math.inf
    assert bounds.parse_p(2) == 2 and bounds.parse_p("1") == 1
    with pytest.raises(BadPError):
        bounds.parse_p(3)


def test_rel_gap_examples():
    assert bounds.rel_gap([3.0], [1.0]) == pytest.approx(2 / np.sqrt(3))
    assert bounds.rel_gap([2.5], [2.5]) == 0.0
    assert bounds.rel_gap([1 / 3], [1.0]) == pytest.approx(bounds.rel_gap([3.0], [1.0]))
    with pytest.raises(EmptySpectrumError):
        bounds.rel_gap([], [1.0])


def test_rel_gap_p_examples():
    assert bounds.rel_gap_p([3.0], [1.0], 1) == pytest.approx(0.5)
    assert bounds.rel_gap_p([3.0], [1.0], "inf") == pytest.approx(2 / 3)
    assert bounds.rel_gap_p([3.0], [1.0], 2) == pytest.approx(2 / np.sqrt(10))
    assert bounds.rel_gap_p([2.0], [2.0]) == 0.0
    with pytest.raises(BadPError):
        bounds.rel_gap_p([3.0], [1.0], 0.5)
    with pytest.raises(EmptySpectrumError):
        bounds.rel_gap_p([3.0], [])


def test_rel_gap_comp_examples():
    assert bounds.rel_gap_comp([3.0], [1.0]) == pytest.approx(2.0)
    assert bounds.rel_gap_comp([1.0], [2.0]) == pytest.approx(0.5)
    assert bounds.rel_gap_comp([1.5], [1.5]) == 0.0


@given(st.lists(st.floats(1e-3, 1e3), min_size=1, max_size=6),
       st.lists(st.floats(1e-3, 1e3), min_size=1, max_size=6))
def test_gap_inversion_invariance(a, b):
    a, b = np.array(a), np.array(b)
    assert bounds.rel_gap(1 / a, 1 / b) == pytest.approx(bounds.rel_gap(a, b), rel=1e-12, abs=1e-15)


def test_dichotomy_examples():
    kind, alpha, delta = bounds.check_dichotomy([5.0, 6.0], [1.0, 2.0])
    assert (kind, alpha, delta) == (bounds.COND_B, 2.0, 3.0)
    assert delta / (alpha + delta) == pytest.approx(0.6)
    assert bounds.check_dichotomy([1.0], [5.0]) == (bounds.COND_A, 1.0, 4.0)
    kind, alpha, _ = bounds.check_dichotomy([1.0, 5.0], [3.0])
    assert kind is None and math.isnan(alpha)


@given(st.lists(st.floats(1e-2, 1e2), min_size=1, max_size=5),
       st.lists(st.floats(1e-2, 1e2), min_size=1, max_size=5), st.booleans())
def test_separation_ratio_dominates_relgap_p(a, b, below):
    a, b = sorted(a), sorted(b)
    # shift b so that the two sets are separated
    shift = (max(a) - min(b) + 1.0) if below else -(max(b) - min(a) + 1.0)
    b = [x + shift for x in b]
    if min(b) <= 0:
        return
    g = bounds.gap_report([1.0], [2.0], a, b)
    assert g.dichotomy is not None
    for p in bounds.P_CHOICES:
        assert g.relgap_p[p] <= g.separation_ratio + 1e-12


def test_step1():
    assert bounds.bound_step1(0.0, 1.0) == 0.0
    assert bounds.bound_step1(0.1, 2 / np.sqrt(3)) == pytest.approx(0.0866025, abs=1e-7)
    with pytest.raises(ZeroGapError):
        bounds.bound_step1(0.1, 0.0)


def _gaps(lambda2=(3.0,), l1hat=(1.0,), l2hat=(3.0,), l1t=(1.0,)):
    return bounds.gap_report(list(lambda2), list(l1hat), list(l2hat), list(l1t))


def test_bound_main():
    g = _gaps()
    assert bounds.bound_main(0.0, 0.0, 0.0, g).total == 0.0
    rep = bounds.bound_main(0.1, 0.2, 0.25, g, p=1)
    assert rep.correction_factor == pytest.approx(np.sqrt(0.75) / np.sqrt(0.5))
    assert rep.correction_factor == pytest.approx(1.22474, abs=1e-5)
    assert rep.step2 == pytest.approx(0.2 / 0.5)
    assert rep.total == pytest.approx(rep.step1 + rep.step2 * rep.correction_factor, rel=1e-14)
    assert rep.norm_kind == "spectral"
    with pytest.raises(EtaTooLargeError):
        bounds.bound_main(0.1, 0.1, 0.5, g)
    with pytest.raises(DichotomyViolatedError):
        bounds.bound_main(0.1, 0.1, 0.1, _gaps(l2hat=(1.0, 5.0), l1t=(3.0,)))
    with pytest.raises(ZeroGapError):
        bounds.bound_main(0.1, 0.1, 0.1, _gaps(lambda2=(1.0,)))


def test_bound_main_phi():
    g = _gaps()
    assert bounds.bound_main_phi(0.0, 0.0, 0.0, 0.0, g).total == 0.0
    rep = bounds.bound_main_phi(0.1, 0.0, 0.19, 0.0, g)
    assert rep.step1 == pytest.approx(0.1 / bounds.rel_gap([3.0], [1.0]) / 0.9)
    with pytest.raises(EtaHTooLargeError):
        bounds.bound_main_phi(0.1, 0.1, 1.0, 0.1, g)
    with pytest.raises(EtaTooLargeError):
        bounds.bound_main_phi(0.1, 0.1, 0.1, 0.6, g)


def test_bound_frobenius():
    assert bounds.bound_frobenius(0.0, 0.0, 1.0, 1.0).total == 0.0
    rep = bounds.bound_frobenius(0.01, 0.02, 1.0, 2.0)
    assert rep.total == pytest.approx(0.02)
    assert rep.norm_kind == "frobenius" and rep.correction_factor == 1.0
    rep = bounds.bound_frobenius(0.01, 0.02, 1.0, 2.0, etaM=0.25)
    assert rep.total == pytest.approx(0.01 + 0.01 * np.sqrt(0.75 / 0.5))
    with pytest.raises(ZeroGapError):
        bounds.bound_frobenius(0.1, 0.1, 1.0, 0.0)


def test_frobenius_survives_interlacing():
    g = _gaps(l2hat=(1.0, 5.0), l1t=(3.0,))
    with pytest.raises(DichotomyViolatedError):
        bounds.bound_main(0.1, 0.1, 0.1, g)
    rep = bounds.bound_frobenius(0.1, 0.1, g.relgap, g.relgap_comp)
    assert math.isfinite(rep.total) and rep.total > 0


def test_sylvester_examples():
    Z = bounds.sylvester_diag_solve([3.0], [1.0], np.array([[1.0]]))
    assert Z[0, 0] == pytest.approx(-0.5)
    assert not np.any(bounds.sylvester_diag_solve([3.0, 4.0], [1.0], np.zeros((2, 1))))
    with pytest.raises(ResonantSpectraError):
        bounds.sylvester_diag_solve([1.0, 2.0], [2.0], np.ones((2, 1)))


@given(st.integers(0, 2**32 - 1), st.integers(1, 6), st.integers(1, 6))
def test_sylvester_residual_and_bound(seed, m, k):
    rng = np.random.default_rng(seed)
    a = 10 ** rng.uniform(-2, 2, m)
    b = 10 ** rng.uniform(-2, 2, k)
    C = rng.standard_normal((m, k))
    Z = bounds.sylvester_diag_solve(a, b, C)
    R = np.diag(a) @ Z - Z @ np.diag(b) + C @ np.diag(b)
    scale = np.linalg.norm(C) * max(a.max(), b.max())
    assert np.max(np.abs(R)) <= 1e-12 * scale
    assert np.linalg.norm(Z) <= np.linalg.norm(C) / bounds.rel_gap_comp(a, b) * (1 + 1e-12)


def test_crawford_examples():
    assert bounds.crawford(np.eye(3), np.eye(3)) == pytest.approx(np.sqrt(2), rel=1e-8)
    assert bounds.crawford(np.diag([1.0, 2.0]), np.eye(2)) == pytest.approx(np.sqrt(2), rel=1e-8)
    res = bounds.crawford(np.diag([1.0, 2.0]), np.eye(2), full_output=True)
    assert res.gamma <= res.upper * (1 + 1e-12)
    assert res.upper - res.gamma <= 1e-8 * res.upper


def test_crawford_indefinite():
    with pytest.raises(IndefinitePairError):
        bounds.crawford(np.diag([1.0, -1.0]), np.zeros((2, 2)))


def _crawford_brute(H, M, samples=200000):
    # minimize |x^T (H + iM) x| over random unit vectors plus the eigenvectors
    rng = np.random.default_rng(0)
    x = rng.standard_normal((H.shape[0], samples))
    x /= np.linalg.norm(x, axis=0)
    return np.min(np.hypot(np.einsum("ij,ij->j", x, H @ x), np.einsum("ij,ij->j", x, M @ x)))


@pytest.mark.parametrize("seed", range(3))
def test_crawford_against_sampling(seed):
    rng = np.random.default_rng(seed)
    H = rng.standard_normal((3, 3))
    H = H + H.T
    M = rand_spd(rng, 3)
    gamma = bounds.crawford(H, M)
    # sampling over-estimates the minimum but stays close in 3 dimensions
    brute = _crawford_brute(H, M)
    assert gamma <= brute * (1 + 1e-8)
    assert gamma >= 0.98 * brute


def test_crawford_large_path():
    rng = np.random.default_rng(1)
    n = 420
    H = rand_spd(rng, n, 2.0)
    M = np.diag(np.arange(1.0, n + 1.0))
    dense = bounds._DENSE_LMIN_MAX
    try:
        bounds._DENSE_LMIN_MAX = 10**9
        ref = bounds.crawford(H, M)
    finally:
        bounds._DENSE_LMIN_MAX = dense
    assert bounds.crawford(H, M) == pytest.approx(ref, rel=1e-7)


def test_chordal_gap():
    assert bounds.chordal_gap([1.0], [3.0]) == pytest.approx(2 / (np.sqrt(2) * np.sqrt(10)))
    assert bounds.chordal_gap([1.0], [3.0]) == pytest.approx(0.44721, abs=1e-5)


def test_sun_bound_zero_and_errors():
    H, M = np.diag([1.0, 3.0]), np.eye(2)
    X1 = np.array([[1.0], [0.0]])
    z = np.zeros((2, 2))
    assert bounds.sun_bound(H, M, z, z, X1, [1.0], [3.0]) == 0.0
    with pytest.raises(ZeroChordalGapError):
        bounds.sun_bound(H, M, z, z, X1, [1.0], [1.0])
    rep = bounds.sun_bound(H, M, 0.01 * H, z, X1, [1.0], [3.03], full_output=True)
    assert rep.gamma == pytest.approx(np.sqrt(2), rel=1e-8)
    assert rep.total > 0


def test_zero_perturbation_analysis():
    H, M = rand_pair(np.random.default_rng(0), 5)
    res = analysis.analyze(H, M, H, M, 2, with_sun=True)
    assert res.exact.norm2 < 1e-12
    assert res.spectral.total == 0.0 and res.frobenius.total == 0.0
    assert res.sun.total == 0.0
    assert math.isnan(res.quotient(res.spectral))


# Bound validity on random instances ------------------------------------------

def _instance(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 9))
    k = int(rng.integers(1, n))
    H, M = rand_pair(rng, n)
    Ht = H + rel_perturbation(rng, H, rng.uniform(0, 0.1))
    Mt = M + rel_perturbation(rng, M, rng.uniform(0, 0.1))
    return H, M, Ht, Mt, k


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=60, deadline=None)
def test_validity(seed):
    res = analysis.analyze(*_instance(seed))
    slack = 1e-12
    for rep, exact in ((res.spectral, res.exact.norm2), (res.phi, res.exact.norm2),
                       (res.frobenius_corrected, res.exact.normF)):
        if rep.applicable:
            assert exact <= rep.total + slack


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=60, deadline=None)
def test_step1_isolated(seed):
    H, M, Ht, _, k = _instance(seed)
    res = analysis.analyze(H, M, Ht, M, k)
    g = res.gaps.relgap
    assert res.step1_exact.norm2 <= res.measure_h.psi2 / g + 1e-12
    assert res.step1_exact.normF <= res.measure_h.psiF / g + 1e-12
    assert res.exact.norm2 == pytest.approx(res.step1_exact.norm2, abs=1e-10)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=60, deadline=None)
def test_step2_isolated(seed):
    H, M, _, Mt, k = _instance(seed)
    res = analysis.analyze(H, M, H, Mt, k)
    if res.gaps.dichotomy is None:
        return
    for p in bounds.P_CHOICES:
        assert res.step2_raw.norm2 <= res.measure_m.psi2 / res.gaps.relgap_p[p] + 1e-12


def test_step2_exact_matches_total_when_h_fixed():
    H, M, _, Mt, k = _instance(3)
    res = analysis.analyze(H, M, H, Mt, k)
    np.testing.assert_allclose(res.step2_exact.sines, res.exact.sines, atol=1e-10)


# The Frobenius bound as stated leaves out the factor that accounts for the
# change of inner product; this instance (found by random search) exceeds it.
COUNTER_H = [[0.8284647205702501, -0.15473493206242225],
             [-0.15473493206242225, 0.04342138217439725]]
COUNTER_M = [[0.7445599397547275, -0.13900988344577347],
             [-0.13900988344577347, 0.039024769176817346]]
COUNTER_MT = [[0.7957156968538819, -0.15063347963291884],
              [-0.15063347963291884, 0.04163790949054188]]


def test_frobenius_counterexample():
    H, M, Mt = (np.array(a) for a in (COUNTER_H, COUNTER_M, COUNTER_MT))
    res = analysis.analyze(H, M, H, Mt, 1)
    assert res.measure_m.eta < 0.1
    # the Sylvester part is respected ...
    assert res.step2_raw.normF <= res.frobenius.total
    # ... but the angle itself is not
    assert res.exact.normF > res.frobenius.total * 1.03
    assert res.exact.normF <= res.frobenius_corrected.total
