"""Relative distances between SPD matrices, mass lumping and random perturbations."""
from dataclasses import dataclass

import numpy as np
import scipy.sparse.linalg as spla
from scipy.linalg import eigh, solve_triangular

from .core import _check_finite, cholesky, symmetrize
from .errors import EtaOutOfRangeError, NotPositiveDefiniteError

# above this size spectral norms come from a Lanczos iteration instead of a full SVD
DENSE_NORM_MAX = 400


def spectral_norm(A, *, symmetric=False):
    """Largest singular value of a dense matrix."""
    A = np.asarray(A, dtype=float)
    if A.size == 0:
        return 0.0
    if min(A.shape) <= DENSE_NORM_MAX:
        if symmetric:
            return float(np.max(np.abs(np.linalg.eigvalsh(symmetrize(A)))))
        return float(np.linalg.norm(A, 2))
    v0 = np.ones(min(A.shape))
    if symmetric:
        w = spla.eigsh(symmetrize(A), k=1, which="LM", v0=v0, return_eigenvectors=False)
        return float(np.abs(w[0]))
    s = spla.svds(A, k=1, v0=v0, return_singular_vectors=False)
    return float(s[0])


@dataclass(frozen=True)
class RelMeasure:
    """Relative size of ``A - A~`` in the congruences built from ``A`` and ``A~``.

    ``eta``/``phi*`` use ``A^{-1/2}(A - A~)A^{-1/2}``; ``psi*`` use
    ``A^{-1/2}(A - A~)A~^{-1/2}``.
    """

    eta: float
    psi2: float
    psiF: float
    phi2: float
    phiF: float


def measure(A, Atilde):
    """Relative perturbation measures of ``A -> Atilde`` (both SPD).

    Evaluated with Cholesky factors: ``A^{-1/2} = Q L^{-1}`` for an
    orthogonal ``Q``, so every unitarily invariant norm is unchanged.
    """
    A = np.asarray(A, dtype=float)
    Atilde = np.asarray(Atilde, dtype=float)
    L = cholesky(A)
    Lt = cholesky(Atilde)
    E = A - Atilde
    W = solve_triangular(L, E, lower=True)
    sym = symmetrize(solve_triangular(L, W.T, lower=True))
    psi = solve_triangular(Lt, W.T, lower=True).T
    eta = spectral_norm(sym, symmetric=True)
    return RelMeasure(
        eta=eta,
        psi2=spectral_norm(psi),
        psiF=float(np.linalg.norm(psi, "fro")),
        phi2=eta,
        phiF=float(np.linalg.norm(sym, "fro")),
    )


def _check_eta(eta):
    if not (0.0 <= eta < 1.0):
        raise EtaOutOfRangeError(f"eta must lie in [0, 1), got {eta}")


def psi_bound_from_eta(eta):
    """Upper bound ``eta / sqrt(1 - eta)`` on the spectral psi measure."""
    _check_eta(eta)
    return eta / np.sqrt(1.0 - eta)


def eta_of_inverse(eta):
    """Relative distance of the inverses: ``eta / (1 - eta)``."""
    _check_eta(eta)
    return eta / (1.0 - eta)


def lump(M, D):
    """Scaled copy of ``D`` closest to ``M`` in the relative sense.

    With ``d0 <= x^T M x / x^T D x <= d1`` the matrix ``(d0 + d1)/2 * D``
    differs from ``M`` by at most ``(d1 - d0)/(d1 + d0)`` relatively.
    Returns ``(Mtilde, eta)``.
    """
    M = np.asarray(M, dtype=float)
    D = np.asarray(D, dtype=float)
    cholesky(M)
    L = cholesky(D)
    C = solve_triangular(L, M, lower=True)
    C = symmetrize(solve_triangular(L, C.T, lower=True))
    w = eigh(C, eigvals_only=True)
    d0, d1 = float(w[0]), float(w[-1])
    scale = 0.5 * (d0 + d1)
    return scale * D, (d1 - d0) / (d1 + d0)


def entrywise_perturb(A, eta_rel, seed):
    """Symmetric random ``dA`` with ``|dA_ij| <= eta_rel * |A_ij|``.

    Entries are uniform on ``[-eta_rel |A_ij|, eta_rel |A_ij|]``; zeros of
    ``A`` stay zero.  Deterministic for a given seed.
    """
    A = np.asarray(A, dtype=float)
    _check_finite(A)
    if eta_rel < 0:
        raise ValueError("eta_rel must be non-negative")
    rng = np.random.default_rng(seed)
    n = A.shape[0]
    U = rng.uniform(-1.0, 1.0, size=(n, n))
    dA = np.tril(eta_rel * np.abs(A) * U)
    return dA + np.tril(dA, -1).T


def perturb_spd(A, eta_rel, seed, *, retries=8):
    """Entrywise perturbation that keeps ``A + dA`` positive definite.

    Resamples with ``seed + 1, seed + 2, ...`` (at most ``retries`` times)
    and returns ``(dA, seed_used)``.
    """
    for attempt in range(retries + 1):
        s = seed + attempt
        dA = entrywise_perturb(A, eta_rel, s)
        try:
            cholesky(A + dA)
        except NotPositiveDefiniteError:
            continue
        return dA, s
    raise NotPositiveDefiniteError(
        f"perturbed matrix not positive definite after {retries} resamples"
    )
