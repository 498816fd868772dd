"""Dense SPD kernels and simultaneous diagonalization of definite pairs.

Matrices are plain ``float64`` numpy arrays.  :func:`as_sym` is the single
entry point that turns user input into a validated symmetric matrix; all
other functions assume their inputs went through it (or were produced by
this package).
"""
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh, get_lapack_funcs, solve_triangular

from .errors import (
    BadBlockSizeError,
    ConvergenceFailureError,
    DimensionMismatchError,
    NonFiniteError,
    NotPositiveDefiniteError,
)

TOL_PD = 1e-14
SYM_RTOL = 1e-12


class AsymmetricError(DimensionMismatchError):
    pass


def as_sym(a, *, rtol=SYM_RTOL, name="matrix"):
    """Return a read-only symmetric copy of ``a``.

    The lower triangle is mirrored into the upper one, so the result is
    exactly symmetric.  Input that is not symmetric to ``rtol`` (relative to
    its largest entry) is rejected.
    """
    a = np.array(a, dtype=float, copy=True)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatchError(f"{name} must be square, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NonFiniteError(f"{name} has non-finite entries")
    scale = np.max(np.abs(a), initial=0.0)
    if np.max(np.abs(a - a.T), initial=0.0) > rtol * scale:
        raise AsymmetricError(f"{name} is not symmetric")
    a = np.tril(a) + np.tril(a, -1).T
    a.flags.writeable = False
    return a


def symmetrize(a):
    """Average ``a`` with its transpose (removes rounding asymmetry)."""
    return 0.5 * (a + a.T)


def _check_finite(a, name="matrix"):
    if not np.all(np.isfinite(a)):
        raise NonFiniteError(f"{name} has non-finite entries")


def _is_diagonal(a):
    return np.count_nonzero(a - np.diag(np.diagonal(a))) == 0


def spd_check(a):
    """Smallest eigenvalue of symmetric ``a``; ``<= 0`` means not SPD."""
    a = np.asarray(a, dtype=float)
    _check_finite(a)
    if _is_diagonal(a):
        return float(np.min(np.diagonal(a)))
    return float(eigh(a, eigvals_only=True, subset_by_index=[0, 0])[0])


_potrf = get_lapack_funcs("potrf", (np.empty(0),))


def cholesky(a):
    """Lower Cholesky factor ``L`` with ``L @ L.T == a``.

    Raises :class:`NotPositiveDefiniteError` carrying the 0-based index of
    the first non-positive pivot.
    """
    a = np.asarray(a, dtype=float)
    _check_finite(a)
    if a.shape[0] == 0:
        return a.copy()
    c, info = _potrf(a, lower=1, clean=1, overwrite_a=0)
    if info > 0:
        raise NotPositiveDefiniteError(
            f"matrix is not positive definite (leading minor of order {info})", pivot=info - 1
        )
    if info < 0:
        raise ValueError(f"illegal argument to potrf ({info})")
    return c


def _spd_eig(a):
    a = np.asarray(a, dtype=float)
    _check_finite(a)
    if _is_diagonal(a):
        w = np.diagonal(a).copy()
        v = None
    else:
        w, v = eigh(a)
    norm = np.max(np.abs(w), initial=0.0)
    if w.size and w.min() <= TOL_PD * norm:
        raise NotPositiveDefiniteError(
            f"matrix is not positive definite (lambda_min = {w.min():.3e})"
        )
    return w, v


def _from_eig(w, v, f):
    if v is None:
        return np.diag(f(w))
    return symmetrize((v * f(w)) @ v.T)


def spd_sqrt(a):
    """Principal square root of an SPD matrix."""
    w, v = _spd_eig(a)
    return _from_eig(w, v, np.sqrt)


def spd_inv_sqrt(a):
    """Inverse of the principal square root of an SPD matrix."""
    w, v = _spd_eig(a)
    return _from_eig(w, v, lambda x: 1.0 / np.sqrt(x))


def spd_inv(a):
    """Inverse of an SPD matrix through its eigendecomposition."""
    w, v = _spd_eig(a)
    return _from_eig(w, v, np.reciprocal)


@dataclass(frozen=True)
class PairEigen:
    """Simultaneous diagonalization ``X.T @ H @ X = diag(lam)``, ``X.T @ M @ X = I``."""

    X: np.ndarray
    lam: np.ndarray
    residual: float

    @property
    def n(self):
        return self.lam.size


@dataclass(frozen=True)
class Partition:
    k: int
    X1: np.ndarray
    X2: np.ndarray
    lambda1: np.ndarray
    lambda2: np.ndarray


def normalize_signs(X):
    """Flip columns so the largest-magnitude entry of each is positive."""
    X = np.array(X, dtype=float, copy=True)
    if X.size == 0:
        return X
    idx = np.argmax(np.abs(X), axis=0)
    signs = np.sign(X[idx, np.arange(X.shape[1])])
    signs[signs == 0] = 1.0
    return X * signs


RESIDUAL_BLOCK = 512


def pair_eigendecompose(H, M, *, check_h=True):
    """Diagonalize the definite pair ``(H, M)`` with ascending eigenvalues.

    Reduces through the Cholesky factor of ``M`` to the symmetric matrix
    ``L^{-1} H L^{-T}`` and back-transforms its eigenvectors.
    """
    H = np.asarray(H, dtype=float)
    M = np.asarray(M, dtype=float)
    if H.shape != M.shape or H.ndim != 2:
        raise DimensionMismatchError(f"pair shapes differ: {H.shape} vs {M.shape}")
    _check_finite(H, "H")
    if check_h:
        try:
            cholesky(H)
        except NotPositiveDefiniteError as exc:
            raise NotPositiveDefiniteError(f"H: {exc}", pivot=exc.pivot) from None
    try:
        L = cholesky(M)
    except NotPositiveDefiniteError as exc:
        raise NotPositiveDefiniteError(f"M: {exc}", pivot=exc.pivot) from None

    C = solve_triangular(L, H, lower=True)
    C = solve_triangular(L, C.T, lower=True)
    try:
        lam, U = eigh(symmetrize(C))
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailureError(str(exc)) from None
    X = solve_triangular(L, U, lower=True, trans="T")
    X = normalize_signs(X)

    scale_h = np.linalg.norm(H, 2 if H.shape[0] <= 200 else "fro")
    scale_m = np.linalg.norm(M, 2 if M.shape[0] <= 200 else "fro")
    residual = 0.0
    # column blocks keep the residual workspace small for large n
    for s in range(0, X.shape[1], RESIDUAL_BLOCK):
        Xb, lb = X[:, s:s + RESIDUAL_BLOCK], lam[s:s + RESIDUAL_BLOCK]
        R = H @ Xb - (M @ Xb) * lb
        rel = np.linalg.norm(R, axis=0) / ((scale_h + np.abs(lb) * scale_m)
                                           * np.linalg.norm(Xb, axis=0))
        residual = max(residual, float(np.max(rel, initial=0.0)))
    X.flags.writeable = False
    lam.flags.writeable = False
    return PairEigen(X=X, lam=lam, residual=residual)


def partition(E, k, *, from_top=False):
    """Split ``E`` into the ``k``-dimensional block and its complement.

    By default the block holds the ``k`` smallest eigenvalues.  With
    ``from_top`` it holds the ``k`` largest (listed in descending order),
    which is how eigenvalue maps that reverse the ordering are handled.
    """
    n = E.lam.size
    if not (isinstance(k, (int, np.integer)) and 1 <= k < n):
        raise BadBlockSizeError(f"block size must satisfy 1 <= k < n={n}, got {k}")
    X, lam = E.X, E.lam
    if from_top:
        X, lam = X[:, ::-1], lam[::-1]
    return Partition(k=int(k), X1=X[:, :k], X2=X[:, k:], lambda1=lam[:k], lambda2=lam[k:])


def split_is_close(E, k, rtol=1e-12, *, from_top=False):
    """True when the split at ``k`` separates (numerically) tied eigenvalues."""
    lam = E.lam
    if not 1 <= k < lam.size:
        return False
    i = lam.size - k if from_top else k
    return bool(lam[i] - lam[i - 1] < rtol * np.max(np.abs(lam)))
