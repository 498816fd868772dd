"""Sines of canonical angles between equal-dimensional subspaces.

Angles are measured either in the Euclidean inner product or in the
weighted one ``(x, y)_M = x^T M y``.  Weighted angles are reduced to
Euclidean ones through the congruence ``x -> L^T x`` with ``M = L L^T``;
any factor of ``M`` gives the same singular values, so the Cholesky factor
stands in for ``M^{1/2}``.
"""
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .core import cholesky, symmetrize
from .errors import (
    CorrectionNotPDError,
    DimensionMismatchError,
    NotMOrthonormalError,
    NotOrthonormalError,
    NotPositiveDefiniteError,
    SingularCorrectionError,
)

ORTH_TOL = 1e-10
M_ORTH_TOL = 1e-8


@dataclass(frozen=True)
class AngleReport:
    sines: np.ndarray
    norm2: float
    normF: float
    k: int

    @classmethod
    def from_sines(cls, sines, k=None):
        s = np.sort(np.asarray(sines, dtype=float))[::-1]
        k = s.size if k is None else int(k)
        if s.size < k:
            s = np.concatenate([s, np.zeros(k - s.size)])
        return cls(
            sines=s,
            norm2=float(s[0]) if s.size else 0.0,
            normF=float(np.sqrt(np.sum(s * s))),
            k=k,
        )

    def norm(self, kind="2"):
        return self.norm2 if str(kind) == "2" else self.normF


@dataclass(frozen=True)
class CholCorrection:
    """Factor ``Y11`` with ``Y11 @ Y11.T == I - X1~^T dM X1~``."""

    Y11: np.ndarray
    applied_inverse: bool


def _as_basis(X, name):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise DimensionMismatchError(f"{name} must be a 2-d basis")
    return X


def _check_pair(X, Y):
    if X.shape != Y.shape:
        raise DimensionMismatchError(f"basis shapes differ: {X.shape} vs {Y.shape}")
    if X.shape[1] > X.shape[0]:
        raise DimensionMismatchError("subspace dimension exceeds ambient dimension")


def _orth_defect(G):
    return float(np.max(np.abs(G - np.eye(G.shape[0])), initial=0.0))


def _principal_sines(Q, W):
    # Q, W have orthonormal columns; re-orthonormalize to machine precision
    Q, _ = np.linalg.qr(Q)
    W, _ = np.linalg.qr(W)
    return np.linalg.svd(W - Q @ (Q.T @ W), compute_uv=False)


def sin_theta_euclid(X, Y, *, tol=ORTH_TOL):
    """Sines of canonical angles between ``Ran X`` and ``Ran Y``.

    Both bases must be Euclidean-orthonormal.  The sines are the singular
    values of ``(I - X X^T) Y``.
    """
    X = _as_basis(X, "X")
    Y = _as_basis(Y, "Y")
    _check_pair(X, Y)
    for name, B in (("X", X), ("Y", Y)):
        if _orth_defect(B.T @ B) > tol:
            raise NotOrthonormalError(f"{name} does not have orthonormal columns")
    return AngleReport.from_sines(_principal_sines(X, Y), X.shape[1])


def sin_theta_M(X1, Y1, M, *, tol=M_ORTH_TOL, factor=None):
    """Sines of canonical angles between ``Ran X1`` and ``Ran Y1`` in the M-inner product.

    Both bases must be M-orthonormal to ``tol``.  The sines are the
    singular values of ``M^{1/2} (I - X1 X1^T M) Y1``.  ``factor`` may pass
    a precomputed lower Cholesky factor of ``M``.
    """
    X1 = _as_basis(X1, "X1")
    Y1 = _as_basis(Y1, "Y1")
    _check_pair(X1, Y1)
    M = np.asarray(M, dtype=float)
    if M.shape != (X1.shape[0], X1.shape[0]):
        raise DimensionMismatchError("M does not match the basis dimension")
    L = cholesky(M) if factor is None else factor
    A = L.T @ X1
    B = L.T @ Y1
    for name, C in (("X1", A), ("Y1", B)):
        if _orth_defect(C.T @ C) > tol:
            raise NotMOrthonormalError(f"{name} is not M-orthonormal")
    return AngleReport.from_sines(_principal_sines(A, B), X1.shape[1])


def m_orthonormalize(B, M, *, factor=None):
    """M-orthonormal basis of ``Ran B`` (columns of ``B`` must be independent)."""
    B = _as_basis(B, "B")
    L = cholesky(M) if factor is None else factor
    Q, R = np.linalg.qr(L.T @ B)
    if np.min(np.abs(np.diagonal(R)), initial=np.inf) <= 1e-14 * np.max(np.abs(R)):
        raise DimensionMismatchError("basis columns are linearly dependent")
    return solve_triangular(L, Q, lower=True, trans="T")


def chol_correction(Xtilde, deltaM, k, *, factor="cholesky"):
    """Factor of the leading ``k x k`` block of ``I - X~^T dM X~``.

    ``factor="sqrt"`` returns the principal square root instead of the
    triangular Cholesky factor; both produce the same angles.
    """
    Xtilde = _as_basis(Xtilde, "Xtilde")
    deltaM = np.asarray(deltaM, dtype=float)
    if deltaM.shape != (Xtilde.shape[0],) * 2:
        raise DimensionMismatchError("deltaM does not match Xtilde")
    if not 1 <= k <= Xtilde.shape[1]:
        raise DimensionMismatchError(f"k={k} out of range")
    X1 = Xtilde[:, :k]
    G = symmetrize(np.eye(k) - X1.T @ deltaM @ X1)
    trivial = not np.any(deltaM)
    if factor == "cholesky":
        try:
            Y11 = cholesky(G)
        except NotPositiveDefiniteError as exc:
            raise CorrectionNotPDError(
                "I - X~^T dM X~ is not positive definite; perturbation too large",
                pivot=exc.pivot,
            ) from None
    elif factor == "sqrt":
        w, V = np.linalg.eigh(G)
        if w.min() <= 0:
            raise CorrectionNotPDError(
                "I - X~^T dM X~ is not positive definite; perturbation too large"
            )
        Y11 = symmetrize((V * np.sqrt(w)) @ V.T)
    else:
        raise ValueError(f"unknown factor {factor!r}")
    return CholCorrection(Y11=Y11, applied_inverse=not trivial)


def sin_theta_M_corrected(Xhat2, M, Xtilde1, corr):
    """Sines from ``Xhat2^T M Xtilde1 Y11^{-T}`` (angles after a change of inner product)."""
    Xhat2 = _as_basis(Xhat2, "Xhat2")
    Xtilde1 = _as_basis(Xtilde1, "Xtilde1")
    M = np.asarray(M, dtype=float)
    n, k = Xtilde1.shape
    if Xhat2.shape[0] != n or M.shape != (n, n) or corr.Y11.shape != (k, k):
        raise DimensionMismatchError("inconsistent dimensions for corrected angle")
    Y = corr.Y11
    d = np.abs(np.linalg.eigvals(Y)) if not np.allclose(Y, np.tril(Y)) else np.abs(np.diagonal(Y))
    if d.size and d.min() <= np.finfo(float).eps * k * d.max():
        raise SingularCorrectionError("correction factor Y11 is numerically singular")
    S = Xhat2.T @ (M @ Xtilde1)
    # S Y^{-T} = (Y^{-1} S^T)^T
    S = np.linalg.solve(Y, S.T).T
    return AngleReport.from_sines(np.linalg.svd(S, compute_uv=False), k)
