"""Relative gaps and sin-theta bounds for perturbed definite pairs.

Naming follows the two-step scheme used throughout the package:

* ``(H, M)``  -> ``X, lambda``          unperturbed pair
* ``(H~, M)`` -> ``X^, lambda^``        intermediate pair (only H perturbed)
* ``(H~, M~)`` -> ``X~, lambda~``       perturbed pair

Subscript 1 marks the selected ``k``-dimensional block, subscript 2 its
complement.
"""
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg as spla
from scipy.linalg import cho_solve, eigh

from .core import cholesky, symmetrize
from .errors import (
    BadPError,
    DichotomyViolatedError,
    EmptySpectrumError,
    EtaHTooLargeError,
    EtaTooLargeError,
    IndefinitePairError,
    NotPositiveDefiniteError,
    ResonantSpectraError,
    ZeroChordalGapError,
    ZeroGapError,
)
from .perturb import spectral_norm

P_CHOICES = (1, 2, math.inf)
COND_A = "A"
COND_B = "B"


def parse_p(p):
    """Normalize ``p`` to one of ``1``, ``2``, ``math.inf``."""
    if isinstance(p, str):
        key = p.strip().lower()
        table = {"1": 1, "2": 2, "inf": math.inf, "infinity": math.inf, "∞": math.inf}
        if key not in table:
            raise BadPError(f"p must be one of 1, 2, inf; got {p!r}")
        return table[key]
    if p in P_CHOICES:
        return math.inf if p == math.inf else int(p)
    raise BadPError(f"p must be one of 1, 2, inf; got {p!r}")


def _spectra(a, b):
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size == 0 or b.size == 0:
        raise EmptySpectrumError("both spectra must be non-empty")
    if np.any(a <= 0) or np.any(b <= 0):
        raise ValueError("relative gaps need positive eigenvalues")
    return a[:, None], b[None, :]


def rel_gap(lambda2, lambda1hat):
    """``min |l_i - m_j| / sqrt(l_i m_j)`` over ``l`` in ``lambda2``, ``m`` in ``lambda1hat``."""
    a, b = _spectra(lambda2, lambda1hat)
    return float(np.min(np.abs(a - b) / np.sqrt(a * b)))


def rel_gap_p(lambda2hat, lambda1tilde, p=math.inf):
    """``min |l_i - m_j| / (l_i^p + m_j^p)^(1/p)``; ``p = inf`` uses ``max(l_i, m_j)``."""
    p = parse_p(p)
    a, b = _spectra(lambda2hat, lambda1tilde)
    if p == math.inf:
        den = np.maximum(a, b)
    elif p == 1:
        den = a + b
    else:
        den = np.hypot(a, b)
    return float(np.min(np.abs(a - b) / den))


def rel_gap_comp(lambda2hat, lambda1tilde):
    """``min |l_i - m_j| / m_j`` (componentwise gap used by the Frobenius bound)."""
    a, b = _spectra(lambda2hat, lambda1tilde)
    return float(np.min(np.abs(a - b) / b))


def check_dichotomy(lambda2hat, lambda1tilde):
    """Classify the spectral configuration required by the spectral-norm step 2.

    Returns ``(kind, alpha, delta)`` where ``kind`` is ``"A"`` when
    ``lambda2hat`` lies entirely below ``lambda1tilde``, ``"B"`` when it lies
    entirely above, and ``None`` for interlaced spectra (``alpha`` and
    ``delta`` are then NaN).
    """
    a = np.asarray(lambda2hat, dtype=float).ravel()
    b = np.asarray(lambda1tilde, dtype=float).ravel()
    if a.size == 0 or b.size == 0:
        raise EmptySpectrumError("both spectra must be non-empty")
    if a.max() <= b.min():
        alpha = float(a.max())
        return COND_A, alpha, float(b.min()) - alpha
    if b.max() <= a.min():
        alpha = float(b.max())
        return COND_B, alpha, float(a.min()) - alpha
    return None, math.nan, math.nan


@dataclass(frozen=True)
class GapReport:
    relgap: float
    relgap_p: dict
    relgap_comp: float
    alpha: float
    delta_sep: float
    dichotomy: object

    @property
    def separation_ratio(self):
        """``delta / (alpha + delta)``, an upper bound for every ``relgap_p``."""
        if self.dichotomy is None:
            return math.nan
        return self.delta_sep / (self.alpha + self.delta_sep)


def gap_report(lambda2, lambda1hat, lambda2hat, lambda1tilde):
    kind, alpha, delta = check_dichotomy(lambda2hat, lambda1tilde)
    return GapReport(
        relgap=rel_gap(lambda2, lambda1hat),
        relgap_p={p: rel_gap_p(lambda2hat, lambda1tilde, p) for p in P_CHOICES},
        relgap_comp=rel_gap_comp(lambda2hat, lambda1tilde),
        alpha=alpha,
        delta_sep=delta,
        dichotomy=kind,
    )


@dataclass(frozen=True)
class BoundReport:
    step1: float
    step2: float
    correction_factor: float
    total: float
    norm_kind: str
    applicable: bool = True
    reason: str = ""
    terms: dict = field(default_factory=dict)


def _positive_gap(value, name):
    if not value > 0:
        raise ZeroGapError(f"{name} is zero; spectra are not separated")


def bound_step1(psiH, relgap):
    """Rotation caused by perturbing ``H`` alone: ``psiH / relgap``."""
    _positive_gap(relgap, "relgap")
    return psiH / relgap


def _check_main(gaps, p, etaM):
    if not etaM < 0.5:
        raise EtaTooLargeError(f"eta_M = {etaM} must be below 1/2")
    if gaps.dichotomy is None:
        raise DichotomyViolatedError(
            "spectra are interlaced; the spectral-norm bound needs a dichotomy "
            "(use the Frobenius bound)"
        )
    _positive_gap(gaps.relgap, "relgap")
    _positive_gap(gaps.relgap_p[p], f"relgap_p (p={p})")


def bound_main(psiH, psiM, etaM, gaps, p=math.inf):
    """Spectral-norm bound on the M-weighted rotation of the ``k``-block.

    ``psiH/relgap + psiM/relgap_p * sqrt(1 - etaM)/sqrt(1 - 2 etaM)``.
    """
    p = parse_p(p)
    _check_main(gaps, p, etaM)
    step1 = psiH / gaps.relgap
    step2 = psiM / gaps.relgap_p[p]
    cf = math.sqrt(1.0 - etaM) / math.sqrt(1.0 - 2.0 * etaM)
    return BoundReport(
        step1=step1,
        step2=step2,
        correction_factor=cf,
        total=step1 + step2 * cf,
        norm_kind="spectral",
        terms={"psiH": psiH, "psiM": psiM, "etaM": etaM, "relgap": gaps.relgap,
               "relgap_p": gaps.relgap_p[p], "p": p},
    )


def bound_main_phi(phiH, phiM, etaH, etaM, gaps, p=math.inf):
    """Variant of :func:`bound_main` in terms of the symmetric measures ``phi``."""
    p = parse_p(p)
    if not etaH < 1.0:
        raise EtaHTooLargeError(f"eta_H = {etaH} must be below 1")
    _check_main(gaps, p, etaM)
    step1 = phiH / (gaps.relgap * math.sqrt(1.0 - etaH))
    step2 = phiM / gaps.relgap_p[p]
    cf = 1.0 / math.sqrt(1.0 - 2.0 * etaM)
    return BoundReport(
        step1=step1,
        step2=step2,
        correction_factor=cf,
        total=step1 + step2 * cf,
        norm_kind="spectral",
        terms={"phiH": phiH, "phiM": phiM, "etaH": etaH, "etaM": etaM,
               "relgap": gaps.relgap, "relgap_p": gaps.relgap_p[p], "p": p},
    )


def bound_frobenius(psiH_F, psiM_F, relgap, relgap_comp, etaM=None):
    """Frobenius-norm bound; needs no dichotomy, only positive gaps.

    As stated, ``total = psiH_F/relgap + psiM_F/relgap_comp``.  The second
    term bounds ``X^2* M X~1`` before the change of inner product, so the
    angle itself can exceed it slightly.  Passing ``etaM`` applies the same
    ``sqrt(1 - etaM)/sqrt(1 - 2 etaM)`` factor as the spectral bound, which
    covers that change.
    """
    _positive_gap(relgap, "relgap")
    _positive_gap(relgap_comp, "relgap_comp")
    cf = 1.0
    if etaM is not None:
        if not etaM < 0.5:
            raise EtaTooLargeError(f"eta_M = {etaM} must be below 1/2")
        cf = math.sqrt(1.0 - etaM) / math.sqrt(1.0 - 2.0 * etaM)
    step1 = psiH_F / relgap
    step2 = psiM_F / relgap_comp
    terms = {"psiH_F": psiH_F, "psiM_F": psiM_F, "relgap": relgap, "relgap_comp": relgap_comp}
    if etaM is not None:
        terms["etaM"] = etaM
    return BoundReport(
        step1=step1,
        step2=step2,
        correction_factor=cf,
        total=step1 + step2 * cf,
        norm_kind="frobenius",
        terms=terms,
    )


def sylvester_diag_solve(lambda2hat, lambda1tilde, C):
    """Solve ``diag(l) Z - Z diag(m) = -C diag(m)`` entrywise.

    ``Z_ij = -m_j / (l_i - m_j) * C_ij``.
    """
    a = np.asarray(lambda2hat, dtype=float).ravel()[:, None]
    b = np.asarray(lambda1tilde, dtype=float).ravel()[None, :]
    C = np.asarray(C, dtype=float)
    if C.shape != (a.shape[0], b.shape[1]):
        raise ValueError(f"C must have shape {(a.shape[0], b.shape[1])}, got {C.shape}")
    diff = a - b
    if np.any(diff == 0):
        raise ResonantSpectraError("some lambda^_i equals lambda~_j")
    return -(b / diff) * C


# Crawford number ------------------------------------------------------------

CRAWFORD_GRID = 720
CRAWFORD_RTOL = 1e-8
_DENSE_LMIN_MAX = 400
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


class _LambdaMin:
    """``theta -> lambda_min(cos(theta) H + sin(theta) M)`` with warm starts."""

    def __init__(self, H, M):
        self.H = H
        self.M = M
        self.n = H.shape[0]
        self.v = np.ones(self.n)
        self.calls = 0

    def __call__(self, theta):
        self.calls += 1
        A = math.cos(theta) * self.H + math.sin(theta) * self.M
        if self.n <= _DENSE_LMIN_MAX:
            return float(eigh(A, eigvals_only=True, subset_by_index=[0, 0])[0])
        try:
            L = cholesky(A)
        except NotPositiveDefiniteError:
            return float(eigh(A, eigvals_only=True, subset_by_index=[0, 0])[0])
        op = spla.LinearOperator(
            (self.n, self.n), matvec=lambda x: cho_solve((L, True), x), dtype=float
        )
        mu, vec = spla.eigsh(op, k=1, which="LA", v0=self.v, tol=1e-13)
        self.v = vec[:, 0]
        return float(1.0 / mu[0])


def _concave_upper(a, c, d, b, fa, fc, fd, fb):
    """Upper bound on max f over [a, b] for concave f sampled at a < c < d < b."""
    s_cd = (fd - fc) / (d - c)
    ub = max(fc - min(s_cd, 0.0) * (c - a), fd + max(s_cd, 0.0) * (b - d))
    s_ac = (fc - fa) / (c - a)
    s_db = (fb - fd) / (b - d)

    def envelope(x):
        return min(fc + s_ac * (x - c), fd + s_db * (x - d))

    cands = [c, d]
    if s_ac != s_db:
        x = (fd - fc - s_db * d + s_ac * c) / (s_ac - s_db)
        if c < x < d:
            cands.append(x)
    return max(ub, max(envelope(x) for x in cands))


def _golden(f, a, b, fa_fb, rtol, concave):
    """Golden-section maximization; returns ``(best, theta, upper)``."""
    fa, fb = fa_fb
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    while True:
        if fc >= fd:
            b, fb, d, fd = d, fd, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, fa, c, fc = c, fc, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
        best, theta = (fc, c) if fc >= fd else (fd, d)
        width_ok = b - a <= rtol * max(1.0, abs(a))
        if concave:
            upper = max(best, _concave_upper(a, c, d, b, fa, fc, fd, fb))
            if upper - best <= rtol * abs(best) or width_ok:
                return best, theta, upper
        elif width_ok:
            return best, theta, best


@dataclass(frozen=True)
class CrawfordResult:
    gamma: float
    theta: float
    upper: float
    evaluations: int


def crawford(H, M, *, grid=CRAWFORD_GRID, rtol=CRAWFORD_RTOL, full_output=False):
    """Crawford number ``min_{|x|=1} sqrt((x^T H x)^2 + (x^T M x)^2)``.

    Computed as ``max_theta lambda_min(cos(theta) H + sin(theta) M)``.  When
    both matrices are positive definite the maximizer lies in
    ``[0, pi/2]``, where the objective is concave, so golden-section search
    runs on that interval directly.  Otherwise a ``grid``-point scan of
    ``[0, 2 pi)`` brackets the maximum first.  With ``full_output`` a
    :class:`CrawfordResult` carrying a bracket ``[gamma, upper]`` is
    returned.
    """
    H = symmetrize(np.asarray(H, dtype=float))
    M = symmetrize(np.asarray(M, dtype=float))
    if H.shape != M.shape:
        raise ValueError("H and M must have the same shape")
    f = _LambdaMin(H, M)
    both_pd = True
    for A in (H, M):
        try:
            cholesky(A)
        except NotPositiveDefiniteError:
            both_pd = False
    if both_pd:
        a, b = 0.0, 0.5 * math.pi
        gamma, theta, upper = _golden(f, a, b, (f(a), f(b)), rtol, concave=True)
        for edge in (a, b):
            val = f(edge)
            if val > gamma:
                gamma, theta, upper = val, edge, max(upper, val)
    else:
        thetas = 2.0 * math.pi * np.arange(grid) / grid
        vals = np.array([f(t) for t in thetas])
        i = int(np.argmax(vals))
        step = 2.0 * math.pi / grid
        a, b = thetas[i] - step, thetas[i] + step
        gamma, theta, upper = _golden(
            f, a, b, (vals[(i - 1) % grid], vals[(i + 1) % grid]), rtol, concave=False
        )
        if vals[i] > gamma:
            gamma, theta, upper = float(vals[i]), float(thetas[i]), float(vals[i])
        theta = theta % (2.0 * math.pi)
    if not gamma > 0:
        raise IndefinitePairError(f"pair is not definite (max lambda_min = {gamma:.3e})")
    if full_output:
        return CrawfordResult(gamma=gamma, theta=theta, upper=upper, evaluations=f.calls)
    return gamma


@dataclass(frozen=True)
class SunBound:
    total: float
    gamma: float
    gamma_tilde: float
    chordal_gap: float
    norm_h2m2: float
    residual: float


def chordal_gap(lambda1, lambda2tilde):
    """``min |m - l| / (sqrt(1 + m^2) sqrt(1 + l^2))`` over the two spectra."""
    a = np.asarray(lambda1, dtype=float).ravel()[:, None]
    b = np.asarray(lambda2tilde, dtype=float).ravel()[None, :]
    if a.size == 0 or b.size == 0:
        raise EmptySpectrumError("both spectra must be non-empty")
    return float(np.min(np.abs(b - a) / (np.sqrt(1.0 + b * b) * np.sqrt(1.0 + a * a))))


def sun_bound(H, M, deltaH, deltaM, X1, lambda1, lambda2tilde, *,
              gamma=None, gamma_tilde=None, full_output=False):
    """Frobenius bound of Stewart-Sun type for the Euclidean rotation.

    ``X1`` must have orthonormal columns spanning the unperturbed block.
    ``gamma``/``gamma_tilde`` may pass precomputed Crawford numbers.
    """
    H = np.asarray(H, dtype=float)
    M = np.asarray(M, dtype=float)
    deltaH = np.asarray(deltaH, dtype=float)
    deltaM = np.asarray(deltaM, dtype=float)
    X1 = np.asarray(X1, dtype=float)
    delta = chordal_gap(lambda1, lambda2tilde)
    if not delta > 0:
        raise ZeroChordalGapError("chordal gap is zero")
    if gamma is None:
        gamma = crawford(H, M)
    if gamma_tilde is None:
        gamma_tilde = crawford(H + deltaH, M + deltaM)
    norm_h2m2 = spectral_norm(H @ H + M @ M, symmetric=True)
    residual = math.sqrt(np.linalg.norm(deltaH @ X1, "fro") ** 2
                         + np.linalg.norm(deltaM @ X1, "fro") ** 2)
    total = math.sqrt(norm_h2m2) / (gamma * gamma_tilde) * residual / delta
    if full_output:
        return SunBound(total=total, gamma=gamma, gamma_tilde=gamma_tilde,
                        chordal_gap=delta, norm_h2m2=norm_h2m2, residual=residual)
    return total
