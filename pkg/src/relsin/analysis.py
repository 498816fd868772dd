"""End-to-end evaluation for one pair and its perturbation.

:func:`analyze` computes the exact rotation of the ``k``-block from full
decompositions of the unperturbed, intermediate and perturbed pairs, the
ingredients of every bound and the bounds themselves.  Bounds whose
preconditions fail are reported as inapplicable with a reason.
"""
import math
from dataclasses import dataclass

import numpy as np

from . import angles, bounds, core, perturb
from .errors import RelSinError


@dataclass(frozen=True)
class Analysis:
    k: int
    p: object
    exact: angles.AngleReport
    exact_euclid: angles.AngleReport
    step1_exact: angles.AngleReport
    step2_exact: angles.AngleReport
    step2_raw: angles.AngleReport
    measure_h: perturb.RelMeasure
    measure_m: perturb.RelMeasure
    gaps: bounds.GapReport
    spectral: bounds.BoundReport
    phi: bounds.BoundReport
    frobenius: bounds.BoundReport
    frobenius_corrected: bounds.BoundReport
    sun: object
    close_split: bool

    def quotient(self, bound):
        """Effectivity quotient exact/bound, NaN when undefined."""
        left = self.exact.normF if bound.norm_kind == "frobenius" else self.exact.norm2
        return effectivity(left, bound.total if bound.applicable else math.nan)


def effectivity(left, right):
    """``left / right``; ``0/0`` and undefined bounds map to NaN."""
    if not math.isfinite(right) or right == 0.0:
        return math.nan
    return left / right


def _inapplicable(kind, exc):
    return bounds.BoundReport(
        step1=math.nan, step2=math.nan, correction_factor=math.nan, total=math.nan,
        norm_kind=kind, applicable=False, reason=f"{type(exc).__name__}: {exc}",
    )


def _guard(kind, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except RelSinError as exc:
        return _inapplicable(kind, exc)


def euclid_basis(X1):
    """Orthonormal basis of ``Ran X1``."""
    q, _ = np.linalg.qr(np.asarray(X1, dtype=float))
    return q


def analyze(H, M, Ht, Mt, k, *, p=math.inf, with_sun=False, crawford_kw=None):
    """Exact angles and bounds for ``(H, M) -> (Ht, Mt)``, block of the ``k`` smallest."""
    p = bounds.parse_p(p)
    H, M, Ht, Mt = (np.asarray(a, dtype=float) for a in (H, M, Ht, Mt))
    E = core.pair_eigendecompose(H, M)
    Eh = core.pair_eigendecompose(Ht, M)
    Et = core.pair_eigendecompose(Ht, Mt)
    P = core.partition(E, k)
    Ph = core.partition(Eh, k)
    Pt = core.partition(Et, k)

    LM = core.cholesky(M)
    Xt1_M = angles.m_orthonormalize(Pt.X1, M, factor=LM)
    exact = angles.sin_theta_M(P.X1, Xt1_M, M, factor=LM)
    exact_euclid = angles.sin_theta_euclid(euclid_basis(P.X1), euclid_basis(Pt.X1))
    step1_exact = angles.sin_theta_M(P.X1, Ph.X1, M, factor=LM)
    corr = angles.chol_correction(Et.X, Mt - M, k)
    step2_exact = angles.sin_theta_M_corrected(Ph.X2, M, Pt.X1, corr)
    raw = Ph.X2.T @ (M @ Pt.X1)
    step2_raw = angles.AngleReport.from_sines(np.linalg.svd(raw, compute_uv=False), k)

    mh = perturb.measure(H, Ht)
    mm = perturb.measure(M, Mt)
    gaps = bounds.gap_report(P.lambda2, Ph.lambda1, Ph.lambda2, Pt.lambda1)

    spectral = _guard("spectral", bounds.bound_main, mh.psi2, mm.psi2, mm.eta, gaps, p)
    phi = _guard("spectral", bounds.bound_main_phi, mh.phi2, mm.phi2, mh.eta, mm.eta, gaps, p)
    frob = _guard("frobenius", bounds.bound_frobenius, mh.psiF, mm.psiF,
                  gaps.relgap, gaps.relgap_comp)
    frob_c = _guard("frobenius", bounds.bound_frobenius, mh.psiF, mm.psiF,
                    gaps.relgap, gaps.relgap_comp, etaM=mm.eta)

    sun = None
    if with_sun:
        try:
            sun = bounds.sun_bound(H, M, Ht - H, Mt - M, euclid_basis(P.X1), P.lambda1, Pt.lambda2,
                                   gamma=bounds.crawford(H, M, **(crawford_kw or {})),
                                   gamma_tilde=bounds.crawford(Ht, Mt, **(crawford_kw or {})),
                                   full_output=True)
        except RelSinError as exc:
            sun = f"{type(exc).__name__}: {exc}"

    return Analysis(
        k=k, p=p, exact=exact, exact_euclid=exact_euclid, step1_exact=step1_exact,
        step2_exact=step2_exact, step2_raw=step2_raw, measure_h=mh, measure_m=mm,
        gaps=gaps, spectral=spectral, phi=phi, frobenius=frob,
        frobenius_corrected=frob_c, sun=sun,
        close_split=core.split_is_close(E, k) or core.split_is_close(Et, k),
    )
