"""Large-coupling families ``H(kappa) = Hb + kappa He`` and effectivity sweeps.

Coordinates are split as ``Ker(He) (+) Ker(He)^perp``.  In the split
coordinates ``H(kappa)`` has blocks ``[[Lb, Rb^T], [Rb, Wb + kappa He]]`` and
its block diagonal ``D(kappa)`` is the unperturbed reference whose relative
distance to ``H(kappa)`` decays like ``kappa^{-1/2}``.

A sweep compares, for each ``kappa``, the exact rotation of the bounded
eigenvalue branch (``Left``) with a bound (``Right``) for one of five
definite pairs built from ``H(kappa)``.
"""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import angles, bounds, core, perturb
from .analysis import effectivity
from .errors import EmptyKernelError, RelSinError, UnknownExampleError

KERNEL_RTOL = 1e-10
PSD_RTOL = 1e-12

# tag -> (kind of A, kind of B, whether the pair's eigenvalues decrease with those of H)
VARIANTS = {
    "H,I": ("H", "I", False),
    "I,H": ("I", "H", True),
    "Hinv,H": ("Hinv", "H", True),
    "Hinv,I": ("Hinv", "I", True),
    "I,Hinv": ("I", "Hinv", False),
}
ENERGY_VARIANTS = ("I,H", "Hinv,H")
EUCLIDEAN_VARIANTS = ("H,I", "Hinv,I")

BOUND_KINDS = ("eta", "phi", "psi", "frobenius")
REFERENCES = ("limit", "perturbed-pair")


def canonical_variant(tag):
    """Normalize spellings such as ``"(H^-1, H)"`` or ``"hinv,h"`` to a tag of :data:`VARIANTS`."""
    key = str(tag).replace(" ", "").strip("()").lower().replace("h^-1", "hinv")
    for name in VARIANTS:
        if key == name.lower():
            return name
    raise ValueError(f"unknown pair variant {tag!r}; choose from {', '.join(VARIANTS)}")


@dataclass(frozen=True)
class PenaltyFamily:
    """``Hb`` SPD, ``He`` PSD, and an orthogonal ``basis`` whose first
    ``kernel_dim`` columns span ``Ker(He)``.  ``permutation`` is the index
    map when that basis is a coordinate permutation, else ``None``.
    """

    Hb: np.ndarray
    He: np.ndarray
    kernel_dim: int
    basis: np.ndarray
    permutation: object = None


def make_family(Hb, He):
    Hb = core.as_sym(Hb, name="Hb")
    He = core.as_sym(He, name="He")
    if Hb.shape != He.shape:
        raise ValueError("Hb and He must have the same shape")
    if core.spd_check(Hb) <= 0:
        raise core.NotPositiveDefiniteError("Hb must be positive definite")
    n = Hb.shape[0]
    diag = np.diagonal(He)
    if np.count_nonzero(He - np.diag(diag)) == 0:
        scale = np.max(np.abs(diag), initial=0.0)
        if diag.min(initial=0.0) < -PSD_RTOL * scale:
            raise ValueError("He must be positive semidefinite")
        kernel = np.abs(diag) <= KERNEL_RTOL * scale
        perm = np.concatenate([np.flatnonzero(kernel), np.flatnonzero(~kernel)])
        basis = np.eye(n)[:, perm]
    else:
        w, V = np.linalg.eigh(He)
        scale = np.max(np.abs(w))
        if w.min() < -PSD_RTOL * scale:
            raise ValueError("He must be positive semidefinite")
        kernel = w <= KERNEL_RTOL * scale
        basis = np.hstack([V[:, kernel], V[:, ~kernel]])
        perm = None
    return PenaltyFamily(Hb=Hb, He=He, kernel_dim=int(kernel.sum()), basis=basis,
                         permutation=perm)


def _tridiag(n):
    return 2.0 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1)


EXAMPLES = {"tridiag3": 3, "tridiag4": 4}


def builtin_example(name):
    """The ``tridiag3`` / ``tridiag4`` families: ``tridiag(-1, 2, -1) + kappa e_n e_n^T``."""
    if name not in EXAMPLES:
        raise UnknownExampleError(f"unknown example {name!r}; choose from {', '.join(EXAMPLES)}")
    n = EXAMPLES[name]
    He = np.zeros((n, n))
    He[-1, -1] = 1.0
    return make_family(_tridiag(n), He)


def assemble(family, kappa):
    if kappa < 0:
        raise ValueError("kappa must be non-negative")
    return family.Hb + kappa * family.He


@dataclass(frozen=True)
class BlockForm:
    kappa: float
    Lb: np.ndarray
    Rb: np.ndarray
    Wb: np.ndarray
    Dkappa: np.ndarray
    eta_kappa: float
    basis: np.ndarray = field(repr=False)

    def split(self, A):
        """Express ``A`` in the split coordinates."""
        return self.basis.T @ A @ self.basis

    def unsplit(self, S):
        return core.symmetrize(self.basis @ S @ self.basis.T)

    @property
    def D_original(self):
        """``D(kappa)`` in the original coordinates."""
        return self.unsplit(self.Dkappa)


def _blocks(S, m):
    return S[:m, :m], S[m:, :m], S[m:, m:]


def block_form(family, kappa):
    m = family.kernel_dim
    if m == 0:
        raise EmptyKernelError("He is definite; there is no kernel block")
    Q = family.basis
    S = core.symmetrize(Q.T @ assemble(family, kappa) @ Q)
    Lb, Rb, Wk = _blocks(S, m)
    Wb = _blocks(core.symmetrize(Q.T @ family.Hb @ Q), m)[2]
    n = S.shape[0]
    D = np.zeros_like(S)
    D[:m, :m] = Lb
    D[m:, m:] = Wk
    if m == n:
        eta = 0.0
    else:
        # D is block diagonal, so is D^{-1/2}; only the coupling block survives
        C = core.spd_inv_sqrt(Wk) @ Rb @ core.spd_inv_sqrt(Lb)
        eta = float(np.linalg.norm(C, 2)) if C.size else 0.0
    return BlockForm(kappa=float(kappa), Lb=Lb, Rb=Rb, Wb=Wb, Dkappa=D, eta_kappa=eta,
                     basis=Q)


def limit_matrix(family):
    """``kappa -> infinity`` limit: ``Lb`` on the kernel, zero elsewhere."""
    m = family.kernel_dim
    if m == 0:
        raise EmptyKernelError("He is definite; there is no kernel block")
    Q = family.basis
    S = np.zeros_like(family.Hb)
    S[:m, :m] = _blocks(Q.T @ family.Hb @ Q, m)[0]
    return core.symmetrize(Q @ S @ Q.T)


def limit_basis(family, k):
    """Eigenvectors of the limit matrix for its ``k`` smallest nonzero eigenvalues."""
    m = family.kernel_dim
    if not 1 <= k <= m:
        raise core.BadBlockSizeError(f"k must satisfy 1 <= k <= kernel_dim={m}")
    Q = family.basis
    Lb = core.symmetrize(_blocks(Q.T @ family.Hb @ Q, m)[0])
    _, V = np.linalg.eigh(Lb)
    return core.normalize_signs(Q[:, :m] @ V[:, :k])


def _component(A, A_inv, n, kind):
    if kind == "H":
        return A
    if kind == "Hinv":
        return A_inv
    return np.eye(n)


def pair_variant(Hk, variant):
    """One of the five pairs ``(H,I) (I,H) (H^-1,H) (H^-1,I) (I,H^-1)``."""
    variant = canonical_variant(variant)
    Hk = np.asarray(Hk, dtype=float)
    a, b, _ = VARIANTS[variant]
    inv = core.spd_inv(Hk) if "Hinv" in (a, b) else None
    if inv is None:
        core.cholesky(Hk)
    n = Hk.shape[0]
    return _component(Hk, inv, n, a), _component(Hk, inv, n, b)


def _kind_eta(kind, eta):
    if kind == "H":
        return eta
    if kind == "Hinv":
        return perturb.eta_of_inverse(eta)
    return 0.0


@dataclass(frozen=True)
class SweepPoint:
    kappa: float
    left: float
    right: float
    quotient: float
    eta: float
    step1: float
    step2: float
    relgap: float
    relgap_p: float
    flag: str = ""


@dataclass(frozen=True)
class SweepResult:
    kappa_grid: np.ndarray
    variant: str
    left: np.ndarray
    right: np.ndarray
    quotient: np.ndarray
    slopes: dict
    k: int = 0
    bound_kind: str = "eta"
    reference: str = "limit"
    p: object = math.inf
    points: tuple = ()

    @property
    def flags(self):
        return [pt.flag for pt in self.points]


def default_grid():
    """``10^2, 10^2.5, ..., 10^8``."""
    return 10.0 ** np.linspace(2.0, 8.0, 13)


def fit_slope(kappa, values, *, fraction=0.5):
    """Least-squares slope of ``log(values)`` against ``log(kappa)``.

    Uses the largest ``fraction`` of the grid; non-finite or non-positive
    values are skipped.  NaN when fewer than two points remain.
    """
    kappa = np.asarray(kappa, dtype=float)
    values = np.asarray(values, dtype=float)
    n = kappa.size
    start = n - int(math.ceil(fraction * n))
    x, y = kappa[start:], values[start:]
    ok = np.isfinite(y) & (y > 0) & np.isfinite(x) & (x > 0)
    if ok.sum() < 2:
        return math.nan
    slope, _ = np.polyfit(np.log(x[ok]), np.log(y[ok]), 1)
    return float(slope)


def _sweep_point(family, k, kappa, variant, bound_kind, reference, p):
    a_kind, b_kind, top = VARIANTS[variant]
    bf = block_form(family, kappa)
    Hk = assemble(family, kappa)
    D = bf.D_original
    A_H, B_H = pair_variant(Hk, variant)
    A_D, B_D = pair_variant(D, variant)

    E_H = core.pair_eigendecompose(A_H, B_H)
    E_D = core.pair_eigendecompose(A_D, B_D)
    E_hat = core.pair_eigendecompose(A_H, B_D)
    P_H = core.partition(E_H, k, from_top=top)
    P_D = core.partition(E_D, k, from_top=top)
    P_hat = core.partition(E_hat, k, from_top=top)

    flag = ""
    m = family.kernel_dim
    if m < Hk.shape[0]:
        lam_h = np.linalg.eigvalsh(Hk)
        escaping = np.linalg.eigvalsh(bf.Dkappa[m:, m:]).min()
        if lam_h[k - 1] >= escaping:
            flag = "branch-mixing"

    if reference == "limit":
        ref = angles.m_orthonormalize(limit_basis(family, k), B_H)
        left_rep = angles.sin_theta_M(P_H.X1, ref, B_H)
    else:
        other = angles.m_orthonormalize(P_H.X1, B_D)
        left_rep = angles.sin_theta_M(P_D.X1, other, B_D)

    gaps = bounds.gap_report(P_D.lambda2, P_hat.lambda1, P_hat.lambda2, P_H.lambda1)
    eta = bf.eta_kappa
    try:
        if bound_kind == "eta":
            eta_a, eta_b = _kind_eta(a_kind, eta), _kind_eta(b_kind, eta)
            rep = bounds.bound_main(perturb.psi_bound_from_eta(eta_a),
                                    perturb.psi_bound_from_eta(eta_b), eta_b, gaps, p)
        elif bound_kind == "phi":
            eta_a, eta_b = _kind_eta(a_kind, eta), _kind_eta(b_kind, eta)
            rep = bounds.bound_main_phi(eta_a, eta_b, eta_a, eta_b, gaps, p)
        elif bound_kind == "psi":
            ma, mb = perturb.measure(A_D, A_H), perturb.measure(B_D, B_H)
            rep = bounds.bound_main(ma.psi2, mb.psi2, mb.eta, gaps, p)
        else:
            ma, mb = perturb.measure(A_D, A_H), perturb.measure(B_D, B_H)
            rep = bounds.bound_frobenius(ma.psiF, mb.psiF, gaps.relgap, gaps.relgap_comp)
        right, step1, step2 = rep.total, rep.step1, rep.step2 * rep.correction_factor
    except RelSinError as exc:
        right = step1 = step2 = math.nan
        flag = ";".join(filter(None, [flag, type(exc).__name__]))

    left = left_rep.normF if bound_kind == "frobenius" else left_rep.norm2
    return SweepPoint(
        kappa=float(kappa), left=float(left), right=float(right),
        quotient=effectivity(left, right), eta=eta, step1=step1, step2=step2,
        relgap=gaps.relgap, relgap_p=gaps.relgap_p[p], flag=flag,
    )


def effectivity_sweep(family, k, kappa_grid=None, variant="Hinv,H", bound_kind="eta",
                      reference="limit", p=math.inf, workers=1):
    """Exact rotation, bound and effectivity quotient over a grid of ``kappa``.

    ``bound_kind``: ``"eta"`` evaluates the spectral bound from the
    closed-form relative distances of ``D(kappa)`` and ``H(kappa)`` (and of
    their inverses); ``"phi"`` the equivalent symmetric-measure form;
    ``"psi"`` the spectral bound with measured psi values; ``"frobenius"``
    the Frobenius bound with measured values (``Left`` is then a Frobenius
    norm too).

    ``reference``: ``"limit"`` measures the angle to the limit eigenvectors
    in the inner product of the pair at ``kappa``; ``"perturbed-pair"``
    measures it against the eigenspace of the ``D(kappa)`` pair in that
    pair's inner product.

    Failing preconditions at a grid point are recorded in its flag.
    """
    variant = canonical_variant(variant)
    p = bounds.parse_p(p)
    if bound_kind not in BOUND_KINDS:
        raise ValueError(f"bound_kind must be one of {BOUND_KINDS}")
    if reference not in REFERENCES:
        raise ValueError(f"reference must be one of {REFERENCES}")
    grid = default_grid() if kappa_grid is None else np.asarray(kappa_grid, dtype=float)
    if grid.size == 0:
        raise ValueError("empty kappa grid")
    if np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise ValueError("kappa grid must be positive and strictly ascending")
    if not 1 <= k <= family.kernel_dim:
        raise core.BadBlockSizeError(
            f"k must satisfy 1 <= k <= kernel_dim={family.kernel_dim}")

    def run(kappa):
        return _sweep_point(family, k, kappa, variant, bound_kind, reference, p)

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            points = tuple(pool.map(run, grid))
    else:
        points = tuple(run(kp) for kp in grid)

    left = np.array([pt.left for pt in points])
    right = np.array([pt.right for pt in points])
    quotient = np.array([pt.quotient for pt in points])
    slopes = {"left": fit_slope(grid, left), "right": fit_slope(grid, right)}
    return SweepResult(kappa_grid=grid, variant=variant, left=left, right=right,
                       quotient=quotient, slopes=slopes, k=k, bound_kind=bound_kind,
                       reference=reference, p=p, points=points)
