"""Command-line interface.

Exit codes: 0 success, 2 bad input (parse errors, invalid arguments),
3 definiteness failure, 4 requested bound inapplicable.
"""
import argparse
import dataclasses
import math
import sys

import numpy as np

from . import analysis, angles, core, io, penalty, perturb
from .bounds import P_CHOICES, parse_p
from .errors import (IndefinitePairError, MtxError, IoFailureError, NotPositiveDefiniteError,
                     RelSinError)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_DEFINITE = 3
EXIT_INAPPLICABLE = 4

# seed offset for the M perturbation so H and M draws are independent
M_SEED_OFFSET = 2**31


class UsageError(Exception):
    pass


def _num(x):
    if x is None or (isinstance(x, float) and not math.isfinite(x)):
        return "n/a"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{x:.6e}"


def _table(rows, out=None):
    out = out or sys.stdout
    width = max((len(r[0]) for r in rows), default=0)
    for name, *vals in rows:
        out.write(name.ljust(width) + "  " + "  ".join(
            v if isinstance(v, str) else _num(v) for v in vals) + "\n")


def _warn(msg):
    sys.stderr.write(f"warning: {msg}\n")


def _load(source, n=None, what="matrix"):
    if source in ("diag", "identity"):
        if n is None:
            raise UsageError(f"{what}: '{source}' needs the dimension of another matrix")
        return io.diag_matrix(n) if source == "diag" else np.eye(n)
    return io.read_mtx(source)


def _pairs(args):
    """Unperturbed and perturbed pair from files or generated perturbations."""
    H = _load(args.pair_h, what="--pair-h")
    n = H.shape[0]
    M = _load(args.pair_m, n, what="--pair-m")
    if M.shape != H.shape:
        raise UsageError(f"--pair-m is {M.shape[0]}x{M.shape[0]} but --pair-h is {n}x{n}")
    if args.pert_h and args.eta_h:
        raise UsageError("give either --pert-h or --eta-h, not both")
    if args.pert_m and args.eta_m:
        raise UsageError("give either --pert-m or --eta-m, not both")

    def perturbed(A, path, eta, seed, flag):
        if path:
            At = _load(path, n, what=flag)
            if At.shape != A.shape:
                raise UsageError(f"{flag} does not match the dimension {n}")
            return At
        if eta:
            dA, _ = perturb.perturb_spd(A, eta, seed)
            return A + dA
        return A

    Ht = perturbed(H, args.pert_h, args.eta_h, args.seed, "--pert-h")
    Mt = perturbed(M, args.pert_m, args.eta_m, args.seed + M_SEED_OFFSET, "--pert-m")
    return H, M, Ht, Mt


def _emit(args, text):
    if args.out:
        io.atomic_write(args.out, text)


def _format(args):
    if args.format:
        return args.format
    return "json" if args.out and args.out.lower().endswith(".json") else "csv"


def _render(report, fmt):
    return io.report_json(report) if fmt == "json" else io.report_csv(report)


def _angle_fields(prefix, rep):
    out = {f"{prefix}_norm2": rep.norm2, f"{prefix}_normF": rep.normF}
    out.update({f"{prefix}_sine_{i + 1}": s for i, s in enumerate(rep.sines)})
    return out


def cmd_angles(args):
    H, M, Ht, Mt = _pairs(args)
    E = core.pair_eigendecompose(H, M)
    Et = core.pair_eigendecompose(Ht, Mt)
    P, Pt = core.partition(E, args.k), core.partition(Et, args.k)
    if core.split_is_close(E, args.k) or core.split_is_close(Et, args.k):
        _warn("the split at k separates nearly equal eigenvalues; angles depend on the basis")
    LM = core.cholesky(M)
    wm = angles.sin_theta_M(P.X1, angles.m_orthonormalize(Pt.X1, M, factor=LM), M, factor=LM)
    we = angles.sin_theta_euclid(analysis.euclid_basis(P.X1), analysis.euclid_basis(Pt.X1))

    rows = [("k", args.k), ("sin_theta_M norm2", wm.norm2), ("sin_theta_M normF", wm.normF),
            ("sin_theta_euclid norm2", we.norm2), ("sin_theta_euclid normF", we.normF)]
    rows += [(f"sin_theta_M sine_{i + 1}", s) for i, s in enumerate(wm.sines)]
    _table(rows)
    report = {"type": "angles", "k": args.k}
    report.update(_angle_fields("m", wm))
    report.update(_angle_fields("euclid", we))
    _emit(args, _render(report, _format(args)))
    return EXIT_OK


def _gap_rows(res):
    g = res.gaps
    rows = [("relgap", g.relgap)]
    rows += [(f"relgap_p[{'inf' if p == math.inf else p}]", g.relgap_p[p]) for p in P_CHOICES]
    rows += [("relgap_comp", g.relgap_comp),
             ("dichotomy", g.dichotomy if g.dichotomy else "none")]
    rows += [("eta_H", res.measure_h.eta), ("eta_M", res.measure_m.eta),
             ("psi_H", res.measure_h.psi2), ("psi_M", res.measure_m.psi2),
             ("psi_H_F", res.measure_h.psiF), ("psi_M_F", res.measure_m.psiF)]
    return rows


def _analyze(args, with_sun=False):
    H, M, Ht, Mt = _pairs(args)
    res = analysis.analyze(H, M, Ht, Mt, args.k, p=args.p, with_sun=with_sun)
    if res.close_split:
        _warn("the split at k separates nearly equal eigenvalues; angles depend on the basis")
    return res


def cmd_bound(args):
    res = _analyze(args)
    rep = {"2": res.spectral, "fro": res.frobenius,
           "fro-corrected": res.frobenius_corrected}[args.norm]
    exact = res.exact.norm2 if args.norm == "2" else res.exact.normF
    rows = [("exact", exact)]
    if rep.applicable:
        rows += [("step1", rep.step1), ("step2", rep.step2),
                 ("correction_factor", rep.correction_factor), ("total", rep.total),
                 ("quotient", res.quotient(rep))]
    rows += _gap_rows(res)
    _table(rows)
    if not rep.applicable:
        sys.stderr.write(f"bound inapplicable: {rep.reason}\n")
        return EXIT_INAPPLICABLE
    terms = dict(rep.terms)
    terms.update({"exact": exact, "quotient": res.quotient(rep),
                  "dichotomy": res.gaps.dichotomy or "none"})
    out = dataclasses.replace(rep, terms=terms)
    _emit(args, _render(out, _format(args)))
    return EXIT_OK


def cmd_compare(args):
    res = _analyze(args, with_sun=True)
    sun = res.sun
    sun_total = sun.total if not isinstance(sun, str) else math.nan
    sun_q = analysis.effectivity(res.exact_euclid.normF, sun_total)
    rows = [
        ("quantity", "value", "quotient"),
        ("exact M-weighted (2-norm)", res.exact.norm2, ""),
        ("exact M-weighted (Frobenius)", res.exact.normF, ""),
        ("exact Euclidean (Frobenius)", res.exact_euclid.normF, ""),
        ("relative bound (2-norm)", res.spectral.total, res.quotient(res.spectral)),
        ("relative bound (Frobenius)", res.frobenius.total, res.quotient(res.frobenius)),
        ("relative bound (Frobenius, corrected)", res.frobenius_corrected.total,
         res.quotient(res.frobenius_corrected)),
        ("Stewart-Sun bound (Euclidean Frobenius)", sun_total, sun_q),
    ]
    _table(rows)
    for name, rep in (("2-norm", res.spectral), ("Frobenius", res.frobenius)):
        if not rep.applicable:
            sys.stderr.write(f"relative bound ({name}) inapplicable: {rep.reason}\n")
    if isinstance(sun, str):
        sys.stderr.write(f"Stewart-Sun bound inapplicable: {sun}\n")
    report = {
        "type": "compare", "k": args.k,
        "exact_m_norm2": res.exact.norm2, "exact_m_normF": res.exact.normF,
        "exact_euclid_normF": res.exact_euclid.normF,
        "bound_spectral": res.spectral.total,
        "quotient_spectral": res.quotient(res.spectral),
        "bound_frobenius": res.frobenius.total,
        "quotient_frobenius": res.quotient(res.frobenius),
        "bound_frobenius_corrected": res.frobenius_corrected.total,
        "quotient_frobenius_corrected": res.quotient(res.frobenius_corrected),
        "bound_sun": sun_total, "quotient_sun": sun_q,
    }
    if not isinstance(sun, str):
        report.update({"sun_gamma": sun.gamma, "sun_gamma_tilde": sun.gamma_tilde,
                       "sun_chordal_gap": sun.chordal_gap})
    _emit(args, _render(report, _format(args)))
    return EXIT_OK


def _family(args):
    if args.example:
        if args.family_hb or args.family_he:
            raise UsageError("give either --example or --family-hb/--family-he")
        return penalty.builtin_example(args.example)
    if not (args.family_hb and args.family_he):
        raise UsageError("sweep needs --example or both --family-hb and --family-he")
    Hb = io.read_mtx(args.family_hb)
    He = io.read_mtx(args.family_he)
    if Hb.shape != He.shape:
        raise UsageError("--family-hb and --family-he differ in size")
    return penalty.make_family(Hb, He)


def cmd_sweep(args):
    family = _family(args)
    if not (0 < args.kappa_start < args.kappa_stop) or args.kappa_points < 2:
        raise UsageError("need 0 < --kappa-start < --kappa-stop and --kappa-points >= 2")
    space = np.geomspace if args.kappa_scale == "log" else np.linspace
    grid = space(args.kappa_start, args.kappa_stop, args.kappa_points)
    res = penalty.effectivity_sweep(family, args.k, grid, variant=args.variant,
                                    bound_kind=args.bound_kind, reference=args.reference,
                                    p=args.p, workers=args.workers)
    p = "inf" if res.p == math.inf else str(res.p)
    sys.stdout.write(f"variant {res.variant}  k {res.k}  bound {res.bound_kind}  "
                     f"reference {res.reference}  p {p}\n")
    rows = [("kappa", "left", "right", "quotient", "flag")]
    rows += [(_num(pt.kappa), pt.left, pt.right, pt.quotient, pt.flag) for pt in res.points]
    _table(rows)
    sys.stdout.write(f"slope left {res.slopes['left']:.4f}  "
                     f"slope right {res.slopes['right']:.4f}\n")
    _emit(args, _render(res, _format(args)))
    if not any(math.isfinite(pt.right) for pt in res.points):
        sys.stderr.write("no grid point produced a bound\n")
        return EXIT_INAPPLICABLE
    return EXIT_OK


def cmd_perturb(args):
    A = io.read_mtx(args.input)
    dA, used = perturb.perturb_spd(A, args.eta, args.seed)
    if used != args.seed:
        _warn(f"resampled: seed {used} kept the matrix positive definite")
    io.atomic_write(args.out, io.mtx_text(A + dA))
    sys.stdout.write(f"wrote {args.out} (n={A.shape[0]}, eta={args.eta:g}, seed={used})\n")
    return EXIT_OK


def _p_arg(text):
    try:
        return parse_p(text)
    except RelSinError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _nonneg(text):
    value = float(text)
    if not (value >= 0 and math.isfinite(value)):
        raise argparse.ArgumentTypeError("must be a finite non-negative number")
    return value


def _add_output(sp):
    sp.add_argument("--out", help="write a machine-readable report to this path")
    sp.add_argument("--format", choices=("csv", "json"),
                    help="report format (default: from --out extension, else csv)")


def _add_pairs(sp):
    sp.add_argument("--pair-h", required=True, help="H as .mtx")
    sp.add_argument("--pair-m", default="identity",
                    help="M as .mtx, or 'diag' for diag(1:n) or 'identity' (default)")
    sp.add_argument("--pert-h", help="perturbed H as .mtx (default: H)")
    sp.add_argument("--pert-m", help="perturbed M as .mtx, 'diag' or 'identity' (default: M)")
    sp.add_argument("--eta-h", type=_nonneg, default=0.0,
                    help="generate H~ by an entrywise relative perturbation of this size")
    sp.add_argument("--eta-m", type=_nonneg, default=0.0,
                    help="generate M~ by an entrywise relative perturbation of this size")
    sp.add_argument("--seed", type=int, default=0, help="seed for generated perturbations")
    sp.add_argument("--k", type=int, required=True, help="dimension of the eigenspace")
    sp.add_argument("--p", type=_p_arg, default=math.inf,
                    help="gap exponent: 1, 2 or inf (default inf)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="relsin",
        description="Weighted subspace angles and relative sin-theta bounds "
                    "for positive definite matrix pairs.")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("angles", help="exact angles between the k-smallest eigenspaces")
    _add_pairs(sp)
    _add_output(sp)
    sp.set_defaults(func=cmd_angles)

    sp = sub.add_parser("bound", help="relative bound with its ingredients")
    _add_pairs(sp)
    sp.add_argument("--norm", choices=("2", "fro", "fro-corrected"), default="2",
                    help="spectral bound, Frobenius bound as stated, or Frobenius bound "
                         "with the inner-product correction factor")
    _add_output(sp)
    sp.set_defaults(func=cmd_bound)

    sp = sub.add_parser("compare", help="exact angle against the relative and Stewart-Sun bounds")
    _add_pairs(sp)
    _add_output(sp)
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("sweep", help="effectivity sweep over the penalty parameter")
    sp.add_argument("--example", choices=tuple(sorted(penalty.EXAMPLES)))
    sp.add_argument("--family-hb", help="bounded part of the family as .mtx")
    sp.add_argument("--family-he", help="semidefinite penalty part as .mtx")
    sp.add_argument("--k", type=int, required=True, help="dimension of the bounded branch")
    sp.add_argument("--variant", default="Hinv,H", choices=tuple(penalty.VARIANTS),
                    metavar="VARIANT",
                    help="matrix pair built from H_kappa: " + " | ".join(penalty.VARIANTS)
                         + " (default Hinv,H)")
    sp.add_argument("--bound-kind", default="eta", choices=penalty.BOUND_KINDS)
    sp.add_argument("--reference", default="limit", choices=penalty.REFERENCES)
    sp.add_argument("--p", type=_p_arg, default=math.inf)
    sp.add_argument("--kappa-start", type=float, default=1e2)
    sp.add_argument("--kappa-stop", type=float, default=1e8)
    sp.add_argument("--kappa-points", type=int, default=13)
    sp.add_argument("--kappa-scale", choices=("log", "linear"), default="log")
    sp.add_argument("--workers", type=int, default=1, help="threads for grid points")
    _add_output(sp)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("perturb", help="write an entrywise relative perturbation of a matrix")
    sp.add_argument("--input", required=True, help="matrix as .mtx")
    sp.add_argument("--eta", type=_nonneg, required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True, help="output .mtx path")
    sp.set_defaults(func=cmd_perturb)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT
    except (MtxError, IoFailureError) as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return EXIT_INPUT
    except (NotPositiveDefiniteError, IndefinitePairError) as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return EXIT_DEFINITE
    except RelSinError as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
