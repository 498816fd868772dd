"""Weighted subspace angles and relative sin-theta bounds for positive definite pairs."""
from .analysis import Analysis, analyze, effectivity
from .angles import AngleReport, chol_correction, m_orthonormalize, sin_theta_euclid, sin_theta_M
from .bounds import (BoundReport, GapReport, bound_frobenius, bound_main, bound_main_phi,
                     crawford, gap_report, rel_gap, rel_gap_comp, rel_gap_p, sun_bound)
from .core import PairEigen, Partition, pair_eigendecompose, partition
from .errors import RelSinError
from .io import diag_matrix, parse_mtx, read_mtx, save_report, write_mtx
from .penalty import builtin_example, effectivity_sweep, make_family
from .perturb import RelMeasure, entrywise_perturb, lump, measure, perturb_spd

__version__ = "0.1.0"
