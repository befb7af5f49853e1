"""Compressed-sensing reconstruction by MAP-derived thresholding and AMP.

Submodules: ``core`` (types), ``shrinkage``, ``solvers``, ``phase``
(theoretical threshold), ``oracle`` (exact l1), ``instances`` (seeded
generation), ``harness`` (experiments), ``cli``.
"""
from .core import (
    AnnealSchedule,
    IterateState,
    ProblemInstance,
    RunResult,
    SensingMatrix,
    SolverConfig,
    SparseSignal,
    Variant,
    mse_per_entry,
    residual,
)
from .instances import GenSpec, gen_matrix, gen_signal, make_instance
from .phase import amp_threshold_rho, gauss_upper_tail, replica_threshold_alpha, threshold_curve
from .shrinkage import soft_threshold, soft_threshold_deriv
from .solvers import run

__version__ = "0.1.0"
