"""Constant-step subgradient optimization for l1-composite convex objectives.

The library minimizes f(x) = g(x) + gamma * |x|_1 for smooth convex g. Its
centerpiece is a subgradient method that keeps a constant step usable by
picking the minimal-norm subgradient and handling sign crossings explicitly,
plus an accelerated variant driven by conservative momentum with adaptive
restarts. ISTA, restarted FISTA and the classical decaying-step subgradient
method are included as baselines, together with seeded problem generators and
a benchmark harness that reproduces gap curves as CSV.
"""

from ._version import __version__
from .bench import (
    EXPERIMENTS,
    ExperimentConfig,
    ExperimentError,
    GapCurve,
    ReferenceOptimum,
    build_problem,
    reference_optimum,
    run_experiment,
)
from .numerics import Rng, householder_qr, random_orthogonal, spectral_norm
from .objective import CompositeObjective, Partition, partition, soft_threshold
from .problems import (
    ProblemInstance,
    dump_instance,
    make_2d,
    make_lasso,
    make_logistic,
    make_logsumexp,
    make_quadratic,
    perturb_2d,
)
from .solvers import (
    METHODS,
    FistaState,
    IterationTrace,
    SolverConfig,
    SolverError,
    SolverState,
    accelerated_step,
    classic_subgradient_step,
    fista_restart_step,
    ista_step,
    run,
    subgradient_step,
)

__all__ = [
    "__version__",
    "EXPERIMENTS",
    "METHODS",
    "CompositeObjective",
    "ExperimentConfig",
    "ExperimentError",
    "FistaState",
    "GapCurve",
    "IterationTrace",
    "Partition",
    "ProblemInstance",
    "ReferenceOptimum",
    "Rng",
    "SolverConfig",
    "SolverError",
    "SolverState",
    "accelerated_step",
    "build_problem",
    "classic_subgradient_step",
    "dump_instance",
    "fista_restart_step",
    "householder_qr",
    "ista_step",
    "make_2d",
    "make_lasso",
    "make_logistic",
    "make_logsumexp",
    "make_quadratic",
    "partition",
    "perturb_2d",
    "random_orthogonal",
    "reference_optimum",
    "run",
    "run_experiment",
    "soft_threshold",
    "spectral_norm",
    "subgradient_step",
]
