"""Minimum-variance unbiased prevalence estimation from diagnostic data.

The package models a measured population as a two-component mixture of a
positive and a negative distribution, constructs the measurement subdomain
that minimizes the variance of the resulting unbiased prevalence estimate,
and provides fitting, estimation, and simulation tools around that core.
"""

from ._kernels import BACKEND, available_backends, get_backend
from .bathtub import (
    BathtubSolution,
    bathtub_ratio,
    level_measure_curve,
    solve_delta,
    super_level_set,
)
from .dist import (
    DomainSet,
    MixturePopulation,
    ProbabilityModel,
    measure,
    measure_by_quadrature,
    mixture_measure,
    mixture_pdf,
    model_from_spec,
    model_to_spec,
    pdf,
    sample,
)
from .errors import (
    DegenerateDomainError,
    DomainMismatchError,
    PrevoptError,
    UnattainableTargetError,
)
from .estimate import (
    EstimateReport,
    RefinementTrace,
    empirical_measure,
    estimate_batch,
    point_estimate,
    refine,
)
from .mle import (
    FitResult,
    SampleBatch,
    apply_normalization,
    fit,
    normalize,
    read_csv_batch,
)
from .objective import OptimizationResult, f_of_qhat, minimize, variance_branch
from .sim import SimReport, classification_set, run_trials

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BathtubSolution",
    "DegenerateDomainError",
    "DomainMismatchError",
    "DomainSet",
    "EstimateReport",
    "FitResult",
    "MixturePopulation",
    "OptimizationResult",
    "PrevoptError",
    "ProbabilityModel",
    "RefinementTrace",
    "SampleBatch",
    "SimReport",
    "UnattainableTargetError",
    "apply_normalization",
    "available_backends",
    "bathtub_ratio",
    "classification_set",
    "empirical_measure",
    "estimate_batch",
    "f_of_qhat",
    "fit",
    "get_backend",
    "level_measure_curve",
    "measure",
    "measure_by_quadrature",
    "minimize",
    "mixture_measure",
    "mixture_pdf",
    "model_from_spec",
    "model_to_spec",
    "normalize",
    "pdf",
    "point_estimate",
    "read_csv_batch",
    "refine",
    "sample",
    "solve_delta",
    "super_level_set",
    "variance_branch",
]
