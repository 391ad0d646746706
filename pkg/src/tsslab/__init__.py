"""Pseudo-spectral simulation of a regularized chemotaxis-fluid system,
empirical ODI diagnostics, and covering estimates for temporal singular sets."""

__version__ = "0.1.0"

from .diagnostics import Trajectory, compute_functionals
from .exceptions import (
    BlowUpError,
    ConfigurationError,
    DomainError,
    InvariantViolation,
    TsslabError,
    UsageError,
)
from .hausdorff import (
    BoxCountingDimension,
    HausdorffCoverEstimator,
    SyntheticSpec,
    box_counting,
    cover_singular_set,
    dimension_bound,
    premeasure,
    propagate_regular_set,
    synthesize,
)
from .model import RunConfig, SimulationState, imex_step, simulate
from .odi import OdiConstantEstimator, comparison_bound, doubling_window, estimate_K, exponents
from .spectral import Grid

__all__ = [
    "BlowUpError", "BoxCountingDimension", "ConfigurationError", "DomainError", "Grid",
    "HausdorffCoverEstimator", "InvariantViolation", "OdiConstantEstimator", "RunConfig",
    "SimulationState", "SyntheticSpec", "Trajectory", "TsslabError", "UsageError",
    "box_counting", "comparison_bound", "compute_functionals", "cover_singular_set",
    "dimension_bound", "doubling_window", "estimate_K", "exponents", "imex_step",
    "premeasure", "propagate_regular_set", "simulate", "synthesize",
]
