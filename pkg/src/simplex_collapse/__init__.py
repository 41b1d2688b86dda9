"""Measurement as a stochastic walk of the density-matrix diagonal on the probability simplex."""

__version__ = "0.1.0"

from .core_state import (
    DensityMatrix,
    EpsilonDraw,
    NoiseSchedule,
    SimplexPoint,
    StateVector,
    UpdateMode,
    density_from_state,
    diagonal,
    entropy,
    new_state_vector,
)
from .errors import (
    ConfigError,
    DegenerateDenominator,
    DimensionTooLarge,
    GridTooNarrow,
    LimitError,
    SimplexCollapseError,
    StepTooLarge,
    ValidationError,
)
from .exact_oracle import enumerate_configurations, soft_photon_identity
from .mapping import apply_step, enhancement_factor, one_step_expectation, sample_step, step_probability, take_step
from .walker import EnsembleStats, WalkConfig, WalkResult, detect_collapse, run_ensemble, run_walk

__all__ = [
    "DensityMatrix",
    "EpsilonDraw",
    "NoiseSchedule",
    "SimplexPoint",
    "StateVector",
    "UpdateMode",
    "density_from_state",
    "diagonal",
    "entropy",
    "new_state_vector",
    "ConfigError",
    "DegenerateDenominator",
    "DimensionTooLarge",
    "GridTooNarrow",
    "LimitError",
    "SimplexCollapseError",
    "StepTooLarge",
    "ValidationError",
    "enumerate_configurations",
    "soft_photon_identity",
    "apply_step",
    "enhancement_factor",
    "one_step_expectation",
    "sample_step",
    "step_probability",
    "take_step",
    "EnsembleStats",
    "WalkConfig",
    "WalkResult",
    "detect_collapse",
    "run_ensemble",
    "run_walk",
]
