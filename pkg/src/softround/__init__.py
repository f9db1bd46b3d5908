"""Probabilistic surrogates, derandomization schemes, and alignment experiments
for binary combinatorial optimization."""

from .misalign import DEFAULT_TEMPERATURES, TrialReport, bad_pair_count, soft_sweep, toy_trial
from .problems import DecisionProblem, FacilityLocationProblem, QuadraticProblem, embed
from .rounding import (
    GreedyRounder,
    IterativeRounder,
    RoundingError,
    SampleRounder,
    SCHEME_NAMES,
    SoftGreedyRounder,
    SoftIterativeRounder,
    default_order,
    make_rounder,
)
from .seeding import SeedStream
from .training import DecisionTrainer, EpochRecord, TrainingCurve, sweep_temperatures
from .validation import (
    DecisionValidationError,
    is_binary,
    threshold,
    validate_binary,
    validate_continuous,
)

__all__ = [
    "DEFAULT_TEMPERATURES",
    "DecisionProblem",
    "DecisionTrainer",
    "DecisionValidationError",
    "EpochRecord",
    "FacilityLocationProblem",
    "GreedyRounder",
    "IterativeRounder",
    "QuadraticProblem",
    "RoundingError",
    "SCHEME_NAMES",
    "SampleRounder",
    "SeedStream",
    "SoftGreedyRounder",
    "SoftIterativeRounder",
    "TrainingCurve",
    "TrialReport",
    "bad_pair_count",
    "default_order",
    "embed",
    "is_binary",
    "make_rounder",
    "soft_sweep",
    "sweep_temperatures",
    "threshold",
    "toy_trial",
    "validate_binary",
    "validate_continuous",
]

__version__ = "0.1.0"
