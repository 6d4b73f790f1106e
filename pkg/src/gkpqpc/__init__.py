"""GKP qubits with highly-reliable measurement, concatenated with the quantum parity code."""

from .hrm import HrmOutcome, HrmParams, ShiftClass, classify, classify_true_shift, decompose
from .oracle import BudgetError, ExactFailure, exact_failure
from .qpc import LogicalResult, QpcShape, decode_x, decode_z, logical_error_indicator
from .wrapped_noise import (
    HASHING_BOUND,
    SQRT_PI,
    NoiseParams,
    OutcomeProbabilities,
    outcome_probabilities,
    sample_wrapped_shift,
    squeezing_db_to_std,
    std_to_squeezing_db,
    wrapped_pdf,
)

__version__ = "0.1.0"

__all__ = [
    "BudgetError",
    "ExactFailure",
    "HASHING_BOUND",
    "HrmOutcome",
    "HrmParams",
    "LogicalResult",
    "NoiseParams",
    "OutcomeProbabilities",
    "QpcShape",
    "SQRT_PI",
    "ShiftClass",
    "classify",
    "classify_true_shift",
    "decode_x",
    "decode_z",
    "decompose",
    "exact_failure",
    "logical_error_indicator",
    "outcome_probabilities",
    "sample_wrapped_shift",
    "squeezing_db_to_std",
    "std_to_squeezing_db",
    "wrapped_pdf",
]
