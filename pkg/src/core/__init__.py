# Core Module - exceptions and shared records
from src.core.exceptions import (
    DPMException, ConfigurationError, DomainError, NotConvergedError, SeriesDivergedError,
    IterationOverflow, BudgetExceededError, CapExceededError, StructureError,
    TooFewSamplesError, VerificationFailure,
)
from src.core.models import (
    BranchingParams, CriticalConstants, DEFAULT_POLICY, FloatKind, MomentVector,
    LimitRow, LimitTable, PrecisionPolicy,
)

__all__ = [
    "DPMException", "ConfigurationError", "DomainError", "NotConvergedError", "SeriesDivergedError",
    "IterationOverflow", "BudgetExceededError", "CapExceededError", "StructureError",
    "TooFewSamplesError", "VerificationFailure",
    "BranchingParams", "CriticalConstants", "DEFAULT_POLICY", "FloatKind", "MomentVector",
    "LimitRow", "LimitTable", "PrecisionPolicy",
]
