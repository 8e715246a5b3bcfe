"""Simplified cuckoo filters: membership with deletes, bounded false
positives, an overflow stash, branch-free lane matching, and a parameter
planner with a Monte-Carlo harness."""

from .bloom import BloomFilter
from .filter import (
    BadMagicError,
    CellIndex,
    CuckooFilter,
    FilterParams,
    InsertOutcome,
    SerializationError,
    TruncatedError,
    UnsupportedVersionError,
    Variant,
    alt_location,
    hash_element,
)
from .harness import TrialRecord
from .planner import InfeasiblePlanError, PlanRequest, PlanResult, plan

__version__ = "0.1.0"

__all__ = [
    "BadMagicError",
    "BloomFilter",
    "CellIndex",
    "CuckooFilter",
    "FilterParams",
    "InfeasiblePlanError",
    "InsertOutcome",
    "PlanRequest",
    "PlanResult",
    "SerializationError",
    "TrialRecord",
    "TruncatedError",
    "UnsupportedVersionError",
    "Variant",
    "alt_location",
    "hash_element",
    "plan",
    "__version__",
]
