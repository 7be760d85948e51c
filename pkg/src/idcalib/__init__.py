"""Forward-only test-time calibration of streaming identity predictions."""

from .core import (
    NEWBORN,
    LifecycleError,
    ObjectRecord,
    ValidationError,
    normalized_entropy,
    uncertainty,
    validate_map,
)
from .engine import Engine, EngineConfig, FrameResult, assign_ids
from .calibrate import Mask, Strategy

__all__ = [
    "NEWBORN",
    "Engine",
    "EngineConfig",
    "FrameResult",
    "LifecycleError",
    "Mask",
    "ObjectRecord",
    "Strategy",
    "ValidationError",
    "assign_ids",
    "normalized_entropy",
    "uncertainty",
    "validate_map",
]

__version__ = "0.1.0"
