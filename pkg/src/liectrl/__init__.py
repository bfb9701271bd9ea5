"""Controllability analysis and simulation of linear control systems on Lie groups."""

from .algebra import LieAlgebra, Subspace
from .checker import ad_rank, controllability_verdict, kalman_rank
from .errors import (
    BudgetExhausted,
    InsufficientSamples,
    InvalidInput,
    LiectrlError,
    NotAnEigenvalue,
    ParseError,
    StepRejected,
    UnsupportedRealization,
    ValidationFailed,
)
from .simulator import ControlSignal, GroupElement, GroupRealization, MatrixFactor, TranslationFactor, solve
from .system import ControlRange, ControlSystem, FiniteCenterDeclaration, GroupMeta

__version__ = "0.1.0"

__all__ = [
    "BudgetExhausted",
    "ControlRange",
    "ControlSignal",
    "ControlSystem",
    "FiniteCenterDeclaration",
    "GroupElement",
    "GroupMeta",
    "GroupRealization",
    "InsufficientSamples",
    "InvalidInput",
    "LieAlgebra",
    "LiectrlError",
    "MatrixFactor",
    "NotAnEigenvalue",
    "ParseError",
    "StepRejected",
    "Subspace",
    "TranslationFactor",
    "UnsupportedRealization",
    "ValidationFailed",
    "ad_rank",
    "controllability_verdict",
    "kalman_rank",
    "solve",
]
