"""Finite-scale numerics for Dixmier-trace-type functionals on Marcinkiewicz spaces."""

from .errors import ConvergenceError, DivergenceError
from .piecewise import ReciprocalFunction, StepFunction, WeightDerivative
from .weights import ExpSqrtLogWeight, LogWeight, PowerWeight, parse_psi

__version__ = "0.1.0"

__all__ = [
    "ConvergenceError", "DivergenceError", "ExpSqrtLogWeight", "LogWeight", "PowerWeight",
    "ReciprocalFunction", "StepFunction", "WeightDerivative", "parse_psi",
]
