"""Computation errors raised by the numeric layers (the CLI maps both to exit status 1)."""


class DivergenceError(ArithmeticError):
    """A supremum, ratio or running maximum keeps growing across the grid."""


class ConvergenceError(ArithmeticError):
    """An iteration (Schur form, Newton inversion) failed to reach its tolerance."""
