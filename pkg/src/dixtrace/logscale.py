"""Magnitudes stored as natural logarithms.

A ``LogValue`` is a plain number ``a`` standing for ``e**a``.  Exact zero is the
sentinel :data:`BOTTOM` (``-inf``); it absorbs under multiplication (``a + BOTTOM``)
and is the identity of :func:`log_add`.

Every routine accepts either builtin floats or :class:`mpmath.mpf`.  The mpf path
is what makes doubly-exponential coordinates such as ``k + e**k`` usable: the
counterexample module builds its functions at a working precision large enough to
resolve ``k`` next to ``e**k``, and the :func:`follows_precision` decorator makes
downstream operations run at that precision.
"""

from __future__ import annotations

import functools
import itertools
import math
from contextlib import contextmanager
from typing import Iterable, Union

import mpmath

LogValue = Union[float, mpmath.mpf]

BOTTOM: float = -math.inf
"""Log of exact zero."""

ORIGIN: float = -math.inf
"""Log-coordinate of the point t = 0."""


def is_bottom(a) -> bool:
    return a == BOTTOM


def _mp(*xs) -> bool:
    return any(isinstance(x, mpmath.mpf) for x in xs)


def exp(x):
    return mpmath.exp(x) if _mp(x) else math.exp(x)


def log(x):
    if x == 0:
        return BOTTOM
    return mpmath.log(x) if _mp(x) else math.log(x)


def log1p(x):
    return mpmath.log1p(x) if _mp(x) else math.log1p(x)


def expm1(x):
    return mpmath.expm1(x) if _mp(x) else math.expm1(x)


def sqrt(x):
    return mpmath.sqrt(x) if _mp(x) else math.sqrt(x)


def from_real(r) -> LogValue:
    """Log of a nonnegative real; ``0`` maps to :data:`BOTTOM`."""
    if r < 0:
        raise ValueError(f"negative magnitude {r!r} has no log representation")
    return log(r)


def to_real(a) -> float:
    """Back to the linear scale, as a float (may overflow to ``inf``)."""
    if is_bottom(a):
        return 0.0
    try:
        return float(exp(a))
    except OverflowError:
        return math.inf


def log_add(a, b) -> LogValue:
    """``log(e**a + e**b)`` without overflow."""
    if is_bottom(a):
        return b
    if is_bottom(b):
        return a
    if a < b:
        a, b = b, a
    return a + log1p(exp(b - a))


def log_sub(a, b) -> LogValue:
    """``log(e**a - e**b)``; requires ``a >= b``."""
    if a < b:
        raise ValueError(f"log_sub: {a!r} < {b!r}, difference would be negative")
    if a == b:
        return BOTTOM
    if is_bottom(b):
        return a
    # log(-expm1(.)) keeps full relative accuracy both near and far from cancellation
    return a + log(-expm1(b - a))


def log_sum(values: Iterable) -> LogValue:
    """``log(sum(e**v))`` with the maximum as pivot.

    The shifted terms are accumulated with ``math.fsum`` (or mpmath's ``fsum``),
    so the result does not depend on the order of ``values``.
    """
    vals = [v for v in values if not is_bottom(v)]
    if not vals:
        return BOTTOM
    pivot = max(vals)
    if pivot == math.inf:
        return math.inf
    if _mp(*vals):
        return pivot + mpmath.log(mpmath.fsum(mpmath.exp(v - pivot) for v in vals))
    return pivot + math.log(math.fsum(math.exp(v - pivot) for v in vals))


def digits_for(magnitude) -> int:
    """Decimal digits needed to resolve O(1) offsets on coordinates of size ``magnitude``."""
    if magnitude <= 1:
        return 30
    return int(math.ceil(float(mpmath.log10(magnitude)))) + 30


@contextmanager
def precision(dps: int | None):
    """Raise mpmath's working precision to ``dps`` digits for the block (never lowers it)."""
    if dps and dps > mpmath.mp.dps:
        with mpmath.workdps(dps):
            yield
    else:
        yield


def follows_precision(func):
    """Run ``func`` at the largest ``dps`` carried by any of its arguments."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        dps = 0
        for arg in itertools.chain(args, kwargs.values()):
            dps = max(dps, getattr(arg, "dps", None) or 0)
        with precision(dps):
            return func(*args, **kwargs)

    return wrapper
