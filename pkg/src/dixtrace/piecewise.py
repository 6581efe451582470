"""Nonnegative step functions on [0, inf) held in log-coordinates.

A point ``t`` is stored as ``u = log t`` (``t = 0`` is :data:`~dixtrace.logscale.ORIGIN`)
and a function value ``v`` as the :data:`LogValue` ``log v``.  Intervals are
half-open, ``[u_i, u_{i+1})``, so every function is right-continuous; the function
is zero to the left of its first breakpoint.

Integrals, level sets and rearrangements are exact block sums assembled with
``log_add``/``log_sub``: there is no quadrature anywhere in this module.

Decreasing functions that are not step functions (``min(c, c/t)`` and ``psi'``)
are exposed through the same four methods as a decreasing :class:`StepFunction`:

``log_value(u)``
    log of ``x(e**u)``
``log_primitive(u)``
    log of ``int_0^{e**u} x``
``log_level(lam)``
    log of ``n_x(e**lam) = m{x > e**lam}``
``log_mass_above(lam)``
    log of the jump sum ``-int_lam^inf mu dn_x(mu)``
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import mpmath

from . import logscale as ls
from .logscale import BOTTOM, ORIGIN, follows_precision, is_bottom, log_add, log_sub, log_sum

FORMAT_HEADER = "# dixtrace step function v1"


def _check_coord(u):
    if u != u:
        raise ValueError("log-coordinate is NaN")


@dataclass(frozen=True)
class StepFunction:
    """Right-continuous step function in canonical form.

    ``values[i]`` holds on ``[breakpoints[i], breakpoints[i+1])`` and ``tail_value``
    on ``[breakpoints[-1], inf)``.  Construction merges equal neighbours and strips
    leading zero blocks, so two equal functions compare equal.

    ``dps`` is the mpmath working precision the coordinates were built at (``None``
    for plain floats).
    """

    breakpoints: tuple
    values: tuple = ()
    tail_value: object = BOTTOM
    dps: int | None = field(default=None, compare=False)

    def __post_init__(self):
        bps = tuple(self.breakpoints)
        vals = tuple(self.values)
        if not bps:
            raise ValueError("a step function needs at least one breakpoint")
        if len(vals) != len(bps) - 1:
            raise ValueError(
                f"{len(bps)} breakpoints need {len(bps) - 1} interval values, got {len(vals)}"
            )
        for u in bps:
            _check_coord(u)
            if u == math.inf:
                raise ValueError("breakpoints must be finite or ORIGIN")
        for a, b in zip(bps, bps[1:]):
            if not a < b:
                raise ValueError("breakpoints must be strictly increasing")
        for v in vals + (self.tail_value,):
            if v != v or v == math.inf:
                raise ValueError(f"invalid log-value {v!r}")

        # merge equal neighbours, the tail included
        out_b, out_v = [bps[0]], []
        current = vals[0] if vals else self.tail_value
        for u, v in zip(bps[1:], vals[1:] + (self.tail_value,)):
            if v == current:
                continue
            out_v.append(current)
            out_b.append(u)
            current = v
        tail = current
        # strip leading zero blocks
        while out_v and is_bottom(out_v[0]):
            out_v.pop(0)
            out_b.pop(0)
        if not out_v and is_bottom(tail):
            out_b = [ORIGIN]
        object.__setattr__(self, "breakpoints", tuple(out_b))
        object.__setattr__(self, "values", tuple(out_v))
        object.__setattr__(self, "tail_value", tail)

    # -- constructors -------------------------------------------------------

    @classmethod
    def from_linear(cls, edges: Sequence[float], heights: Sequence[float], tail: float = 0.0):
        """Build from plain coordinates: ``heights[i]`` on ``[edges[i], edges[i+1])``."""
        return cls(
            tuple(ls.log(e) for e in edges),
            tuple(ls.from_real(h) for h in heights),
            ls.from_real(tail),
        )

    @classmethod
    def indicator(cls, a: float, b: float, height: float = 1.0):
        """``height`` times the indicator of ``[a, b)``."""
        return cls.from_linear([a, b], [height])

    @classmethod
    def constant(cls, c: float = 1.0):
        return cls((ORIGIN,), (), ls.from_real(c))

    @classmethod
    def from_sequence(cls, seq: Sequence[float]):
        """The embedding ``{x_j} -> sum_j x_j chi_[j-1, j)``."""
        edges = range(len(seq) + 1)
        return cls(tuple(ls.log(e) for e in edges), tuple(ls.from_real(abs(x)) for x in seq))

    # -- structure ----------------------------------------------------------

    @cached_property
    def is_decreasing(self) -> bool:
        """True when the function starts at t = 0 and never increases."""
        if self.breakpoints[0] != ORIGIN:
            return False
        seq = self.values + (self.tail_value,)
        return all(a >= b for a, b in zip(seq, seq[1:]))

    @cached_property
    def _lengths(self) -> tuple:
        bps = self.breakpoints
        with ls.precision(self.dps):
            return tuple(log_sub(b, a) for a, b in zip(bps, bps[1:]))

    @cached_property
    def _prefix(self) -> tuple:
        # _prefix[i] = log int_0^{exp(breakpoints[i])} f
        acc = BOTTOM
        out = [acc]
        with ls.precision(self.dps):
            for v, length in zip(self.values, self._lengths):
                acc = log_add(acc, v + length)
                out.append(acc)
        return tuple(out)

    @cached_property
    def _neg_values(self) -> list:
        return [-v for v in self.values]

    def blocks(self):
        """Yield ``(log_value, log_length)`` of every bounded block."""
        yield from zip(self.values, self._lengths)

    def _index(self, u) -> int:
        return bisect.bisect_right(self.breakpoints, u) - 1

    # -- the decreasing-function protocol -------------------------------------

    def log_value(self, u):
        _check_coord(u)
        i = self._index(u)
        if i < 0:
            return BOTTOM
        if i >= len(self.values):
            return self.tail_value
        return self.values[i]

    def log_primitive(self, u):
        """``log int_0^{e**u} f``."""
        _check_coord(u)
        if u == math.inf:
            return math.inf if not is_bottom(self.tail_value) else self._prefix[-1]
        i = self._index(u)
        if i < 0:
            return BOTTOM
        v = self.values[i] if i < len(self.values) else self.tail_value
        with ls.precision(self.dps):
            part = BOTTOM if is_bottom(v) else v + log_sub(u, self.breakpoints[i])
            return log_add(self._prefix[i], part)

    def log_level(self, lam):
        """``log m{f > e**lam}``, strict inequality."""
        if not is_bottom(self.tail_value) and self.tail_value > lam:
            return math.inf
        with ls.precision(self.dps):
            if self.is_decreasing:
                j = bisect.bisect_left(self._neg_values, -lam)
                return self.breakpoints[j] if j > 0 else BOTTOM
            return log_sum(length for v, length in self.blocks() if v > lam)

    def log_mass_above(self, lam):
        """Jump sum ``sum_{v_j > lam} v_j * m(level set j)``, as a LogValue."""
        if not is_bottom(self.tail_value) and self.tail_value > lam:
            return math.inf
        with ls.precision(self.dps):
            if self.is_decreasing:
                j = bisect.bisect_left(self._neg_values, -lam)
                return self._prefix[j]
            return log_sum(v + length for v, length in self.blocks() if v > lam)

    def sup_log_value(self):
        return max(self.values + (self.tail_value,))


# -- closed-form decreasing functions -------------------------------------------


@dataclass(frozen=True)
class ReciprocalFunction:
    """``x(t) = c`` on ``[0, 1)`` and ``c/t`` on ``[1, inf)``; ``c = 1`` gives ``min(1, 1/t)``."""

    c: float = 1.0
    dps = None

    @property
    def _logc(self):
        return math.log(self.c)

    def log_value(self, u):
        return self._logc - (u if u > 0 else 0.0)

    def log_primitive(self, u):
        if is_bottom(u):
            return BOTTOM
        if u <= 0:
            return self._logc + u
        return self._logc + ls.log1p(u)

    def log_level(self, lam):
        if lam >= self._logc:
            return BOTTOM
        return self._logc - lam

    def log_mass_above(self, lam):
        return self.log_primitive(self.log_level(lam))

    def sample(self, u_max: float, points_per_decade: int = 64, u_min: float = 0.0):
        return sample_decreasing(self, u_min, u_max, points_per_decade)


@dataclass(frozen=True)
class WeightDerivative:
    """``x = psi'`` for a weight ``psi``; then ``int_0^t x = psi(t)``."""

    psi: object
    dps = None

    def log_value(self, u):
        return self.psi.log_derivative(u)

    def log_primitive(self, u):
        if is_bottom(u):
            return BOTTOM
        return self.psi.log_eval(u)

    def log_level(self, lam):
        return self.psi.derivative_level(lam)

    def log_mass_above(self, lam):
        return self.log_primitive(self.log_level(lam))

    def sample(self, u_max: float, points_per_decade: int = 64, u_min: float = -2.0):
        return sample_decreasing(self, u_min, u_max, points_per_decade)


def sample_decreasing(x, u_min: float, u_max: float, points_per_decade: int = 64) -> StepFunction:
    """Mean-value step approximation of a decreasing function.

    Nodes are geometric in ``t`` (``points_per_decade`` per factor of ten).  Each
    block carries the average of ``x`` over it, so the primitive of the result agrees
    with that of ``x`` exactly at every node and the result is again decreasing.
    The first block is ``[0, e**u_min)``; beyond ``e**u_max`` the result is zero.
    """
    if points_per_decade < 1 or not u_min < u_max:
        raise ValueError("need u_min < u_max and points_per_decade >= 1")
    count = max(1, int(math.ceil((u_max - u_min) * points_per_decade / math.log(10))))
    step = (u_max - u_min) / count
    nodes = [ORIGIN] + [u_min + i * step for i in range(count + 1)]
    prims = [x.log_primitive(u) for u in nodes]
    values = []
    for a, b, pa, pb in zip(nodes, nodes[1:], prims, prims[1:]):
        values.append(log_sub(pb, pa) - log_sub(b, a) if pb > pa else BOTTOM)
    # averages of a decreasing function decrease; clamp roundoff ties
    for i in range(1, len(values)):
        if values[i] > values[i - 1]:
            values[i] = values[i - 1]
    return StepFunction(tuple(nodes), tuple(values), BOTTOM)


def as_decreasing(x):
    """``x*`` for step functions; closed forms are already decreasing."""
    if isinstance(x, StepFunction):
        return rearrangement(x)
    return x


# -- operations -----------------------------------------------------------------


def eval(f: StepFunction, u):  # noqa: A001 - mirrors the operation name
    """Value of ``f`` at ``t = e**u`` as a LogValue."""
    if u != u:
        raise ValueError("evaluation point is NaN (below the origin)")
    return f.log_value(u)


@follows_precision
def integral(f: StepFunction, a=ORIGIN, b=math.inf):
    """``log int_{e**a}^{e**b} f``, exact block sum."""
    if b < a:
        raise ValueError(f"integral bounds reversed: {a!r} > {b!r}")
    if a == b:
        return BOTTOM
    terms = []
    bps = f.breakpoints
    for i, v in enumerate(f.values):
        lo, hi = max(bps[i], a), min(bps[i + 1], b)
        if hi > lo and not is_bottom(v):
            terms.append(v + log_sub(hi, lo))
    if not is_bottom(f.tail_value):
        if b == math.inf:
            return math.inf
        lo = max(bps[-1], a)
        if b > lo:
            terms.append(f.tail_value + log_sub(b, lo))
    return log_sum(terms)


@follows_precision
def rearrangement(f: StepFunction) -> StepFunction:
    """Decreasing rearrangement ``f*`` (right-continuous, starts at t = 0)."""
    if f.is_decreasing:
        return f
    if not is_bottom(f.tail_value):
        raise ValueError("rearrangement needs a function vanishing at infinity (bottom tail)")
    blocks = sorted(((v, length) for v, length in f.blocks() if not is_bottom(v)),
                    key=lambda b: b[0], reverse=True)
    merged: list[list] = []
    for v, length in blocks:
        if merged and merged[-1][0] == v:
            merged[-1][1] = log_add(merged[-1][1], length)
        else:
            merged.append([v, length])
    bps, vals = [ORIGIN], []
    pos = ORIGIN
    for v, length in merged:
        pos = log_add(pos, length)
        if pos > bps[-1]:  # blocks below coordinate resolution vanish
            bps.append(pos)
            vals.append(v)
    return StepFunction(tuple(bps), tuple(vals), BOTTOM, dps=f.dps)


@follows_precision
def distribution(f: StepFunction, lam):
    """``log n_f(e**lam)`` with ``n_f(lam) = m{s : f(s) > lam}``."""
    return f.log_level(lam)


@follows_precision
def dilate(f: StepFunction, n: int, direction: str = "expand") -> StepFunction:
    """``x(t) -> x(t/n)`` (expand) or ``x(t) -> x(n t)`` (contract)."""
    if n < 1:
        raise ValueError("dilation factor must be a positive integer")
    shift = ls.log(n) if f.dps is None else mpmath.log(n)
    if direction == "contract":
        shift = -shift
    elif direction != "expand":
        raise ValueError(f"unknown direction {direction!r}")
    bps, vals = [], []
    for u, v in zip(f.breakpoints, f.values + (f.tail_value,)):
        u = u if u == ORIGIN else u + shift
        if bps and not u > bps[-1]:  # collapsed by rounding: the later block wins
            bps.pop()
            vals.pop()
        bps.append(u)
        vals.append(v)
    return StepFunction(tuple(bps), tuple(vals[:-1]), vals[-1], dps=f.dps)


@follows_precision
def check_jump_sum(f: StepFunction, lam):
    """Both sides of ``int_0^{n_f(lam)} f* = -int_lam^inf mu dn_f(mu)``.

    The left side integrates the rearrangement up to its level point; the right side
    is the jump sum over the blocks of ``f`` itself.
    """
    fs = rearrangement(f)
    lhs = integral(fs, ORIGIN, distribution(f, lam))
    rhs = log_sum(v + length for v, length in f.blocks() if v > lam)
    return lhs, rhs


check_eq3 = check_jump_sum


# -- text format ------------------------------------------------------------------


def _fmt(x) -> str:
    if x == ORIGIN:
        return "-inf"
    if isinstance(x, mpmath.mpf):
        return mpmath.nstr(x, mpmath.mp.dps, min_fixed=-math.inf, max_fixed=math.inf)
    return repr(float(x))


def dumps(f: StepFunction) -> str:
    """One record per breakpoint: ``u log_value`` (value on ``[u, next u)``; last line is the tail).

    ``origin`` marks t = 0 and ``bottom`` an exact zero value.
    """
    lines = [FORMAT_HEADER]
    if f.dps:
        lines.append(f"# dps {f.dps}")
    with ls.precision(f.dps):
        for u, v in zip(f.breakpoints, f.values + (f.tail_value,)):
            us = "origin" if u == ORIGIN else _fmt(u)
            vs = "bottom" if is_bottom(v) else _fmt(v)
            lines.append(f"{us} {vs}")
    return "\n".join(lines) + "\n"


def loads(text: str) -> StepFunction:
    dps = None
    records = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if len(parts) == 2 and parts[0] == "dps":
                dps = int(parts[1])
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected 'u log_value', got {raw!r}")
        records.append(parts)
    if not records:
        raise ValueError("no breakpoints in step function text")
    with ls.precision(dps):
        conv = mpmath.mpf if dps else float

        def num(tok, special):
            if tok in (special, "-inf"):
                return -math.inf
            return conv(tok)

        bps = tuple(num(u, "origin") for u, _ in records)
        vals = tuple(num(v, "bottom") for _, v in records)
    return StepFunction(bps, vals[:-1], vals[-1], dps=dps)


def read(path) -> StepFunction:
    with open(path) as fh:
        return loads(fh.read())


def write(f: StepFunction, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps(f))
