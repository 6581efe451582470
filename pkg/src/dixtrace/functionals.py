"""Finite-scale surrogates for the arguments of a generalised limit.

A generalised limit cannot be constructed, so every functional here produces a
:class:`WindowSeries`, the sampled function ``t -> g(t)`` on a grid of
log-coordinates, and the theorems become checkable statements about such series:
their tails, their Cesaro means, their averages over the windows ``[N, N log N]``.

All functions accept a :class:`~dixtrace.piecewise.StepFunction` (rearranged on the
fly) or one of the closed-form decreasing functions of :mod:`dixtrace.piecewise`.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.integrate import trapezoid

from . import logscale as ls
from .errors import DivergenceError
from .logscale import follows_precision, is_bottom, log_add, log_sub
from .piecewise import StepFunction, as_decreasing
from .weights import (
    WeightFunction, classify_good_upper_bound, classify_sedaev,
)

SCHEMA = "1"


@dataclass(frozen=True)
class WindowSeries:
    """Values ``g(e**u_j)`` on an increasing grid of log-coordinates."""

    grid: tuple
    values: tuple
    meta: str = ""
    dps: int | None = field(default=None, compare=False)

    def __post_init__(self):
        grid, values = tuple(self.grid), tuple(float(v) for v in self.values)
        if len(grid) != len(values):
            raise ValueError("grid and values differ in length")
        if any(not a < b for a, b in zip(grid, grid[1:])):
            raise ValueError("grid must be strictly increasing")
        if not all(math.isfinite(v) for v in values):
            raise ValueError(f"non-finite value in series {self.meta!r}")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return len(self.grid)

    @property
    def u(self) -> np.ndarray:
        return np.array([float(u) for u in self.grid])

    @property
    def y(self) -> np.ndarray:
        return np.array(self.values)

    def minus(self, other: "WindowSeries", meta: str | None = None) -> "WindowSeries":
        if self.grid != other.grid:
            raise ValueError("series live on different grids")
        return WindowSeries(self.grid, tuple(a - b for a, b in zip(self.values, other.values)),
                            meta or f"{self.meta} - {other.meta}", dps=self.dps)

    def as_dict(self) -> dict:
        return {"meta": self.meta, "u": [float(u) for u in self.grid], "value": list(self.values)}

    @classmethod
    def from_dict(cls, d: dict) -> "WindowSeries":
        return cls(tuple(d["u"]), tuple(d["value"]), d.get("meta", ""))

    def to_json(self) -> str:
        return json.dumps({"schema": SCHEMA, **self.as_dict()})

    @classmethod
    def from_json(cls, text: str) -> "WindowSeries":
        return cls.from_dict(json.loads(text))

    def to_csv(self) -> str:
        return series_to_csv([self])

    @classmethod
    def from_csv(cls, text: str) -> "WindowSeries":
        (series,) = series_from_csv(text)
        return series


def series_to_csv(series: Sequence[WindowSeries]) -> str:
    """One section per series: a ``# meta`` comment, the ``u,value`` header, the rows."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for s in series:
        buf.write(f"# {s.meta}\n")
        writer.writerow(["u", "value"])
        for u, v in zip(s.grid, s.values):
            writer.writerow([repr(float(u)), repr(v)])
    return buf.getvalue()


def series_from_csv(text: str) -> list[WindowSeries]:
    out, meta, rows = [], "", None
    for line in text.splitlines():
        if line.startswith("#"):
            if rows is not None:
                out.append(WindowSeries(tuple(r[0] for r in rows), tuple(r[1] for r in rows), meta))
            meta, rows = line[1:].strip(), None
        elif line.strip() == "u,value":
            rows = []
        elif line.strip():
            if rows is None:
                raise ValueError("CSV row before the u,value header")
            a, b = line.split(",")
            rows.append((float(a), float(b)))
    if rows is not None:
        out.append(WindowSeries(tuple(r[0] for r in rows), tuple(r[1] for r in rows), meta))
    return out


def uniform_grid(u_lo, u_hi, count: int) -> tuple:
    """``count`` equally spaced log-coordinates (mpf-safe: offsets are added to ``u_lo``)."""
    step = (u_hi - u_lo) / (count - 1)
    return tuple(u_lo + i * step for i in range(count - 1)) + (u_hi,)


def _ratio(log_num, log_den) -> float:
    return ls.to_real(log_num - log_den)


# -- partial sums and cutoff sums ------------------------------------------------------


@follows_precision
def partial_sum_ratio(x, psi: WeightFunction, grid: Iterable) -> WindowSeries:
    """``g(t) = (1/psi(t)) int_0^t x*``."""
    xs = as_decreasing(x)
    grid = tuple(grid)
    vals = [_ratio(xs.log_primitive(u), psi.log_eval(u)) for u in grid]
    return WindowSeries(grid, tuple(vals), f"partial_sum_ratio psi={psi.spec()}", dps=getattr(x, "dps", None))


def _cutoff(psi: WeightFunction, u, mode: str):
    if mode == "fixed":
        return -u
    if mode == "adjusted":
        return psi.log_eval(u) - u
    raise ValueError(f"mode must be 'fixed' or 'adjusted', not {mode!r}")


@follows_precision
def lidskii_cutoff_series(x, psi: WeightFunction, mode: str, grid: Iterable) -> WindowSeries:
    """``h(t) = (1/psi(t)) int_0^{n_x(c(t))} x*`` with ``c(t) = 1/t`` or ``psi(t)/t``.

    The integral is the jump sum over levels strictly above the cutoff.
    """
    xs = as_decreasing(x)
    grid = tuple(grid)
    vals = [_ratio(xs.log_mass_above(_cutoff(psi, u, mode)), psi.log_eval(u)) for u in grid]
    return WindowSeries(grid, tuple(vals), f"lidskii_cutoff_series mode={mode} psi={psi.spec()}",
                        dps=getattr(x, "dps", None))


def sequence_cutoff_sum(x: Sequence[float], psi: WeightFunction, n: int, mode: str) -> float:
    """``(1/psi(n)) sum x_k`` over ``x_k > 1/n`` (fixed) or ``x_k >= psi(n)/n`` (adjusted)."""
    xs = np.asarray(x, dtype=float)
    if np.any(np.diff(xs) > 0):
        raise ValueError("sequence must be nonincreasing")
    w = psi(n)
    if mode == "fixed":
        keep = xs > 1.0 / n
    elif mode == "adjusted":
        keep = xs >= w / n
    else:
        raise ValueError(f"mode must be 'fixed' or 'adjusted', not {mode!r}")
    return float(math.fsum(xs[keep]) / w)


# -- Cesaro mean and window functional ---------------------------------------------------


def cesaro(series: WindowSeries) -> WindowSeries:
    """``(Mg)(e**U) = (1/U) int_0^U g(e**u) du`` by the trapezoidal rule.

    On ``[0, u_0]`` the series is continued linearly through its first two points,
    which keeps constants and linear functions exact.  The first grid point is dropped.
    """
    u, y = series.u, series.y
    if u.size < 2:
        raise ValueError("Cesaro mean needs at least two grid points")
    if u[0] < 0:
        raise ValueError("Cesaro mean needs a grid starting at u >= 0")
    slope = (y[1] - y[0]) / (u[1] - u[0])
    head = u[0] * (y[0] - slope * u[0] / 2)
    acc = head + np.concatenate([[0.0], np.cumsum((y[1:] + y[:-1]) / 2 * np.diff(u))])
    out_u, out_y = u[1:], acc[1:] / u[1:]
    return WindowSeries(tuple(out_u), tuple(out_y), f"cesaro({series.meta})")


@follows_precision
def pi_window(x, U) -> float:
    """``(1/log U) int_U^{U + log U} x(e**u) du``, i.e. ``(1/loglog N) int_N^{N log N} x(s) ds/s``.

    ``U = log N`` must exceed 1.  The normaliser is the computed window width, so the
    constant function gives exactly 1.
    """
    if not U > 1:
        raise ValueError("window needs N > e (U = log N > 1)")
    hi = U + ls.log(U)
    width = hi - U
    if isinstance(x, StepFunction):
        total = 0.0
        bps = x.breakpoints
        for i, v in enumerate(x.values + (x.tail_value,)):
            a = max(bps[i], U)
            b = min(bps[i + 1], hi) if i + 1 < len(bps) else hi
            if b > a and not is_bottom(v):
                total += ls.to_real(v) * float(b - a)
        return total / float(width)
    if isinstance(x, WindowSeries):
        if not (x.grid[0] <= U and x.grid[-1] >= hi):
            raise ValueError("series grid does not cover the window")
        w = np.array([float(u - U) for u in x.grid])
        y = x.y
        W = float(width)
        inner = (w > 0) & (w < W)
        pts = np.concatenate([[0.0], w[inner], [W]])
        vals = np.concatenate([[np.interp(0.0, w, y)], y[inner], [np.interp(W, w, y)]])
        return float(trapezoid(vals, pts) / W)
    raise TypeError("pi_window takes a StepFunction or a WindowSeries")


# -- heat kernel ---------------------------------------------------------------------


def heat_normalization(alpha: float) -> float:
    """``alpha / Gamma(1/alpha)``; Gamma from libm's ``tgamma`` via ``math.gamma``."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    return alpha / math.gamma(1.0 / alpha)


def heat_kernel_series(x: StepFunction, alpha: float, grid: Iterable) -> WindowSeries:
    """``H(t) = (alpha/Gamma(1/alpha)) (1/t) sum_i mu_i exp(-(t v_i)**-alpha)`` over the blocks of ``x``."""
    norm = heat_normalization(alpha)
    if not is_bottom(x.tail_value):
        raise DivergenceError("heat-kernel sum diverges: x has infinite support mass")
    blocks = [(float(v), float(length)) for v, length in x.blocks() if not is_bottom(v)]
    grid = tuple(grid)
    if not blocks:
        return WindowSeries(grid, (0.0,) * len(grid), f"heat_kernel alpha={alpha:g}")
    V = np.array([b[0] for b in blocks])
    Lm = np.array([b[1] for b in blocks])
    vals = []
    for u in grid:
        u = float(u)
        terms = Lm - u - np.exp(-alpha * (u + V))
        m = terms.max()
        vals.append(norm * math.exp(m) * math.fsum(np.exp(terms - m)))
    return WindowSeries(grid, tuple(vals), f"heat_kernel alpha={alpha:g}")


# -- the inequality lemmas -------------------------------------------------------------


@dataclass(frozen=True)
class LemmaReport:
    """Worst relative excess ``log(lhs/rhs)`` (floored at 0) of each pointwise inequality."""

    n: int
    simple_violation: float
    dilated_violation: float
    simple_min_slack: float
    dilated_min_slack: float
    points: int

    @property
    def max_violation(self) -> float:
        return max(self.simple_violation, self.dilated_violation)

    def as_dict(self):
        return {**self.__dict__, "max_violation": self.max_violation}


@follows_precision
def check_upper_estimate_lemmas(x, psi: WeightFunction, n: int, grid: Iterable) -> LemmaReport:
    """Pointwise checks of the two upper estimates.

    * ``int_0^t x* <= int_0^{n_x(1/t)} x* + 1``
    * ``int_0^t x* <= int_0^{n_x(psi(nt)/nt)} x* + psi(nt)/n``
    """
    xs = as_decreasing(x)
    logn = math.log(n)
    worst1 = worst2 = 0.0
    slack1 = slack2 = math.inf
    count = 0
    for u in grid:
        F = xs.log_primitive(u)
        if is_bottom(F):
            continue
        rhs1 = log_add(xs.log_mass_above(-u), 0.0)
        a = psi.log_eval(u + logn)
        rhs2 = log_add(xs.log_mass_above(a - (u + logn)), a - logn)
        d1, d2 = float(F - rhs1), float(F - rhs2)
        worst1, worst2 = max(worst1, d1), max(worst2, d2)
        slack1, slack2 = min(slack1, -d1), min(slack2, -d2)
        count += 1
    return LemmaReport(n, worst1, worst2, slack1, slack2, count)


@follows_precision
def check_lower_estimate_lemma(x, psi: WeightFunction, grid: Iterable, c: int) -> dict:
    """Pointwise content of the lower estimate at dilation constant ``c``.

    * ``n_x(psi(t)/t) <= c t``
    * ``(1/psi(t)) int_0^{n_x(psi(t)/t)} x* <= (psi(ct)/psi(t)) (1/psi(ct)) int_0^{ct} x*``

    Returns the worst log-excess of each (0 when both hold everywhere).
    """
    xs = as_decreasing(x)
    logc = math.log(c)
    dx_worst = est_worst = 0.0
    for u in grid:
        cut = psi.log_eval(u) - u
        level = xs.log_level(cut)
        if not is_bottom(level):
            dx_worst = max(dx_worst, float(level - (u + logc)))
        mass = xs.log_mass_above(cut)
        if not is_bottom(mass):
            est_worst = max(est_worst, float(mass - xs.log_primitive(u + logc)))
    return {"c": c, "dx_violation": dx_worst, "estimate_violation": est_worst}


@dataclass(frozen=True)
class DxBound:
    c_fixed: float
    c_adjusted: float
    warnings: tuple = ()

    def as_dict(self):
        return {"c_fixed": self.c_fixed, "c_adjusted": self.c_adjusted, "warnings": list(self.warnings)}


def _tail_max(vals: np.ndarray, what: str) -> float:
    if not np.all(np.isfinite(vals)):
        raise DivergenceError(f"{what}: ratio overflows on the grid")
    running = np.maximum.accumulate(vals)
    quarter = max(1, len(vals) // 4)
    if vals.size > 4 and np.argmax(vals) == len(vals) - 1 and running[-1] > 1.001 * running[-quarter - 1] > 0:
        raise DivergenceError(f"{what}: running maximum still growing at the end of the grid")
    return float(running[-1])


@follows_precision
def dx_bound_constant(x, psi: WeightFunction, grid: Iterable, tail_fraction: float = 0.5) -> DxBound:
    """Tail maxima of ``n_x(1/t)/(t psi(t))`` (fixed) and ``n_x(psi(t)/t)/t`` (adjusted)."""
    xs = as_decreasing(x)
    grid = tuple(grid)
    tail = grid[int(len(grid) * (1 - tail_fraction)):]
    fixed = np.array([_ratio(xs.log_level(-u), u + psi.log_eval(u)) for u in tail])
    adjusted = np.array([_ratio(xs.log_level(psi.log_eval(u) - u), u) for u in tail])
    notes = []
    if not classify_good_upper_bound(psi).holds:
        notes.append(f"psi={psi.spec()} fails limsup psi(2t)/psi(t) < 2: adjusted constant not guaranteed")
    if not classify_sedaev(psi).holds:
        notes.append(f"psi={psi.spec()} fails lim psi(t psi(t))/psi(t) = 1: fixed constant not guaranteed")
    return DxBound(_tail_max(fixed, "n_x(1/t)/(t psi(t))"),
                   _tail_max(adjusted, "n_x(psi(t)/t)/t"), tuple(notes))


@follows_precision
def tail_gap_series(x, grid: Iterable) -> WindowSeries:
    """``(1/log t) int_t^{n_x(1/t)} (x*(s) - 1/t) ds``, an oriented integral.

    When ``n_x(1/t) < t`` the orientation flips the sign, giving
    ``(1/log t) int_{n_x(1/t)}^t (1/t - x*) >= 0``.
    """
    xs = as_decreasing(x)
    grid = tuple(grid)
    vals = []
    for u in grid:
        if not u > 0:
            raise ValueError("tail gap needs t > 1")
        n = xs.log_level(-u)
        vals.append((oriented_integral(xs, u, n) - float(ls.expm1(n - u))) / float(u))
    return WindowSeries(grid, tuple(vals), "tail_gap", dps=getattr(x, "dps", None))


def oriented_integral(xs, a, b) -> float:
    """``int_{e**a}^{e**b} xs`` for a decreasing ``xs``, negative when ``b < a``."""
    pa, pb = xs.log_primitive(a), xs.log_primitive(b)
    if b >= a:
        return ls.to_real(log_sub(pb, pa)) if pb > pa else 0.0
    return -(ls.to_real(log_sub(pa, pb)) if pa > pb else 0.0)


def tail_summary(series: WindowSeries, tol: float = 1e-2, tail_fraction: float = 0.25) -> dict:
    """The value of the series when its tail has settled, else the tail envelope."""
    y = series.y
    tail = y[int(len(y) * (1 - tail_fraction)):] if len(y) else y
    lo, hi = float(tail.min()), float(tail.max())
    converged = hi - lo < tol
    return {"converged": converged, "value": float(tail[-1]) if converged else None,
            "tail_min": lo, "tail_max": hi}
