"""Concave weights psi and the Marcinkiewicz norms they define.

Each built-in weight is ``psi(t) = phi(t)`` beyond a splice point and linear
through the origin below it, with the splice chosen so the result is concave:

====================  ======================  ==============
name                  psi(t) for t >= splice  splice point
====================  ======================  ==============
``log``               ``log t``               ``t = e``
``expsqrtlog``        ``exp(sqrt(log t))``    ``t = e``
``power:p``           ``t**p``                ``t = 1``
====================  ======================  ==============

A tabulated weight (``table:PATH``) interpolates ``(t_i, psi_i)`` linearly, is
linear through the origin below ``t_0`` and continues as
``psi_n + s_n t_n log(t/t_n)`` past the table, which keeps it concave, ``C^1`` at
``t_n`` and ``o(t)``.

All evaluation happens in log-coordinates: ``log_eval(u) = log psi(e**u)``.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass

import numpy as np

from . import logscale as ls
from .errors import ConvergenceError, DivergenceError
from .logscale import BOTTOM, follows_precision, is_bottom
from .piecewise import StepFunction, as_decreasing

__all__ = [
    "WeightFunction", "LogWeight", "ExpSqrtLogWeight", "PowerWeight", "TabulatedWeight", "parse_psi",
    "ConditionCheck", "classify_good_upper_bound", "classify_limit_condition",
    "classify_sedaev", "marcinkiewicz_norm_function", "marcinkiewicz_norm_sequence",
    "log_grid", "class_report",
]


class WeightFunction:
    """Interface of a weight in the class Psi (see the concrete subclasses)."""

    name = "abstract"
    splice_u = 0.0

    def log_eval(self, u):
        raise NotImplementedError

    def log_derivative(self, u):
        """Log of the right derivative ``psi'(e**u)``."""
        raise NotImplementedError

    def log_inverse(self, y):
        """The ``u`` with ``log_eval(u) == y``."""
        raise NotImplementedError

    def derivative_level(self, lam):
        """``log m{s : psi'(s) > e**lam}``."""
        raise NotImplementedError

    def __call__(self, t: float) -> float:
        if t <= 0:
            return 0.0
        return ls.to_real(self.log_eval(math.log(t)))

    def spec(self) -> str:
        return self.name

    @property
    def kinks(self) -> tuple:
        """Log-coordinates where ``psi'`` may jump."""
        return (self.splice_u,)


@dataclass(frozen=True)
class LogWeight(WeightFunction):
    name = "log"
    splice_u = 1.0

    def log_eval(self, u):
        if is_bottom(u):
            return BOTTOM
        return ls.log(u) if u >= 1 else u - 1

    def log_derivative(self, u):
        return -u if u >= 1 else -1.0

    def log_inverse(self, y):
        return ls.exp(y) if y >= 0 else y + 1

    def derivative_level(self, lam):
        return -lam if lam < -1 else BOTTOM


@dataclass(frozen=True)
class ExpSqrtLogWeight(WeightFunction):
    name = "expsqrtlog"
    splice_u = 1.0

    def log_eval(self, u):
        if is_bottom(u):
            return BOTTOM
        return ls.sqrt(u) if u >= 1 else u

    def log_derivative(self, u):
        if u < 1:
            return 0.0
        r = ls.sqrt(u)
        return r - u - ls.log(2 * r)

    def log_inverse(self, y):
        return y * y if y >= 1 else y

    def derivative_level(self, lam):
        if lam >= 0:
            return BOTTOM
        if lam >= -math.log(2):
            return self.splice_u
        return self._solve_level(lam)

    @staticmethod
    def _solve_level(lam):
        # psi'(e^u) = e^lam  <=>  w^2 - w + log(2w) + lam = 0  with  w = sqrt(u) > 1
        w = ls.sqrt(-lam)
        w = (1 + ls.sqrt(1 - 4 * (lam + ls.log(2 * w)))) / 2
        tol = 4 * (float(ls.mpmath.mp.eps) if ls._mp(lam) else 2.2e-16)
        for _ in range(60):
            g = w * w - w + ls.log(2 * w) + lam
            step = g / (2 * w - 1 + 1 / w)
            w = w - step
            if abs(step) <= tol * w:
                return w * w
        raise ConvergenceError(f"level inversion of psi' did not converge at lam={lam!r}")


@dataclass(frozen=True)
class PowerWeight(WeightFunction):
    p: float = 0.5
    splice_u = 0.0

    def __post_init__(self):
        if not 0 < self.p < 1:
            raise ValueError("power weight needs 0 < p < 1")

    @property
    def name(self):
        return f"power:{self.p:g}"

    def log_eval(self, u):
        if is_bottom(u):
            return BOTTOM
        return self.p * u if u >= 0 else u

    def log_derivative(self, u):
        return math.log(self.p) + (self.p - 1) * u if u >= 0 else 0.0

    def log_inverse(self, y):
        return y / self.p if y >= 0 else y

    def derivative_level(self, lam):
        if lam >= 0:
            return BOTTOM
        if lam >= math.log(self.p):
            return 0.0
        return (lam - math.log(self.p)) / (self.p - 1)


@dataclass(frozen=True)
class TabulatedWeight(WeightFunction):
    """Piecewise-linear concave weight through the points ``(t[i], values[i])``."""

    t: tuple
    values: tuple
    name: str = "table"

    def __post_init__(self):
        t = tuple(float(v) for v in self.t)
        y = tuple(float(v) for v in self.values)
        if len(t) != len(y) or len(t) < 2:
            raise ValueError("a tabulated weight needs at least two (t, psi) points")
        if not all(v > 0 for v in t + y) or not all(math.isfinite(v) for v in t + y):
            raise ValueError("tabulated t and psi must be positive and finite")
        if any(not a < b for a, b in zip(t, t[1:])) or any(not a < b for a, b in zip(y, y[1:])):
            raise ValueError("tabulated t and psi must be strictly increasing")
        slopes = [y[0] / t[0]] + [(y[i + 1] - y[i]) / (t[i + 1] - t[i]) for i in range(len(t) - 1)]
        if any(b > a * (1 + 1e-12) for a, b in zip(slopes, slopes[1:])):
            raise ValueError("tabulated weight is not concave (slopes must not increase)")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "values", y)
        object.__setattr__(self, "_slopes", tuple(slopes))
        object.__setattr__(self, "_u", tuple(math.log(v) for v in t))

    @property
    def splice_u(self):
        return self._u[0]

    @property
    def kinks(self) -> tuple:
        return self._u

    @property
    def _tail_c(self):
        return self._slopes[-1] * self.t[-1]

    def log_eval(self, u):
        if is_bottom(u):
            return BOTTOM
        if u <= self._u[0]:
            return math.log(self.values[0]) + (u - self._u[0])
        if u >= self._u[-1]:
            return ls.log(self.values[-1] + self._tail_c * (u - self._u[-1]))
        i = bisect.bisect_right(self._u, u) - 1
        return ls.log(self.values[i] + self._slopes[i + 1] * (ls.exp(u) - self.t[i]))

    def log_derivative(self, u):
        if u < self._u[-1]:
            return math.log(self._slopes[bisect.bisect_right(self._u, u)])
        return math.log(self._tail_c) - u

    def log_inverse(self, y):
        y0, yn = math.log(self.values[0]), math.log(self.values[-1])
        if y <= y0:
            return self._u[0] + (y - y0)
        if y >= yn:
            return self._u[-1] + (ls.exp(y) - self.values[-1]) / self._tail_c
        i = bisect.bisect_right(self.values, math.exp(y)) - 1
        return ls.log(self.t[i] + (ls.exp(y) - self.values[i]) / self._slopes[i + 1])

    def derivative_level(self, lam):
        level = ls.exp(lam)
        if level < self._slopes[-1]:
            return math.log(self._tail_c) - lam
        above = [i for i, s in enumerate(self._slopes) if s > level]
        return self._u[above[-1]] if above else BOTTOM

    def spec(self) -> str:
        return self.name


def read_table(path) -> TabulatedWeight:
    """Two whitespace-separated columns ``t psi``; ``#`` starts a comment."""
    pts = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected 't psi', got {raw.strip()!r}")
            pts.append((float(parts[0]), float(parts[1])))
    return TabulatedWeight(tuple(p[0] for p in pts), tuple(p[1] for p in pts), f"table:{path}")


def parse_psi(text: str) -> WeightFunction:
    """``log``, ``expsqrtlog``, ``power:p`` or ``table:PATH``."""
    if text.strip().startswith("table:"):
        try:
            return read_table(text.strip()[len("table:"):])
        except OSError as exc:
            raise ValueError(f"cannot read weight table: {exc}") from None
    key = text.strip().lower()
    if key == "log":
        return LogWeight()
    if key in ("expsqrtlog", "exp_sqrt_log"):
        return ExpSqrtLogWeight()
    if key.startswith("power:"):
        return PowerWeight(float(key.split(":", 1)[1]))
    raise ValueError(f"unknown weight {text!r}; expected log, expsqrtlog, power:p or table:PATH")


def log_grid(u_min: float, u_max: float, points_per_decade: int = 64) -> np.ndarray:
    """Points geometric in ``u`` between ``u_min`` and ``u_max`` inclusive."""
    if not 0 < u_min < u_max:
        raise ValueError("need 0 < u_min < u_max")
    count = max(2, int(round(math.log10(u_max / u_min) * points_per_decade)) + 1)
    return np.geomspace(u_min, u_max, count)


def class_report(psi: WeightFunction, u_min: float = -20.0, u_max: float = 40.0, count: int = 2001):
    """Grid checks of membership in Psi: increasing, concave, O(t) at 0, o(t) at infinity."""
    t = np.exp(np.linspace(u_min, u_max, count))
    y = np.array([psi(ti) for ti in t])
    inc = bool(np.all(np.diff(y) > 0))
    # concavity via divided differences on the nonuniform grid
    slopes = np.diff(y) / np.diff(t)
    concave = bool(np.all(np.diff(slopes) <= 1e-9 * np.abs(slopes[1:])))
    return {
        "increasing": inc,
        "concave": concave,
        "ratio_at_zero": float(y[0] / t[0]),
        "ratio_at_infinity": float(y[-1] / t[-1]),
    }


# -- condition classifiers ------------------------------------------------------------


@dataclass(frozen=True)
class ConditionCheck:
    """Verdict of a growth-condition test on a weight.

    ``status`` is ``holds``, ``fails``, ``inconclusive`` (still drifting at the end of
    the grid) or ``diverges`` (ratio unbounded).  ``estimate`` is the quantity
    compared with the threshold; ``tail_value`` the last raw grid value.
    """

    estimate: float
    status: str
    tail_value: float
    drift: float

    @property
    def holds(self) -> bool:
        return self.status == "holds"

    def as_dict(self):
        # unbounded quantities serialise as null
        def num(v):
            return float(v) if math.isfinite(v) else None

        return {"estimate": num(self.estimate), "status": self.status, "holds": self.holds,
                "tail_value": num(self.tail_value), "drift": num(self.drift)}


_DIVERGENT_LOG_RATIO = 50.0


def _log_ratio_tail(log_ratio, u_max, u_min, points_per_decade):
    grid = log_grid(u_min, u_max, points_per_decade)
    lr = np.array([float(log_ratio(u)) for u in grid])
    return grid, lr


def _richardson(grid, values):
    # fit values = L + a/u through the last two grid points
    u1, u2 = grid[-2], grid[-1]
    r1, r2 = values[-2], values[-1]
    return (u2 * r2 - u1 * r1) / (u2 - u1)


def _limit_check(log_ratio, target, tol, u_max, u_min, points_per_decade):
    grid, lr = _log_ratio_tail(log_ratio, u_max, u_min, points_per_decade)
    if not np.all(np.isfinite(lr)) or (lr[-1] > _DIVERGENT_LOG_RATIO and lr[-1] >= lr[-2]):
        return ConditionCheck(math.inf, "diverges", math.inf, math.inf)
    r = np.exp(lr)
    limit = float(_richardson(grid, r))
    drift = abs(float(r[-1]) - limit)
    miss = abs(limit - target)
    if miss < tol and miss + drift < tol:
        status = "holds"
    elif miss >= tol + drift:
        status = "fails"
    elif miss < tol:
        status = "holds" if drift < tol else "inconclusive"
    else:
        status = "inconclusive"
    return ConditionCheck(limit, status, float(r[-1]), drift)


def classify_good_upper_bound(psi: WeightFunction, u_max: float = 1e6, u_min: float = 10.0,
                              points_per_decade: int = 64, margin: float = 1e-3) -> ConditionCheck:
    """``limsup psi(2t)/psi(t) < 2``.

    The estimate is the maximum of the ratio over the last decade of the grid; the
    verdict also uses the extrapolated limit, and is inconclusive when the distance
    to ``2 - margin`` is smaller than the remaining drift.
    """
    log2 = math.log(2)
    grid, lr = _log_ratio_tail(lambda u: psi.log_eval(u + log2) - psi.log_eval(u),
                               u_max, u_min, points_per_decade)
    r = np.exp(lr)
    tail = r[grid >= u_max / 10]
    estimate = float(np.max(tail))
    limit = float(_richardson(grid, r))
    drift = abs(float(r[-1]) - limit)
    worst = max(estimate, limit)
    threshold = 2 - margin
    if worst < threshold - drift:
        status = "holds"
    elif worst >= threshold + drift:
        status = "fails"
    else:
        status = "inconclusive"
    return ConditionCheck(estimate, status, float(r[-1]), drift)


def classify_limit_condition(psi: WeightFunction, u_max: float = 1e6, u_min: float = 10.0,
                             points_per_decade: int = 64, tol: float = 1e-3) -> ConditionCheck:
    """``lim psi(2t)/psi(t) = 1``, limit extrapolated in ``1/u``."""
    log2 = math.log(2)
    return _limit_check(lambda u: psi.log_eval(u + log2) - psi.log_eval(u),
                        1.0, tol, u_max, u_min, points_per_decade)


def classify_sedaev(psi: WeightFunction, u_max: float = 1e6, u_min: float = 10.0,
                    points_per_decade: int = 64, tol: float = 1e-3) -> ConditionCheck:
    """``lim psi(t psi(t))/psi(t) = 1``; the argument is ``u + log psi(e**u)``."""

    def log_ratio(u):
        y = psi.log_eval(u)
        return psi.log_eval(u + y) - y

    return _limit_check(log_ratio, 1.0, tol, u_max, u_min, points_per_decade)


# -- norms ----------------------------------------------------------------------------


def _block_sup(fs: StepFunction, psi: WeightFunction):
    """Sup of ``F(t)/psi(t)`` over a decreasing step function, exact per block.

    On a block ``F`` is affine in ``t``; ``d/du log(F/psi) = v t / F - t psi'/psi``.  The
    first term increases in ``t`` and for concave ``psi`` with nonincreasing elasticity
    the second decreases, so the maximum sits at a block end or at the splice point;
    any interior sign change from + to - is still located by bisection.
    """
    best = 0.0
    bps = fs.breakpoints

    def ratio(u):
        F = fs.log_primitive(u)
        return BOTTOM if is_bottom(F) else F - psi.log_eval(u)

    candidates = [u for u in bps if u != ls.ORIGIN] + list(psi.kinks)
    for i, v in enumerate(fs.values):
        lo, hi = bps[i], bps[i + 1]
        if lo == ls.ORIGIN or is_bottom(v):
            continue

        def slope(u):
            F = fs.log_primitive(u)
            return ls.exp(v + u - F) - ls.exp(psi.log_derivative(u) + u - psi.log_eval(u))

        a, b = lo, hi
        if slope(a) > 0 > slope(b):
            for _ in range(200):
                m = (a + b) / 2
                if m == a or m == b:
                    break
                if slope(m) > 0:
                    a = m
                else:
                    b = m
            candidates.append((a + b) / 2)
    logs = [ratio(u) for u in candidates]
    best_log = max((lr for lr in logs if not is_bottom(lr)), default=BOTTOM)
    return best if is_bottom(best_log) else float(ls.exp(best_log))


@follows_precision
def marcinkiewicz_norm_function(x, psi: WeightFunction, u_max: float = 1e4,
                                points_per_decade: int = 64) -> float:
    """``sup_t (1/psi(t)) int_0^t x*``.

    Step functions are handled exactly (breakpoints plus per-block stationary points).
    Closed-form decreasing functions are swept on ``u = -20 .. 0`` uniformly and on a
    geometric grid up to ``u_max``; a running supremum still rising over the last
    decade raises :class:`DivergenceError`.
    """
    xs = as_decreasing(x)
    if isinstance(xs, StepFunction):
        if not is_bottom(xs.tail_value):
            raise DivergenceError("x does not vanish at infinity: int_0^t x* grows like t")
        return _block_sup(xs, psi)
    grid = np.concatenate([np.linspace(-20.0, 0.0, 201)[:-1],
                           log_grid(1e-3, u_max, points_per_decade)])
    lr = np.array([float(xs.log_primitive(u) - psi.log_eval(u)) for u in grid])
    running = np.maximum.accumulate(lr)
    last_decade = grid >= u_max / 10
    rise = running[-1] - running[last_decade][0]
    if rise > 1e-3 and np.argmax(lr) == len(lr) - 1:
        raise DivergenceError(f"sup of the partial-integral ratio still rising by {rise:.3g} at u={u_max:g}")
    return float(math.exp(running[-1]))


def marcinkiewicz_norm_sequence(x, psi: WeightFunction | None = None) -> float:
    """Sequence norm ``sup_N (1/w(N)) sum_{n<=N} x*_n``.

    Without ``psi`` this is the Dixmier-Macaev norm with ``w(N) = log(N + 1)``;
    with a weight it is the ``m_psi`` norm with ``w(N) = psi(N)``.
    """
    xs = np.sort(np.abs(np.asarray(x, dtype=float)))[::-1]
    if xs.size == 0:
        return 0.0
    partial = np.cumsum(xs)
    N = np.arange(1, xs.size + 1, dtype=float)
    if psi is None:
        w = np.log(N + 1)
    else:
        w = np.array([psi(n) for n in N])
    return float(np.max(partial / w))
