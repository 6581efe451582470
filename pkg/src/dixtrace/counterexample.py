"""Explicit witnesses.

``build_counterexample`` is the function ``x = sup_k e^{-e^k} chi_[1, e^{k+e^k}]``
whose fixed-cutoff Lidskii series differs from its partial-sum series by about 1
on the windows ``[N, N log N]``, ``N = e^{e^k}``.  Its breakpoints ``k + e^k`` are
doubly exponential in ``t``, so the function is built in mpmath at a precision that
still resolves ``k`` next to ``e^k``.

``sedaev_discrepancy`` is the example ``psi = exp(sqrt(log t))``, ``x = psi'``, on
which ``psi(n_x(1/t))/psi(t)`` tends to ``e^{1/2}`` instead of 1.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import mpmath
import numpy as np

from .errors import ConvergenceError
from .functionals import oriented_integral
from .logscale import ORIGIN, digits_for, precision
from .piecewise import StepFunction, rearrangement
from .weights import ExpSqrtLogWeight, LogWeight, marcinkiewicz_norm_function

K_MAX_LIMIT = 700
NORM_BOUND = math.e ** 2 / (math.e - 1)


def working_dps(k: int) -> int:
    """Digits needed to resolve O(1) offsets next to ``e**k``."""
    return digits_for(mpmath.e ** k)


def build_counterexample(k_max: int) -> StepFunction:
    """Disjoint-block form of the sup: ``e^{-e}`` on ``[1, e^{1+e})``, then
    ``e^{-e^k}`` on ``[e^{k-1+e^{k-1}}, e^{k+e^k})`` for ``2 <= k <= k_max``.

    Zero on ``[0, 1)``, so the rearrangement is this function shifted left by 1.
    """
    if not isinstance(k_max, (int, np.integer)) or not 1 <= k_max <= K_MAX_LIMIT:
        raise ValueError(f"k_max must be an integer in [1, {K_MAX_LIMIT}], got {k_max!r}")
    dps = working_dps(int(k_max))
    with precision(dps):
        ends = [mpmath.mpf(k) + mpmath.exp(k) for k in range(1, k_max + 1)]
        values = [-mpmath.exp(k) for k in range(1, k_max + 1)]
        bps = (ORIGIN, mpmath.mpf(0)) + tuple(ends)
        vals = (ORIGIN,) + tuple(values)
        return StepFunction(bps, vals, ORIGIN, dps=dps)


def literal_sup(k_max: int, u) -> float:
    """``max_k e^{-e^k} chi_[0, k+e^k)(u)`` in log-coordinates, straight from the definition."""
    best = ORIGIN
    for k in range(1, k_max + 1):
        if 0 <= u < k + mpmath.exp(k):
            best = max(best, -mpmath.exp(k))
    return best


def window_mean(k: int, tol: float = 1e-10) -> float:
    """Window average of ``(1/log t) int_t^{n_x(1/t)} x*`` over ``u in [e^k, e^k + k]``.

    The inner integral is exact.  The outer one uses composite 8-point Gauss-Legendre,
    doubling the panel count until two passes agree to ``tol``: the integrand jumps
    at the left window edge (the strict cutoff drops block ``k`` exactly there) and an
    open rule never samples that point.
    """
    if not isinstance(k, (int, np.integer)) or not 3 <= k <= K_MAX_LIMIT:
        raise ValueError(f"k must be an integer in [3, {K_MAX_LIMIT}], got {k!r}")
    k = int(k)
    xs = rearrangement(build_counterexample(k))
    with precision(xs.dps):
        U = mpmath.exp(k)

        def integrand(w: float) -> float:
            u = U + mpmath.mpf(w)
            return oriented_integral(xs, u, xs.log_level(-u)) / float(u)

        nodes, weights = np.polynomial.legendre.leggauss(8)
        previous = None
        panels = 32
        while panels <= 4096:
            edges = np.linspace(0.0, float(k), panels + 1)
            total = 0.0
            for a, b in zip(edges, edges[1:]):
                half, mid = (b - a) / 2, (a + b) / 2
                total += half * math.fsum(wt * integrand(mid + half * nd) for nd, wt in zip(nodes, weights))
            mean = total / k
            if previous is not None and abs(mean - previous) < tol:
                return mean
            previous = mean
            panels *= 2
    raise ConvergenceError(f"window_mean({k}) quadrature did not settle: last change {abs(mean - previous):.3g}")


def window_mean_leading_term(k: int) -> float:
    """``(e^k/k) log(1 + k e^{-k})``."""
    return math.exp(k) / k * math.log1p(k * math.exp(-k))


def window_mean_oracle(k: int) -> float:
    """``(1/k) int_0^k (e^k - e^w)/(e^k + w) dw``, the value of the window mean in closed form."""
    with mpmath.workdps(30):
        E = mpmath.exp(k)
        return float(mpmath.quad(lambda w: (E - mpmath.exp(w)) / (E + w), [0, k]) / k)


def sedaev_discrepancy(u_grid) -> list[tuple[float, float]]:
    """``(u, psi(n_x(1/t))/psi(t))`` for ``psi = exp(sqrt(log t))`` and ``x = psi'``, ``t = e**u``."""
    psi = ExpSqrtLogWeight()
    out = []
    for u in u_grid:
        u = float(u)
        if u < 10:
            raise ValueError(f"sedaev_discrepancy needs u >= 10, got {u}")
        n = psi.derivative_level(-u)
        out.append((u, math.exp(psi.log_eval(n) - psi.log_eval(u))))
    return out


def gap_window(k: int, points: int = 257) -> float:
    """pi-window at ``N = e^{e^k}`` of the fixed-cutoff series minus the partial-sum series."""
    from .functionals import lidskii_cutoff_series, partial_sum_ratio, pi_window, uniform_grid

    x = build_counterexample(k)
    psi = LogWeight()
    with precision(x.dps):
        U = mpmath.exp(k)
        grid = uniform_grid(U, U + mpmath.log(U), points)
        gap = lidskii_cutoff_series(x, psi, "fixed", grid).minus(partial_sum_ratio(x, psi, grid))
        return pi_window(gap, U)


@dataclass(frozen=True)
class CounterexampleReport:
    k_range: tuple
    norm_bound: float
    window_means: tuple
    sedaev_ratios: tuple

    def as_dict(self) -> dict:
        return {
            "schema": "1",
            "k_range": list(self.k_range),
            "norm_bound": self.norm_bound,
            "norm_bound_limit": NORM_BOUND,
            "window_means": [[k, v] for k, v in self.window_means],
            "sedaev_ratios": [[u, r] for u, r in self.sedaev_ratios],
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2)


def counterexample_report(k_max: int = 40, sedaev_grid=(1e2, 1e3, 1e4, 1e6, 1e8)) -> CounterexampleReport:
    """Norm of ``build_counterexample(k_max)`` under ``psi = log``, window means, Example ratios."""
    x = build_counterexample(k_max)
    norm = marcinkiewicz_norm_function(x, LogWeight())
    ks = sorted({k for k in (3, 5, 10, 20, 50, 100, 200, 300, 500, 700) if k <= k_max} | ({k_max} if k_max >= 3 else set()))
    means = tuple((k, window_mean(k)) for k in ks)
    return CounterexampleReport((1, k_max), norm, means, tuple(sedaev_discrepancy(sedaev_grid)))
