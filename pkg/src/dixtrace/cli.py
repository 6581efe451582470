"""``dixtrace`` command line.

Every subcommand writes one JSON document (or CSV sections of ``u,value`` rows) to
``--out`` or stdout.  Exit status: 0 success, 1 computation error (divergence or
non-convergence), 2 invalid configuration.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass

import numpy as np

from . import functionals as fn
from . import piecewise as pw
from . import spectral as sp
from .acceptance import run_all
from .counterexample import build_counterexample, counterexample_report
from .errors import ConvergenceError, DivergenceError
from .weights import (
    WeightFunction, class_report, classify_good_upper_bound, classify_limit_condition,
    classify_sedaev, log_grid, marcinkiewicz_norm_function, parse_psi,
)

COMMANDS = ("norm", "psi-check", "estimate", "lidskii", "counterexample", "heatkernel", "accept")
BUILTINS = ("recip", "psi-prime", "counterexample")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    psi: str = "log"
    grid: tuple = (1.0, 1e4, 64)
    alpha: float = 1.0
    kmax: int = 40
    seed: int = 42
    mode: str = "adjusted"
    input: str | None = None
    matrix: str | None = None
    ngrid: tuple | None = None
    out: str | None = None
    format: str = "json"

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        u_min, u_max, ppd = self.grid
        if not (math.isfinite(u_min) and math.isfinite(u_max) and 0 < u_min < u_max):
            raise ConfigError(f"grid needs finite 0 < u_min < u_max, got {u_min}:{u_max}")
        if ppd < 4:
            raise ConfigError("grid needs at least 4 points per decade")
        if not self.alpha > 0:
            raise ConfigError("alpha must be positive")
        if self.mode not in ("fixed", "adjusted"):
            raise ConfigError("mode must be fixed or adjusted")
        if self.format not in ("json", "csv"):
            raise ConfigError("format must be json or csv")

    @property
    def u_grid(self) -> np.ndarray:
        return log_grid(*self.grid)


def _parse_grid(text: str) -> tuple:
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("grid must be umin:umax:ppd")
    try:
        return float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}: {exc}") from None


def _parse_ngrid(text: str) -> tuple:
    parts = text.split(":")
    try:
        a, b = (int(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError("ngrid must be a:b with integers a <= b") from None
    if not 1 <= a <= b:
        raise argparse.ArgumentTypeError("ngrid must satisfy 1 <= a <= b")
    return a, b


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dixtrace", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--psi", default="log", help="log | expsqrtlog | power:p | table:PATH (default log)")
    parser.add_argument("--input", help=f"step-function file, or builtin:{{{','.join(BUILTINS)}}}")
    parser.add_argument("--matrix", help="matrix file: n, then n rows of a+bi entries")
    parser.add_argument("--mode", choices=("fixed", "adjusted"), default="adjusted")
    parser.add_argument("--alpha", type=float, default=1.0)
    parser.add_argument("--kmax", type=int, default=40)
    parser.add_argument("--ngrid", type=_parse_ngrid, help="a:b, integer range for matrix estimators")
    parser.add_argument("--grid", type=_parse_grid, default=(1.0, 1e4, 64), help="umin:umax:ppd")
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--out", help="output path (default stdout)")
    parser.add_argument("--format", choices=("json", "csv"), default="json")
    return parser


def _load_x(cfg: RunConfig):
    if cfg.input is None or cfg.input == "builtin:recip":
        return pw.ReciprocalFunction()
    if cfg.input == "builtin:psi-prime":
        return pw.WeightDerivative(parse_psi(cfg.psi))
    if cfg.input == "builtin:counterexample":
        return build_counterexample(cfg.kmax)
    if cfg.input.startswith("builtin:"):
        raise ConfigError(f"unknown builtin {cfg.input!r}; choose from {', '.join(BUILTINS)}")
    try:
        return pw.read(cfg.input)
    except OSError as exc:
        raise ConfigError(f"cannot read --input: {exc}") from None
    except ValueError as exc:
        raise ConfigError(f"piecewise.loads: {exc}") from None


def _load_matrix(cfg: RunConfig) -> sp.MatrixSpec:
    if cfg.matrix is None:
        raise ConfigError(f"{cfg.command} needs --matrix")
    try:
        return sp.read_matrix(cfg.matrix)
    except OSError as exc:
        raise ConfigError(f"cannot read --matrix: {exc}") from None
    except ValueError as exc:
        raise ConfigError(f"spectral.loads_matrix: {exc}") from None


def _psi(cfg: RunConfig) -> WeightFunction:
    try:
        return parse_psi(cfg.psi)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _doc(command: str, **body) -> dict:
    return {"schema": fn.SCHEMA, "command": command, **body}


def _emit(doc: dict, series: list[fn.WindowSeries], cfg: RunConfig) -> str:
    if cfg.format == "csv":
        if not series:
            raise ConfigError(f"{cfg.command} has no series to write as CSV; use --format json")
        return fn.series_to_csv(series)
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _cmd_norm(cfg):
    x, psi = _load_x(cfg), _psi(cfg)
    value = marcinkiewicz_norm_function(x, psi, u_max=cfg.grid[1], points_per_decade=cfg.grid[2])
    return _doc("norm", psi=psi.spec(), input=cfg.input or "builtin:recip", norm=value), []


def _cmd_psi_check(cfg):
    psi = _psi(cfg)
    checks = {
        "good_upper_bound": classify_good_upper_bound(psi).as_dict(),
        "limit_condition": classify_limit_condition(psi).as_dict(),
        "sedaev": classify_sedaev(psi).as_dict(),
    }
    return _doc("psi-check", psi=psi.spec(), class_report=class_report(psi), conditions=checks), []


def _cmd_estimate(cfg):
    x, psi = _load_x(cfg), _psi(cfg)
    grid = cfg.u_grid
    g = fn.partial_sum_ratio(x, psi, grid)
    h = fn.lidskii_cutoff_series(x, psi, cfg.mode, grid)
    series = [g, h, fn.cesaro(g), fn.cesaro(h)]
    tails = {s.meta: fn.tail_summary(s) for s in series}
    return _doc("estimate", psi=psi.spec(), mode=cfg.mode, series=[s.as_dict() for s in series],
                tails=tails), series


def _cmd_lidskii(cfg):
    T, psi = _load_matrix(cfg), _psi(cfg)
    a, b = cfg.ngrid or (1, T.n)
    if b > T.n:
        raise ConfigError(f"--ngrid upper end {b} exceeds the matrix dimension {T.n}")
    cmp = sp.trace_estimate_compare(T, psi, range(a, b + 1))
    u = tuple(float(math.log(n)) if n > 1 else 0.0 for n in cmp.n)
    series = []
    if cmp.a is not None:
        series.append(fn.WindowSeries(u, tuple(cmp.a), "a: singular partial sums"))
    series += [fn.WindowSeries(u, tuple(cmp.b.real), "b: cutoff psi(n)/n (real part)"),
               fn.WindowSeries(u, tuple(cmp.c.real), "c: cutoff 1/n (real part)"),
               fn.WindowSeries(u, tuple(cmp.d.real), "d: cutoff psi(n)/n on the normal part (real part)")]
    return _doc("lidskii", report=cmp.as_dict()), series


def _cmd_counterexample(cfg):
    if not 1 <= cfg.kmax <= 700:
        raise ConfigError("kmax must be in [1, 700]")
    report = counterexample_report(cfg.kmax)
    series = [fn.WindowSeries(tuple(u for u, _ in report.sedaev_ratios),
                              tuple(r for _, r in report.sedaev_ratios), "sedaev_ratios")]
    if report.window_means:
        series.append(fn.WindowSeries(tuple(math.exp(k) for k, _ in report.window_means),
                                      tuple(v for _, v in report.window_means), "window_means at u=e^k"))
    return _doc("counterexample", report=report.as_dict()), series


def _cmd_heatkernel(cfg):
    grid = cfg.u_grid
    if cfg.matrix is not None:
        H = sp.heat_kernel_matrix(_load_matrix(cfg), cfg.alpha, grid)
    else:
        x = _load_x(cfg)
        if not isinstance(x, pw.StepFunction):
            x = x.sample(u_max=cfg.grid[1] + 20.0, points_per_decade=cfg.grid[2])
        H = fn.heat_kernel_series(pw.rearrangement(x), cfg.alpha, grid)
    return _doc("heatkernel", alpha=cfg.alpha, series=[H.as_dict()], tail=fn.tail_summary(H)), [H]


def _cmd_accept(cfg):
    results = run_all(cfg.seed)
    for r in results:
        print(r.line(), file=sys.stderr)
    doc = _doc("accept", seed=cfg.seed, all_passed=all(r.passed for r in results),
               criteria=[r.as_dict() for r in results])
    return doc, []


HANDLERS = {
    "norm": _cmd_norm, "psi-check": _cmd_psi_check, "estimate": _cmd_estimate,
    "lidskii": _cmd_lidskii, "counterexample": _cmd_counterexample,
    "heatkernel": _cmd_heatkernel, "accept": _cmd_accept,
}


def run(cfg: RunConfig) -> int:
    try:
        doc, series = HANDLERS[cfg.command](cfg)
        text = _emit(doc, series, cfg)
    except (DivergenceError, ConvergenceError) as exc:
        print(f"dixtrace {cfg.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"dixtrace {cfg.command}: invalid configuration: {exc}", file=sys.stderr)
        return 2
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if cfg.command == "accept" and not doc["all_passed"]:
        return 1
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig(command=args.command, psi=args.psi, grid=args.grid, alpha=args.alpha,
                        kmax=args.kmax, seed=args.seed, mode=args.mode, input=args.input,
                        matrix=args.matrix, ngrid=args.ngrid, out=args.out, format=args.format)
    except ConfigError as exc:
        print(f"dixtrace: invalid configuration: {exc}", file=sys.stderr)
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
