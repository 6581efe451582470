"""Finite matrices: Schur triangularization, Ringrose split, singular values, cutoff sums.

Eigenvalues come from the complex Schur form (LAPACK ``zgees`` through
:func:`scipy.linalg.schur`), singular values from :func:`numpy.linalg.svd`.  A
:class:`MatrixSpec` may be stored by its diagonal alone, which keeps the 10^4 x 10^4
diagonal operators of the trace comparisons cheap; dense-only operations
(triangularization, Ringrose split) refuse such inputs above a modest size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg

from .errors import ConvergenceError
from .functionals import WindowSeries, heat_normalization
from .weights import WeightFunction

DENSE_LIMIT = 2048
PSD_FLOOR = 1e-10


@dataclass(frozen=True, eq=False)
class MatrixSpec:
    """A square complex matrix, dense or diagonal."""

    entries: np.ndarray | None = None
    diagonal: np.ndarray | None = None

    def __post_init__(self):
        if (self.entries is None) == (self.diagonal is None):
            raise ValueError("give exactly one of entries or diagonal")
        if self.entries is not None:
            a = np.array(self.entries, dtype=complex)
            if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
                raise ValueError(f"matrix must be square and nonempty, got shape {a.shape}")
            object.__setattr__(self, "entries", a)
        else:
            d = np.array(self.diagonal, dtype=complex).ravel()
            if d.size < 1:
                raise ValueError("empty diagonal")
            object.__setattr__(self, "diagonal", d)
        if not np.all(np.isfinite(self.dense_or_diag)):
            raise ValueError("matrix has non-finite entries")

    @classmethod
    def diag(cls, values: Sequence[complex]) -> "MatrixSpec":
        return cls(diagonal=np.asarray(values))

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> "MatrixSpec":
        """I.i.d. complex standard normal entries."""
        return cls((rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / math.sqrt(2))

    @classmethod
    def jordan(cls, n: int, eigenvalue: complex = 0.0) -> "MatrixSpec":
        return cls(eigenvalue * np.eye(n) + np.eye(n, k=1))

    @property
    def n(self) -> int:
        return (self.diagonal if self.entries is None else self.entries).shape[0]

    @property
    def is_diagonal(self) -> bool:
        return self.diagonal is not None

    @property
    def dense_or_diag(self) -> np.ndarray:
        return self.diagonal if self.entries is None else self.entries

    def dense(self) -> np.ndarray:
        if self.entries is not None:
            return self.entries
        if self.n > DENSE_LIMIT:
            raise ValueError(f"refusing to densify a {self.n}x{self.n} diagonal matrix")
        return np.diag(self.diagonal)

    @property
    def norm_max(self) -> float:
        return float(np.max(np.abs(self.dense_or_diag)))


# -- text format ----------------------------------------------------------------------


def _fmt_complex(z: complex) -> str:
    return f"{z.real!r}{'+' if z.imag >= 0 or math.isnan(z.imag) else '-'}{abs(z.imag)!r}i"


def dumps_matrix(T: MatrixSpec) -> str:
    """First line ``n``, then ``n`` rows of ``a+bi`` entries."""
    a = T.dense()
    rows = [str(T.n)] + [" ".join(_fmt_complex(complex(z)) for z in row) for row in a]
    return "\n".join(rows) + "\n"


def loads_matrix(text: str) -> MatrixSpec:
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise ValueError("empty matrix file")
    n = int(lines[0])
    if len(lines) - 1 != n:
        raise ValueError(f"expected {n} rows, found {len(lines) - 1}")
    rows = []
    for i, line in enumerate(lines[1:], 1):
        toks = line.split()
        if len(toks) != n:
            raise ValueError(f"row {i}: expected {n} entries, found {len(toks)}")
        try:
            rows.append([complex(t.replace("i", "j")) for t in toks])
        except ValueError as exc:
            raise ValueError(f"row {i}: bad complex entry ({exc})") from None
    return MatrixSpec(np.array(rows))


def read_matrix(path) -> MatrixSpec:
    with open(path) as fh:
        return loads_matrix(fh.read())


def write_matrix(T: MatrixSpec, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps_matrix(T))


# -- decompositions ---------------------------------------------------------------------


def triangularize(T: MatrixSpec) -> tuple[np.ndarray, np.ndarray]:
    """Complex Schur form ``T = U R U*`` with ``U`` unitary and ``R`` upper triangular."""
    a = T.dense()
    try:
        R, U = scipy.linalg.schur(a, output="complex")
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise ConvergenceError(f"triangularize: Schur iteration failed ({exc})") from exc
    scale = max(T.norm_max, np.finfo(float).tiny)
    recon = float(np.max(np.abs(U @ R @ U.conj().T - a))) / scale
    unit = _unitary_residual(U)
    if recon > 1e-10 * max(1, T.n) or unit > 1e-10 * T.n:
        raise ConvergenceError(
            f"triangularize: reconstruction residual {recon:.3g}, unitarity residual {unit:.3g}")
    return U, R


def _unitary_residual(U: np.ndarray) -> float:
    return float(np.max(np.abs(U.conj().T @ U - np.eye(U.shape[0]))))


@dataclass(frozen=True, eq=False)
class SpectrumData:
    eigenvalues: np.ndarray
    singular_values: np.ndarray
    unitary_residual: float

    def __post_init__(self):
        if np.any(np.diff(self.singular_values) > 0):
            raise ValueError("singular values must be nonincreasing")


def singular_values(T: MatrixSpec) -> np.ndarray:
    """Nonincreasing eigenvalues of ``|T| = (T*T)^{1/2}``."""
    if T.is_diagonal:
        return np.sort(np.abs(T.diagonal))[::-1]
    return np.linalg.svd(T.entries, compute_uv=False)


def spectrum(T: MatrixSpec) -> SpectrumData:
    """Eigenvalues in Schur order (diagonal order for diagonal storage) and singular values."""
    if T.is_diagonal:
        return SpectrumData(T.diagonal.copy(), singular_values(T), 0.0)
    U, R = triangularize(T)
    return SpectrumData(np.diag(R).copy(), singular_values(T), _unitary_residual(U))


@dataclass(frozen=True, eq=False)
class RingroseSplit:
    """``T = S + Q``: ``S`` normal with the eigenvalues of ``T``, ``Q`` nilpotent."""

    S: np.ndarray
    Q: np.ndarray
    basis: np.ndarray
    diagonal: np.ndarray

    def residuals(self, T: MatrixSpec) -> dict:
        """The invariants as numbers: sum, nilpotency and normality residuals, scaled by ``|T|``."""
        a = T.dense()
        scale = max(T.norm_max, np.finfo(float).tiny)
        n = a.shape[0]
        qn = np.linalg.matrix_power(self.Q, n)
        s_norm = self.S @ self.S.conj().T - self.S.conj().T @ self.S
        return {
            "sum": float(np.max(np.abs(self.S + self.Q - a))) / scale,
            "nilpotent": float(np.max(np.abs(qn))) / scale ** n,
            "normal": float(np.max(np.abs(s_norm))) / scale ** 2,
        }

    def check(self, T: MatrixSpec) -> bool:
        r = self.residuals(T)
        return r["sum"] < 1e-10 and r["nilpotent"] < 1e-8 and r["normal"] < 1e-10


def ringrose_split(T: MatrixSpec) -> RingroseSplit:
    U, R = triangularize(T)
    d = np.diag(R)
    Uh = U.conj().T
    S = U @ np.diag(d) @ Uh
    Q = U @ np.triu(R, k=1) @ Uh
    return RingroseSplit(S, Q, U, d.copy())


def weyl_check(spec: SpectrumData, tol: float = 1e-9) -> tuple[bool, float]:
    """``sum_{k<=m} |lambda_k|^(desc) <= sum_{k<=m} s_k`` for every ``m``.

    Returns ``(holds, worst excess)``; the excess is floored at 0 and the tolerance
    scales with ``max(1, s_1)``.
    """
    lhs = np.cumsum(np.sort(np.abs(spec.eigenvalues))[::-1])
    rhs = np.cumsum(spec.singular_values)
    excess = max(0.0, float(np.max(lhs - rhs)))
    scale = max(1.0, float(spec.singular_values[0]) if spec.singular_values.size else 1.0)
    return excess <= tol * scale, excess


# -- cutoff sums and trace estimators -------------------------------------------------------


class _CutoffTable:
    """Eigenvalues sorted by modulus, for many strict-cutoff sums at once."""

    def __init__(self, eigenvalues: np.ndarray):
        ev = np.asarray(eigenvalues, dtype=complex)
        order = np.argsort(-np.abs(ev), kind="stable")
        self.ev = ev[order]
        self.mod_asc = np.abs(self.ev)[::-1]
        self.prefix = np.concatenate([[0], np.cumsum(self.ev)])

    def count_above(self, cutoff) -> np.ndarray:
        return self.mod_asc.size - np.searchsorted(self.mod_asc, cutoff, side="right")

    def sum_above(self, cutoff) -> np.ndarray:
        return self.prefix[self.count_above(cutoff)]


def eigen_cutoff_sum(spec: SpectrumData, cutoff: float) -> complex:
    """Sum of the eigenvalues with ``|lambda| > cutoff`` (strict), with multiplicity."""
    if cutoff < 0:
        raise ValueError("cutoff must be nonnegative")
    ev = spec.eigenvalues
    return complex(math.fsum(ev[np.abs(ev) > cutoff].real) + 1j * math.fsum(ev[np.abs(ev) > cutoff].imag))


def is_positive_semidefinite(T: MatrixSpec) -> bool:
    scale = T.norm_max
    if T.is_diagonal:
        d = T.diagonal
        return bool(np.all(np.abs(d.imag) <= PSD_FLOOR * scale) and np.all(d.real >= -PSD_FLOOR * scale))
    a = T.entries
    if np.max(np.abs(a - a.conj().T)) > PSD_FLOOR * scale:
        return False
    return bool(np.min(np.linalg.eigvalsh(a)) >= -PSD_FLOOR * scale)


@dataclass(frozen=True, eq=False)
class TraceComparison:
    n: np.ndarray
    a: np.ndarray | None
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray
    near_axis_bound: np.ndarray
    psi: str

    @property
    def gap_ba(self):
        return None if self.a is None else np.abs(self.b - self.a)

    @property
    def gap_bd(self):
        return np.abs(self.b - self.d)

    def as_dict(self) -> dict:
        def cx(arr):
            return [[float(z.real), float(z.imag)] for z in arr]

        return {
            "schema": "1",
            "psi": self.psi,
            "n": [int(v) for v in self.n],
            "a": None if self.a is None else [float(v) for v in self.a],
            "b": cx(self.b),
            "c": cx(self.c),
            "d": cx(self.d),
            "gap_ba": None if self.a is None else [float(v) for v in self.gap_ba],
            "gap_bd": [float(v) for v in self.gap_bd],
            "near_axis_bound": [float(v) for v in self.near_axis_bound],
        }


def trace_estimate_compare(T: MatrixSpec, psi: WeightFunction, n_grid: Iterable[int]) -> TraceComparison:
    """Series ``a`` (singular partial sums, positive ``T`` only), ``b`` (cutoff ``psi(n)/n``),
    ``c`` (cutoff ``1/n``) and ``d`` (``b`` recomputed on the Ringrose normal part).

    ``near_axis_bound`` is ``2 (psi(n)/n) #{|lambda| > psi(n)/n}``.
    """
    n = np.array(sorted({int(v) for v in n_grid}))
    if n.size == 0 or n[0] < 1 or n[-1] > T.n:
        raise ValueError(f"n_grid must lie in [1, {T.n}]")
    spec = spectrum(T)
    w = np.array([psi(float(v)) for v in n])
    adj, fixed = w / n, 1.0 / n
    table = _CutoffTable(spec.eigenvalues)
    b = table.sum_above(adj) / w
    c = table.sum_above(fixed) / w
    if T.is_diagonal:
        d_spec = spec
    else:
        split = ringrose_split(T)
        d_spec = SpectrumData(np.linalg.eigvals(split.S), spec.singular_values, 0.0)
    d = _CutoffTable(d_spec.eigenvalues).sum_above(adj) / w
    a = None
    if is_positive_semidefinite(T):
        s_prefix = np.concatenate([[0.0], np.cumsum(spec.singular_values)])
        a = s_prefix[n] / w
    bound = 2 * adj * table.count_above(adj)
    return TraceComparison(n, a, b, c, d, bound, psi.spec())


def heat_kernel_matrix(T: MatrixSpec, alpha: float, grid: Iterable) -> WindowSeries:
    """``(alpha/Gamma(1/alpha)) (1/t) sum_lambda exp(-(t lambda)^-alpha)`` at ``t = e**u``."""
    norm = heat_normalization(alpha)
    if not is_positive_semidefinite(T):
        raise ValueError("heat_kernel_matrix needs a positive semidefinite (Hermitian) matrix")
    lam = T.diagonal.real if T.is_diagonal else np.linalg.eigvalsh(T.entries)
    lam = lam[lam > 0]
    grid = tuple(grid)
    vals = []
    for u in grid:
        t = math.exp(float(u))
        vals.append(norm / t * math.fsum(np.exp(-((t * lam) ** -alpha))))
    return WindowSeries(grid, tuple(vals), f"heat_kernel_matrix alpha={alpha:g}")
