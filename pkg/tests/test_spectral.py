import math

import numpy as np
import pytest

from dixtrace import functionals as fn
from dixtrace import piecewise as pw
from dixtrace import spectral as sp
from dixtrace.weights import LogWeight

LOG = LogWeight()


@pytest.fixture
def rng():
    return np.random.default_rng(42)


def test_triangularize_diagonal_and_triangular():
    T = sp.MatrixSpec(np.diag([3.0, 1.0, 2.0]))
    U, R = sp.triangularize(T)
    assert np.allclose(np.abs(U), np.abs(np.round(U)))  # a permutation up to phases
    assert np.allclose(np.sort(np.diag(R).real), [1, 2, 3])
    T = sp.MatrixSpec(np.array([[1.0, 1.0], [0.0, 2.0]]))
    U, R = sp.triangularize(T)
    assert np.allclose(U, np.eye(2)) and np.allclose(R, T.entries)


def test_triangularize_random_reconstruction(rng):
    for _ in range(10):
        T = sp.MatrixSpec.random(6, rng)
        U, R = sp.triangularize(T)
        assert np.max(np.abs(U @ R @ U.conj().T - T.entries)) < 1e-10 * T.norm_max
        assert np.allclose(np.tril(R, -1), 0)


def test_ringrose_normal_matrix_has_no_nilpotent_part(rng):
    Q, _ = np.linalg.qr(rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5)))
    T = sp.MatrixSpec(Q @ np.diag(rng.standard_normal(5) + 1j) @ Q.conj().T)
    split = sp.ringrose_split(T)
    assert np.max(np.abs(split.Q)) < 1e-9 * T.norm_max


def test_ringrose_jordan_block():
    T = sp.MatrixSpec(np.array([[0.0, 1.0], [0.0, 0.0]]))
    split = sp.ringrose_split(T)
    assert np.allclose(split.S, 0) and np.allclose(split.Q, T.entries)


def test_ringrose_hand_example():
    split = sp.ringrose_split(sp.MatrixSpec(np.array([[1.0, 1.0], [0.0, 2.0]])))
    assert np.allclose(split.S, np.diag([1, 2]))
    assert np.allclose(split.Q, [[0, 1], [0, 0]])


def test_ringrose_invariants_random(rng):
    for _ in range(20):
        T = sp.MatrixSpec.random(8, rng)
        split = sp.ringrose_split(T)
        assert split.check(T)
        ev = np.linalg.eigvals(split.S)
        assert np.allclose(np.sort_complex(np.round(ev, 8)), np.sort_complex(np.round(split.diagonal, 8)))


def test_singular_values_cases(rng):
    Q, _ = np.linalg.qr(rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4)))
    assert np.allclose(sp.singular_values(sp.MatrixSpec(Q)), 1.0)
    assert np.allclose(sp.singular_values(sp.MatrixSpec.diag([3, -4j])), [4, 3])
    assert np.allclose(sp.singular_values(sp.MatrixSpec(np.diag([3, -4j]))), [4, 3])


def test_singular_values_oracle(rng):
    T = sp.MatrixSpec.random(5, rng)
    oracle = np.sqrt(np.clip(np.linalg.eigvalsh(T.entries.conj().T @ T.entries), 0, None))[::-1]
    assert np.allclose(sp.singular_values(T), oracle, atol=1e-10)


def test_weyl_normal_equality_and_jordan(rng):
    T = sp.MatrixSpec(np.diag(rng.standard_normal(6) + 1j * rng.standard_normal(6)))
    spec = sp.spectrum(T)
    lhs = np.cumsum(np.sort(np.abs(spec.eigenvalues))[::-1])
    assert np.allclose(lhs, np.cumsum(spec.singular_values))
    holds, excess = sp.weyl_check(sp.spectrum(sp.MatrixSpec.jordan(7)))
    assert holds and excess == 0


def test_weyl_random_sweep(rng):
    for _ in range(100):
        assert sp.weyl_check(sp.spectrum(sp.MatrixSpec.random(8, rng)))[0]


def test_eigen_cutoff_sum_cases():
    spec = sp.SpectrumData(np.array([2, -1, 0.2], dtype=complex), np.array([2, 1, 0.2]), 0.0)
    assert sp.eigen_cutoff_sum(spec, 0.5) == pytest.approx(1)
    nil = sp.spectrum(sp.MatrixSpec.jordan(5))
    assert sp.eigen_cutoff_sum(nil, 0.0) == 0
    strict = sp.SpectrumData(np.array([1, 0.5], dtype=complex), np.array([1, 0.5]), 0.0)
    assert sp.eigen_cutoff_sum(strict, 0.5) == 1
    with pytest.raises(ValueError):
        sp.eigen_cutoff_sum(strict, -1.0)


def test_eigen_cutoff_similarity_invariance(rng):
    T = sp.MatrixSpec.random(6, rng)
    Q, _ = np.linalg.qr(rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6)))
    T2 = sp.MatrixSpec(Q @ T.entries @ Q.conj().T)
    s1, s2 = sp.spectrum(T), sp.spectrum(T2)
    moduli = np.sort(np.abs(s1.eigenvalues))
    cutoffs = np.concatenate([[0.0], (moduli[:-1] + moduli[1:]) / 2, [moduli[-1] + 1]])
    for c in cutoffs:
        assert abs(sp.eigen_cutoff_sum(s1, c) - sp.eigen_cutoff_sum(s2, c)) < 1e-9


def test_trace_compare_harmonic_diagonal():
    k = np.arange(1, 10001, dtype=float)
    cmp = sp.trace_estimate_compare(sp.MatrixSpec.diag(1 / k), LOG, range(2, 10001))
    n = 1e4
    assert cmp.a[-1] == pytest.approx(math.fsum(1 / k) / math.log(n), abs=1e-12)
    assert cmp.a[-1] == pytest.approx(1.0627, abs=1e-3)
    assert cmp.b[-1].real == pytest.approx(0.8215, abs=1e-3)
    assert np.all(cmp.gap_ba <= (np.log(np.log(cmp.n)) + 1) / np.log(cmp.n))


def test_trace_compare_nilpotent_and_normal_part(rng):
    cmp = sp.trace_estimate_compare(sp.MatrixSpec.jordan(6), LOG, range(1, 7))
    assert np.all(cmp.b == 0) and np.all(cmp.c == 0)
    T = sp.MatrixSpec(np.array([[1.0, 1.0], [0.0, 2.0]]))
    cmp = sp.trace_estimate_compare(T, LOG, [1, 2])
    assert np.array_equal(cmp.b, cmp.d)
    assert cmp.a is None


def test_trace_compare_normal_matches_sequence_sum(rng):
    d = np.sort(rng.uniform(0.01, 1, 50))[::-1]
    cmp = sp.trace_estimate_compare(sp.MatrixSpec(np.diag(d)), LOG, range(1, 51))
    for n, b in zip(cmp.n, cmp.b):
        # the sequence form keeps |lambda| >= psi(n)/n; equal here since no modulus sits on the cutoff
        assert b.real == pytest.approx(fn.sequence_cutoff_sum(d, LOG, int(n), "adjusted"), rel=1e-12)
    assert np.all(cmp.near_axis_bound >= 0)


def test_heat_kernel_matrix_cases():
    H = sp.heat_kernel_matrix(sp.MatrixSpec.diag([1.0]), 1.0, [math.log(1e3)])
    assert H.values[0] == pytest.approx(math.exp(-1e-3) / 1e3)
    with pytest.raises(ValueError):
        sp.heat_kernel_matrix(sp.MatrixSpec(np.array([[0.0, 1.0], [0.0, 0.0]])), 1.0, [0.0])
    with pytest.raises(ValueError):
        sp.heat_kernel_matrix(sp.MatrixSpec.diag([-1.0]), 1.0, [0.0])


@pytest.mark.parametrize("alpha", [1.0, 2.0])
def test_heat_kernel_matrix_matches_symbol(alpha):
    k = np.arange(1, 10001, dtype=float)
    grid = [math.log(100.0)]
    Hm = sp.heat_kernel_matrix(sp.MatrixSpec.diag(1 / k), alpha, grid)
    Hc = fn.heat_kernel_series(pw.StepFunction.from_sequence(1 / k), alpha, grid)
    assert Hm.values[0] == pytest.approx(Hc.values[0], abs=1e-3)


def test_matrix_text_round_trip(tmp_path, rng):
    T = sp.MatrixSpec.random(4, rng)
    path = tmp_path / "m.txt"
    sp.write_matrix(T, path)
    assert np.array_equal(sp.read_matrix(path).entries, T.entries)
    assert np.array_equal(sp.loads_matrix("2\n1 -4i\n0+0i 2.5-1i\n").entries, [[1, -4j], [0, 2.5 - 1j]])
    for bad in ("2\n1 2\n", "2\n1 2\n3 x\n", ""):
        with pytest.raises(ValueError):
            sp.loads_matrix(bad)


def test_matrix_spec_validation():
    with pytest.raises(ValueError):
        sp.MatrixSpec(np.ones((2, 3)))
    with pytest.raises(ValueError):
        sp.MatrixSpec(np.array([[np.nan]]))
    with pytest.raises(ValueError):
        sp.MatrixSpec()
