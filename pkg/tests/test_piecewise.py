import math

import numpy as np
import pytest

from dixtrace import piecewise as pw
from dixtrace.counterexample import build_counterexample
from dixtrace.logscale import BOTTOM, ORIGIN

import mpmath


@pytest.fixture
def two_on_three():
    return pw.StepFunction.from_linear([0.0, 3.0], [2.0])


def test_eval_inside_and_at_jump(two_on_three):
    assert pw.eval(two_on_three, math.log(1)) == pytest.approx(math.log(2))
    assert pw.eval(two_on_three, math.log(3)) == BOTTOM


def test_eval_counterexample_first_block():
    x = build_counterexample(3)
    with mpmath.workdps(x.dps):
        assert pw.eval(x, mpmath.mpf(1) + mpmath.e - mpmath.mpf("1e-9")) == -mpmath.e
        # right-continuous: the endpoint already belongs to block 2
        assert pw.eval(x, mpmath.mpf(1) + mpmath.e) == -mpmath.e ** 2


def test_eval_rejects_nan(two_on_three):
    with pytest.raises(ValueError):
        pw.eval(two_on_three, float("nan"))


def test_integral_cases():
    f = pw.StepFunction.indicator(0.0, 1.0)
    assert pw.integral(f, ORIGIN, 0.0) == pytest.approx(0.0, abs=1e-15)
    g = pw.StepFunction.from_linear([0.0, 2.0], [3.0])
    assert pw.integral(g) == pytest.approx(math.log(6), abs=1e-15)


def test_integral_nonzero_tail_is_infinite():
    assert pw.integral(pw.StepFunction.constant(1.0)) == math.inf


def test_rearrangement_two_block_swap():
    f = pw.StepFunction.from_linear([0.0, 1.0, 2.0], [1.0, 3.0])
    expected = pw.StepFunction.from_linear([0.0, 1.0, 2.0], [3.0, 1.0])
    r = pw.rearrangement(f)
    assert r.values == pytest.approx(expected.values)
    assert np.allclose(r.breakpoints[1:], expected.breakpoints[1:])


def test_rearrangement_idempotent(two_on_three):
    assert pw.rearrangement(two_on_three) == two_on_three


def test_rearrangement_matches_sort_oracle():
    rng = np.random.default_rng(7)
    edges = np.concatenate([[0.0], np.sort(rng.uniform(0.1, 20.0, 10))])
    heights = rng.uniform(0.1, 5.0, 10)
    f = pw.StepFunction.from_linear(edges, heights)
    order = np.argsort(-heights, kind="stable")
    cum = np.concatenate([[0.0], np.cumsum(np.diff(edges)[order])])
    r = pw.rearrangement(f)
    assert np.exp(r.values) == pytest.approx(heights[order], rel=1e-12)
    assert np.exp(r.breakpoints[1:]) == pytest.approx(cum[1:], rel=1e-12)


def test_distribution_strict(two_on_three):
    assert pw.distribution(two_on_three, 0.0) == pytest.approx(math.log(3))
    assert pw.distribution(two_on_three, math.log(2)) == BOTTOM


def test_distribution_counterexample():
    k = 6
    x = build_counterexample(k + 2)
    with mpmath.workdps(x.dps):
        t_star = mpmath.exp(k) + mpmath.mpf(k) / 2
        level = pw.distribution(x, -t_star)
        # measure of {x > e^{-t*}} is the union [1, e^{k+e^k}) of length e^{k+e^k} - 1
        assert level == pytest.approx(mpmath.log(mpmath.exp(k + mpmath.exp(k)) - 1))


def test_dilate_expand_and_inverse():
    f = pw.StepFunction.indicator(0.0, 1.0)
    g = pw.dilate(f, 2)
    assert math.exp(g.breakpoints[1]) == pytest.approx(2.0)
    h = pw.dilate(g, 2, "contract")
    assert h.breakpoints == pytest.approx(f.breakpoints)
    with pytest.raises(ValueError):
        pw.dilate(f, 0)


def test_check_jump_sum_cases(two_on_three):
    lhs, rhs = pw.check_jump_sum(two_on_three, 0.0)
    assert lhs == pytest.approx(math.log(6)) and rhs == pytest.approx(math.log(6))
    lhs, rhs = pw.check_jump_sum(two_on_three, 5.0)
    assert lhs == BOTTOM and rhs == BOTTOM


def test_check_jump_sum_random_decreasing():
    rng = np.random.default_rng(3)
    for _ in range(20):
        bps = np.sort(rng.uniform(-3, 3, 8))
        vals = np.sort(rng.uniform(-4, 2, 8))[::-1]
        f = pw.StepFunction((ORIGIN,) + tuple(bps), tuple(vals), BOTTOM)
        lam = rng.uniform(-5, 3)
        lhs, rhs = pw.check_jump_sum(f, lam)
        if rhs != BOTTOM:
            assert abs(math.expm1(lhs - rhs)) < 1e-10


def test_canonical_merging():
    f = pw.StepFunction((ORIGIN, 0.0, 1.0), (0.5, 0.5), BOTTOM)
    assert f.breakpoints == (ORIGIN, 1.0)
    zero = pw.StepFunction((ORIGIN, 0.0), (BOTTOM,), BOTTOM)
    assert zero.breakpoints == (ORIGIN,) and zero.values == ()


def test_invalid_construction():
    with pytest.raises(ValueError):
        pw.StepFunction((0.0, 0.0), (1.0,))
    with pytest.raises(ValueError):
        pw.StepFunction((0.0, 1.0), ())
    with pytest.raises(ValueError):
        pw.StepFunction((0.0, 1.0), (float("nan"),))


def test_text_round_trip(two_on_three, tmp_path):
    assert pw.loads(pw.dumps(two_on_three)) == two_on_three
    x = build_counterexample(20)
    path = tmp_path / "x.steps"
    pw.write(x, path)
    y = pw.read(path)
    assert y.dps == x.dps
    with mpmath.workdps(x.dps):
        assert all(abs(a - b) < mpmath.mpf(10) ** (-x.dps + 25)
                   for a, b in zip(x.breakpoints[1:], y.breakpoints[1:]))


def test_loads_rejects_garbage():
    with pytest.raises(ValueError):
        pw.loads("# dixtrace step function v1\n1 2 3\n")
    with pytest.raises(ValueError):
        pw.loads("")


def test_closed_forms_protocol():
    r = pw.ReciprocalFunction()
    assert r.log_primitive(math.log(10)) == pytest.approx(math.log(1 + math.log(10)))
    assert r.log_level(-5.0) == pytest.approx(5.0)
    assert r.log_level(0.0) == BOTTOM


def test_sample_decreasing_exact_at_nodes():
    r = pw.ReciprocalFunction()
    s = r.sample(u_max=10.0, points_per_decade=16)
    assert s.is_decreasing
    for u in (0.0, 2.0, 10.0):
        node = s.breakpoints[min(range(1, len(s.breakpoints)), key=lambda i: abs(s.breakpoints[i] - u))]
        assert s.log_primitive(node) == pytest.approx(r.log_primitive(node), abs=1e-12)
