import math

import numpy as np
import pytest

from dixtrace import piecewise as pw
from dixtrace.counterexample import NORM_BOUND, build_counterexample
from dixtrace.errors import DivergenceError
from dixtrace.weights import (
    ExpSqrtLogWeight, LogWeight, PowerWeight, class_report, classify_good_upper_bound,
    classify_limit_condition, classify_sedaev, marcinkiewicz_norm_function,
    marcinkiewicz_norm_sequence, parse_psi, read_table, TabulatedWeight,
)

WEIGHTS = [LogWeight(), ExpSqrtLogWeight(), PowerWeight(0.5)]


@pytest.mark.parametrize("psi", WEIGHTS, ids=lambda p: p.spec())
def test_class_membership(psi):
    r = class_report(psi)
    assert r["increasing"] and r["concave"]
    assert r["ratio_at_zero"] < 2
    assert r["ratio_at_infinity"] < 1e-6


@pytest.mark.parametrize("psi", WEIGHTS, ids=lambda p: p.spec())
def test_weight_is_continuous_at_splice(psi):
    u0 = psi.splice_u
    assert psi.log_eval(u0 - 1e-12) == pytest.approx(psi.log_eval(u0 + 1e-12), abs=1e-9)


def test_log_weight_values():
    psi = LogWeight()
    assert psi(math.e ** 5) == pytest.approx(5.0)
    assert psi(1.0) == pytest.approx(1 / math.e)


def test_parse_psi():
    assert parse_psi("log") == LogWeight()
    assert parse_psi("power:0.25") == PowerWeight(0.25)
    for bad in ("nope", "power:1.5", "power:x"):
        with pytest.raises(ValueError):
            parse_psi(bad)


def test_derivative_level_inverts_derivative():
    for psi in WEIGHTS:
        for lam in (-3.0, -10.0, -50.0):
            u = psi.derivative_level(lam)
            assert psi.log_derivative(u) == pytest.approx(lam, rel=1e-10)


def test_good_upper_bound():
    assert classify_good_upper_bound(LogWeight()).status == "holds"
    esl = classify_good_upper_bound(ExpSqrtLogWeight())
    assert esl.status == "holds"
    p = classify_good_upper_bound(PowerWeight(0.5))
    assert p.status == "holds" and p.estimate == pytest.approx(math.sqrt(2), abs=1e-6)


def test_limit_condition():
    assert classify_limit_condition(LogWeight()).status == "holds"
    assert classify_limit_condition(ExpSqrtLogWeight()).status == "holds"
    p = classify_limit_condition(PowerWeight(0.5))
    assert p.status == "fails" and p.estimate == pytest.approx(math.sqrt(2), abs=1e-6)


def test_sedaev_condition():
    log = classify_sedaev(LogWeight())
    assert log.status == "holds"
    assert log.tail_value == pytest.approx(1 + math.log(1e6) / 1e6, abs=1e-6)
    esl = classify_sedaev(ExpSqrtLogWeight())
    assert esl.status == "fails" and esl.estimate == pytest.approx(math.exp(0.5), abs=1e-2)
    assert classify_sedaev(PowerWeight(0.5)).status == "diverges"


def test_norm_of_psi_prime_is_one():
    assert marcinkiewicz_norm_function(pw.WeightDerivative(LogWeight()), LogWeight()) == pytest.approx(1.0, abs=1e-6)
    sampled = pw.WeightDerivative(LogWeight()).sample(u_max=12.0)
    assert marcinkiewicz_norm_function(sampled, LogWeight()) == pytest.approx(1.0, abs=1e-6)


def test_norm_counterexample_within_bound():
    for k in (5, 40):
        assert marcinkiewicz_norm_function(build_counterexample(k), LogWeight()) <= NORM_BOUND + 1e-9


def test_norm_indicator_brute_force():
    x = pw.StepFunction.from_linear([0.0, 3.0], [2.0])
    psi = LogWeight()
    t = np.exp(np.linspace(-10, 5, 400001))
    F = np.where(t < 3, 2 * t, 6.0)
    brute = max(F[i] / psi(t[i]) for i in range(0, t.size, 1))
    assert marcinkiewicz_norm_function(x, psi) == pytest.approx(brute, rel=1e-6)


def test_norm_detects_divergence():
    with pytest.raises(DivergenceError):
        marcinkiewicz_norm_function(pw.StepFunction.constant(1.0), LogWeight())
    with pytest.raises(DivergenceError):
        marcinkiewicz_norm_function(pw.WeightDerivative(PowerWeight(0.5)), LogWeight())


def test_sequence_norms():
    x = 1 / np.arange(1, 10 ** 6 + 1)
    assert marcinkiewicz_norm_sequence(x) == pytest.approx(1 / math.log(2))
    assert marcinkiewicz_norm_sequence([1.0, 0.0, 0.0]) == pytest.approx(1 / math.log(2))
    assert marcinkiewicz_norm_sequence(1 / np.arange(1, 1001) ** 2) == pytest.approx(1 / math.log(2))


def _log_table():
    t = np.geomspace(np.e, 1e12, 400)
    return TabulatedWeight(tuple(t), tuple(np.log(t)))


def test_tabulated_tracks_log():
    tab, ref = _log_table(), LogWeight()
    for u in (0.5, 3.0, 10.0, 25.0):
        assert tab.log_eval(u) == pytest.approx(ref.log_eval(u), abs=2e-3)
        assert tab.log_inverse(tab.log_eval(u)) == pytest.approx(u, abs=1e-9)
    for lam in (-5.0, -20.0, -40.0):
        assert tab.derivative_level(lam) == pytest.approx(ref.derivative_level(lam), abs=0.05)
    assert tab.derivative_level(0.0) == -math.inf
    r = class_report(tab)
    assert r["increasing"] and r["concave"]
    assert marcinkiewicz_norm_function(pw.ReciprocalFunction(), tab) == pytest.approx(np.e, rel=1e-6)


def test_tabulated_tail_is_c1():
    tab = TabulatedWeight((1.0, 2.0, 4.0), (1.0, 1.5, 2.0))
    u4 = math.log(4.0)
    assert tab.log_derivative(u4 - 1e-12) == pytest.approx(tab.log_derivative(u4), abs=1e-9)
    assert tab.kinks == (0.0, math.log(2.0), u4)


@pytest.mark.parametrize("t, y", [
    ((1.0, 2.0, 3.0), (1.0, 1.2, 2.0)),   # slope increases
    ((1.0, 1.0), (1.0, 2.0)),             # repeated t
    ((1.0, 2.0), (2.0, 2.0)),             # flat
    ((1.0,), (1.0,)),
])
def test_tabulated_rejects_bad_tables(t, y):
    with pytest.raises(ValueError):
        TabulatedWeight(t, y)


def test_read_table_and_parse(tmp_path):
    path = tmp_path / "psi.txt"
    path.write_text("# t psi\n1 1\n2 1.5\n\n4 2\n")
    tab = parse_psi(f"table:{path}")
    assert tab == read_table(path)
    assert tab.spec() == f"table:{path}"
    with pytest.raises(ValueError):
        parse_psi(f"table:{tmp_path / 'missing.txt'}")
    path.write_text("1 1 1\n")
    with pytest.raises(ValueError):
        read_table(path)
