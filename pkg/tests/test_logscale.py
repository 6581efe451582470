import math

import mpmath
import pytest

from dixtrace import logscale as ls
from dixtrace.logscale import BOTTOM


def test_log_add_equal_magnitudes():
    assert ls.log_add(0.0, 0.0) == pytest.approx(math.log(2), abs=1e-15)


def test_log_add_bottom_is_identity():
    assert ls.log_add(BOTTOM, 5.0) == 5.0
    assert ls.log_add(5.0, BOTTOM) == 5.0
    assert ls.log_add(BOTTOM, BOTTOM) == BOTTOM


def test_log_add_large_does_not_overflow():
    assert ls.log_add(1000.0, 1000.0) == pytest.approx(1000 + math.log(2), rel=1e-15)


def test_log_sub_basic():
    assert ls.log_sub(math.log(3), 0.0) == pytest.approx(math.log(2), abs=1e-15)


def test_log_sub_exact_cancellation():
    assert ls.log_sub(7.0, 7.0) == BOTTOM


def test_log_sub_high_magnitude():
    assert ls.log_sub(1000.0, 999.0) == pytest.approx(1000 + math.log(1 - math.exp(-1)), rel=1e-15)


def test_log_sub_rejects_negative_difference():
    with pytest.raises(ValueError):
        ls.log_sub(1.0, 2.0)


def test_log_sum_cases():
    assert ls.log_sum([0.0] * 4) == pytest.approx(math.log(4), abs=1e-15)
    assert ls.log_sum([]) == BOTTOM
    assert ls.log_sum([0.0, math.log(2), math.log(3)]) == pytest.approx(math.log(6), abs=1e-15)


def test_log_sum_order_independent():
    vals = [0.1 * i - 3 for i in range(50)]
    assert ls.log_sum(vals) == ls.log_sum(vals[::-1])


def test_from_real_rejects_negative():
    with pytest.raises(ValueError):
        ls.from_real(-1.0)
    assert ls.from_real(0.0) == BOTTOM
    assert ls.to_real(BOTTOM) == 0.0


def test_mpf_path_resolves_doubly_exponential_offsets():
    k = 100
    with ls.precision(ls.digits_for(mpmath.e ** k)):
        big = mpmath.mpf(k) + mpmath.exp(k)
        # k next to e^k survives: subtracting recovers it
        assert float(big - mpmath.exp(k)) == pytest.approx(k, abs=1e-20)
        assert isinstance(ls.log_add(big, big), mpmath.mpf)


def test_precision_never_lowers():
    before = mpmath.mp.dps
    with ls.precision(5):
        assert mpmath.mp.dps == before
    with ls.precision(before + 40):
        assert mpmath.mp.dps == before + 40
    assert mpmath.mp.dps == before


def test_follows_precision_uses_argument_dps():
    class Carrier:
        dps = 200

    @ls.follows_precision
    def probe(_):
        return mpmath.mp.dps

    assert probe(Carrier()) == 200
