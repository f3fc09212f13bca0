import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polydense.weights import (Box, check_growth_conditions, log_theta, make_power_family,
                               make_weight_family, theta)


def test_power_family_values(power1, power2):
    assert power1(1, [2.0])[0] == 8.0
    assert power2(1, [1.0, 1.0])[0] == pytest.approx(4.0, rel=1e-15)
    # m -> infinity at x = 2
    assert power1(10 ** 9, [2.0])[0] == pytest.approx(4.0, rel=1e-8)


def test_power_family_rejects_small_exponent():
    with pytest.raises(ValueError):
        make_power_family(1.0)
    with pytest.raises(ValueError):
        make_power_family(0.5)


@given(x=st.floats(-50, 50), m=st.integers(1, 40))
def test_power_family_monotone_in_m(x, m):
    W = make_power_family(2.0, 1)
    assert W(m + 1, [x])[0] <= W(m, [x])[0]


def test_log_penalty_difference_is_exact(logpen1):
    x = np.linspace(-30, 30, 6001)
    for m in range(1, 6):
        d = logpen1(m, x) - logpen1(m + 1, x) - np.log1p(np.abs(x))
        assert np.max(np.abs(d)) < 1e-12


def test_weights_finite_on_box(power2, logpen1):
    g = np.linspace(-20, 20, 201)
    pts = np.stack(np.meshgrid(g, g), axis=-1).reshape(-1, 2)
    assert np.all(np.isfinite(power2(3, pts)))
    assert np.all(np.isfinite(logpen1(3, g)))


def test_box_membership_is_strict():
    b = Box(1.0, 2)
    assert b.contains([[0.5, -0.99]])[0]
    assert not b.contains([[1.0, 0.0]])[0]
    assert not b.contains([[0.0, -1.0]])[0]
    with pytest.raises(ValueError):
        Box(0.0)


def test_theta_values(power1):
    assert theta(power1, 1, [0.0])[0] == 1.0
    assert theta(power1, 1, [1.0])[0] == pytest.approx(math.e ** 2, rel=1e-15)
    ref = float(mpmath.exp(mpmath.mpf(27) / 2))
    assert theta(power1, 2, [3.0])[0] == pytest.approx(ref, rel=1e-14)


def test_theta_overflow_and_log_path(power1):
    with pytest.raises(OverflowError):
        theta(power1, 1, [30.0])
    x = np.array([30.0, 100.0])
    assert np.array_equal(log_theta(power1, 1, x), power1(1, x))


def test_growth_conditions_power(power1):
    rep = check_growth_conditions(power1, 3, [1.0, 10.0, 100.0])
    assert rep.passed
    row = rep.rows[0]
    assert row.ratio_min[-1] == pytest.approx(200.0)
    # phi_1 - phi_2 = (2 - 3/2) r^2
    assert row.diff_min[1] == pytest.approx(50.0)
    assert rep.largest_radius == 100.0


def test_growth_conditions_log_penalty(logpen1):
    rep = check_growth_conditions(logpen1, 2, [0.5, math.e - 1, 5.0, 50.0])
    assert rep.rows[0].diff_min[1] == pytest.approx(1.0, rel=1e-14)
    assert rep.passed


def test_growth_conditions_flags_failure():
    # a constant gap: phi_m - phi_{m+1} does not grow
    W = make_weight_family({"kind": "log_penalty", "a": 2.0})
    flat = check_growth_conditions(W, 1, [1.0, 2.0, 3.0], threshold=100.0)
    assert not flat.passed


def test_growth_conditions_rejects_bad_radii(power1):
    with pytest.raises(ValueError):
        check_growth_conditions(power1, 1, [1.0, 2.0])
    with pytest.raises(ValueError):
        check_growth_conditions(power1, 1, [1.0, 3.0, 2.0])


def test_make_weight_family_unknown():
    with pytest.raises(ValueError):
        make_weight_family({"kind": "nope"})
