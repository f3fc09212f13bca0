import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize_scalar

from polydense.flt import (DIVERGENT, FINITE, ZERO, DiscreteFunctional, EntireSample, Rectangle,
                           cauchy_deriv, delta, flt_transform, functional_fleet, growth_norm,
                           hermitian_residual, moment_check, p_space_norm,
                           transform_deriv_at_zero)
from polydense.poly import MultiPoly
from polydense.smoothfn import SmoothFunction

FLEET = functional_fleet()


def trig(lam, kind):
    """cos(lam x) or sin(lam x) with exact derivatives."""
    shift = 0.0 if kind == "cos" else -np.pi / 2

    def deriv(alpha, pts):
        k = alpha[0]
        return lam ** k * np.cos(lam * pts[:, 0] + shift + k * np.pi / 2)

    return SmoothFunction(1, 64, deriv, name=kind)


def test_validation_and_shape():
    with pytest.raises(ValueError):
        DiscreteFunctional(((1.0, -1, 0.0),))
    with pytest.raises(ValueError):
        DiscreteFunctional(((1.0, 1.5, 0.0),))
    F = FLEET["mix"]
    assert F.order == 1 and F.reach == 0.7 and F.is_real
    assert not FLEET["complex"].is_real
    assert len(FLEET) == 10


@pytest.mark.parametrize("name", sorted(FLEET))
def test_transform_matches_application(name):
    # F(exp(-i lam x)) = F(cos) - i F(sin)
    F = FLEET[name]
    g = flt_transform(F)
    for lam in (0.0, 0.7, -2.3, 5.0):
        direct = F(trig(lam, "cos")) - 1j * F(trig(lam, "sin"))
        assert g(lam) == pytest.approx(direct, abs=1e-12)


@pytest.mark.parametrize("name", sorted(FLEET))
def test_on_monomial_matches_application(name):
    F = FLEET[name]
    for j in range(6):
        p = MultiPoly(1, {(j,): 1.0}).as_smooth()
        assert F.on_monomial(j) == pytest.approx(F(p), abs=1e-12)


@pytest.mark.parametrize("name", sorted(FLEET))
@pytest.mark.parametrize("k", range(7))
def test_moment_identity_both_routes(name, k):
    mc = moment_check(FLEET[name], k)
    scale = max(1.0, abs(mc.direct))
    assert mc.residual_closed <= 1e-12 * scale
    assert mc.residual_contour <= 1e-10 * scale


def test_moment_check_limit():
    with pytest.raises(ValueError):
        moment_check(delta(), 7)


def test_cauchy_derivative_of_exp():
    g = EntireSample(np.exp)
    for j in range(6):
        assert cauchy_deriv(g, j) == pytest.approx(1.0, abs=1e-13)
    assert transform_deriv_at_zero(delta(2.0), 3) == pytest.approx((-2j) ** 3)


def test_hermitian_symmetry():
    re = np.linspace(-5, 5, 41)
    im = np.linspace(-3, 3, 31)
    for name, F in FLEET.items():
        res = hermitian_residual(flt_transform(F), re, im)
        if F.is_real:
            assert res <= 1e-12
        else:
            assert res > 1e-3


def test_growth_norm_delta0(power1):
    res = growth_norm(flt_transform(delta()), 1, power1)
    assert res.verdict == FINITE
    assert res.value == pytest.approx(1.0, abs=1e-15)


def test_growth_norm_against_optimizer(power1):
    # |exp(-i lam)| = e^{Im lam}; with phi~_1(y) = y^2/8 the sup sits on the imaginary axis
    g = flt_transform(delta(1.0))
    tilde = lambda m, y: y ** 2 / 8
    res = growth_norm(g, 1, power1, Rectangle(8, 8, 801), tilde=tilde)
    opt = minimize_scalar(lambda y: -(y - y ** 2 / 8 - math.log1p(abs(y))),
                          bounds=(0, 8), method="bounded", options={"xatol": 1e-12})
    assert res.verdict == FINITE
    assert res.value == pytest.approx(math.exp(-opt.fun), rel=1e-4)
    assert res.value <= math.exp(-opt.fun) * (1 + 1e-12)


def test_growth_norm_numeric_tilde_agrees(power1):
    g = flt_transform(delta(1.0))
    a = growth_norm(g, 1, power1)
    b = growth_norm(g, 1, power1, tilde=lambda m, y: y ** 2 / 8)
    assert a.value == pytest.approx(b.value, rel=1e-5)


def test_polynomial_growth_verdicts(power1):
    g = flt_transform(FLEET["d1_at0"])
    assert growth_norm(g, 0, power1).verdict == DIVERGENT
    res = growth_norm(g, 1, power1)
    assert res.verdict == FINITE and 0.9 < res.value < 1.0


def test_p_space_norm(power1):
    from polydense.seqspace import make_seq_weights
    c = make_seq_weights("geometric")
    g = flt_transform(delta())
    assert p_space_norm([ZERO, g], 1, c, power1) == pytest.approx(1.0 / c(2, 1))
    assert p_space_norm([flt_transform(FLEET["d1_at0"])], 0, c, power1) == np.inf


@given(st.floats(-1, 1), st.integers(0, 3), st.floats(-3, 3))
@settings(max_examples=50, deadline=None)
def test_linearity_of_transform(a, k, lam):
    F = delta(a, k, 2.0) + delta(-a, 0, -1.0)
    g = flt_transform(F)
    parts = 2.0 * flt_transform(delta(a, k))(lam) - flt_transform(delta(-a))(lam)
    assert g(lam) == pytest.approx(parts, abs=1e-12 * max(1.0, abs(lam) ** k * math.e ** 3))
