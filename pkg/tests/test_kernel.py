import math

import mpmath
import numpy as np
import pytest

from polydense.errors import OrderError
from polydense.kernel import (H, H_deriv, _disc_mass, ball_volume_factor, estimate_CH,
                              fejer_h, fejer_h_deriv, fejer_kernel, kernel_mass,
                              kernel_mass_bracket, remainder_bound, remainder_series,
                              tail_mass_1d, taylor_U, taylor_coeff)

mpmath.mp.dps = 50


def h_mp(z):
    z = mpmath.mpf(z)
    return mpmath.mpf(1) / 4 if z == 0 else mpmath.sin(z / 2) ** 2 / z ** 2


def coeff_mp(k):
    c = taylor_coeff(k)
    return mpmath.mpf(c.numerator) / c.denominator


def test_values_against_mpmath():
    xs = [0.0, 1e-6, 3e-5, 1e-3, 0.5, 3.9, 4.1, 17.0, -250.0]
    got = fejer_h(np.array(xs))
    ref = np.array([float(h_mp(x)) for x in xs])
    assert np.allclose(got, ref, rtol=1e-14, atol=0)


@pytest.mark.parametrize("k", range(1, 9))
def test_derivatives_against_mpmath(k):
    xs = [0.0, 0.7, -2.5, 3.999, 4.001, 9.0, -31.0]
    got = fejer_h_deriv(k, np.array(xs))
    ref = np.array([float(mpmath.diff(h_mp, mpmath.mpf(x), k)) for x in xs])
    assert np.allclose(got, ref, rtol=1e-9, atol=1e-13)


def test_derivative_order_limit():
    with pytest.raises(OrderError):
        fejer_h_deriv(9, np.array([0.0]))


def test_taylor_coefficients_exact():
    ref = mpmath.taylor(h_mp, 0, 12)
    for k in range(13):
        assert float(taylor_coeff(k)) == pytest.approx(float(ref[k]), rel=1e-14, abs=1e-30)


def test_mass_is_half_pi():
    assert kernel_mass(1) == pytest.approx(math.pi / 2, rel=1e-14)
    lo, hi = kernel_mass_bracket(200.0)
    assert lo <= math.pi / 2 <= hi
    assert kernel_mass(2) == pytest.approx(math.pi ** 2 / 4, rel=1e-13)


def test_tail_mass_closed_form():
    for R in (1.0, 10.0, 123.4):
        # complement of a finite integral; h has a non-oscillatory 1/(2z^2) part
        ref = mpmath.pi / 2 - 2 * mpmath.quad(h_mp, mpmath.linspace(0, R, 20))
        assert tail_mass_1d(R) == pytest.approx(float(ref), rel=1e-10)


def test_disc_mass_between_squares():
    A1 = math.pi / 2
    for R in (2.0, 8.0):
        inner = (A1 - tail_mass_1d(R / math.sqrt(2))) ** 2
        outer = (A1 - tail_mass_1d(R)) ** 2
        assert inner < _disc_mass(R, 2) < outer
    k2 = fejer_kernel(2)
    assert k2.tail_mass(8.0) == pytest.approx(k2.mass - _disc_mass(8.0, 2))


def test_CH_matches_bernstein():
    # sup|h| = 1/4 at 0, and Bernstein gives sup|h^(k)| <= 1/4
    for k in range(0, 5):
        assert estimate_CH(k) == pytest.approx(1.05 * 0.25, rel=1e-12)
    assert estimate_CH(4, n=2) == pytest.approx(1.05 * 0.25 ** 2, rel=1e-12)
    with pytest.raises(OrderError):
        estimate_CH(9)


def test_tensor_kernel():
    pts = np.array([[0.5, -1.0], [3.0, 2.0]])
    assert np.allclose(H(pts, 2), fejer_h(pts[:, 0]) * fejer_h(pts[:, 1]))
    assert np.allclose(H_deriv((1, 2), pts, 2),
                       fejer_h_deriv(1, pts[:, 0]) * fejer_h_deriv(2, pts[:, 1]))


def test_taylor_polynomial_parity():
    U = taylor_U(6, 2)
    assert all(a % 2 == 0 and b % 2 == 0 for a, b in U.terms)
    assert U.coefficient((2, 4)) == pytest.approx(float(taylor_coeff(2) * taylor_coeff(4)))


@pytest.mark.parametrize("n", [1, 2])
def test_remainder_series_against_mpmath(n):
    rng = np.random.default_rng(7)
    pts = rng.uniform(-3, 3, size=(12, n))
    for N in (0, 3, 8, 14):
        got = remainder_series(N, pts, n)
        exact = {al: mpmath.fprod(coeff_mp(a) for a in al) for al in taylor_U(N, n).terms}
        for p, g in zip(pts, got):
            full = mpmath.fprod(h_mp(c) for c in p)
            poly = mpmath.fsum(c * mpmath.fprod(mpmath.mpf(x) ** a for x, a in zip(p, al))
                               for al, c in exact.items())
            ref = float(full - poly)
            assert g == pytest.approx(ref, rel=1e-8, abs=1e-18)


@pytest.mark.parametrize("n", [1, 2])
def test_remainder_bound_holds(n):
    rng = np.random.default_rng(11)
    pts = rng.uniform(-5, 5, size=(4000, n))
    C = estimate_CH(4, n)
    for N in range(0, 21):
        assert np.all(np.abs(remainder_series(N, pts, n)) <= remainder_bound(N, pts, C, n))


def test_ball_volume():
    assert ball_volume_factor(1) == pytest.approx(2.0)
    assert ball_volume_factor(2) == pytest.approx(math.pi)
