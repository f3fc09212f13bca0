import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polydense.errors import CertificateError, OrderError
from polydense.fleet import cosh_fn, gaussian, make_function
from polydense.multiindex import as_points, multi_binom, multi_indices, sub_indices
from polydense.quadrature import box_rule, composite_gl, panels_for_width
from polydense.smoothfn import (GridSpec, certified_seminorm, default_grid, envelope_tail,
                                fd_check, linear_combination, seminorm_q, tail_certificate,
                                zero_function)
from polydense.weights import Box


def test_multi_indices_counts():
    for dim in (1, 2, 3):
        for p in range(6):
            assert len(multi_indices(dim, p)) == math.comb(p + dim, dim)
            assert len(multi_indices(dim, p, exact=True)) == math.comb(p + dim - 1, dim - 1)
    assert multi_indices(2, 1) == [(0, 0), (0, 1), (1, 0)]


def test_sub_indices_and_binomials():
    alpha = (2, 1)
    subs = sub_indices(alpha)
    assert len(subs) == 6
    # sum_beta C(alpha, beta) = 2^|alpha|
    assert sum(multi_binom(alpha, b) for b in subs) == 8


def test_as_points_shapes():
    assert as_points(3.0, 1).shape == (1, 1)
    assert as_points([1.0, 2.0], 2).shape == (1, 2)
    with pytest.raises(ValueError):
        as_points([1.0, 2.0, 3.0], 2)


def test_composite_gl_exact_for_polynomials():
    x, w = composite_gl(-1.0, 3.0, 5, q=4)
    # q points integrate degree 2q-1 exactly on each panel
    assert np.dot(w, x ** 7) == pytest.approx((3.0 ** 8 - 1.0) / 8, rel=1e-13)
    assert np.all(np.diff(x) > 0)
    assert panels_for_width(0.0, 1.0, 0.25) == 4
    pts, wts = box_rule(1.0, 2, 0.5, q=4)
    assert np.dot(wts, pts[:, 0] ** 2 * pts[:, 1] ** 2) == pytest.approx(4.0 / 9.0, rel=1e-13)


def test_order_limit_enforced():
    f = gaussian()
    with pytest.raises(OrderError):
        f.deriv((13,), [0.0])
    with pytest.raises(ValueError):
        f.deriv((1, 1), [0.0])


def test_linear_combination_values():
    g, c = gaussian(), cosh_fn()
    h = 2.0 * g - c
    x = np.linspace(-2, 2, 9)
    assert np.allclose(h(x), 2 * np.exp(-x ** 2) - np.cosh(x), rtol=1e-14)
    assert np.allclose((g + c).deriv((1,), x), -2 * x * np.exp(-x ** 2) + np.sinh(x), rtol=1e-14)
    assert np.all(np.isfinite(h.log_envelope(2, np.array([0.0, 1.0]))))
    z = linear_combination([(0.0, g), (1.0, make_function("bump"))])
    assert z.support is None and z.log_envelope is not None


def test_zero_function_seminorm(power1):
    z = zero_function()
    res = seminorm_q(z, 2, 1, power1, default_grid(3.0, 1))
    assert res.value == 0.0
    assert envelope_tail(z, power1, 1, 2, 1.0) == 0.0


def test_gaussian_seminorm_value(power1):
    # q_{0,1}(exp(-x^2)) = sup exp(-x^2 - 2x^2) = 1 at the origin
    res = seminorm_q(gaussian(), 0, 1, power1, GridSpec(Box(4.0, 1), 2001))
    assert res.value == pytest.approx(1.0, abs=1e-12)
    assert res.boundary < 1e-10


def test_seminorm_grid_misses_origin(power1):
    # an even cell-centred grid brackets 0 at +-h/2
    grid = GridSpec(Box(2.0, 1), 2048)
    h = 4.0 / 2048
    res = seminorm_q(gaussian(), 0, 1, power1, grid)
    assert res.value == pytest.approx(math.exp(-3 * (h / 2) ** 2), rel=1e-14)


def test_certified_seminorm_tail(power1):
    res, tail, r = certified_seminorm(gaussian(), 2, 1, power1, tol=1e-12,
                                      points_per_axis=2049)
    assert tail < 1e-12
    assert r >= 2.0
    # q_{2,1}: the second derivative (4x^2-2) e^{-x^2} peaks at 2 at the origin
    assert res.value == pytest.approx(2.0, rel=1e-14)


def test_cosh_needs_stronger_weight(power1):
    # cosh grows like e^r; phi_1 = 2 r^2 still dominates
    res, tail, _ = certified_seminorm(cosh_fn(), 1, 1, power1, tol=1e-10,
                                      points_per_axis=2049)
    assert 1.0 <= res.value < 2.0


def test_tail_certificate_bounds_grid(power1):
    f = gaussian()
    for r in (1.0, 2.0, 3.0):
        cert = tail_certificate(f, power1, 1, r)
        pts = np.linspace(r, 4 * r, 2001)
        pts = np.concatenate([pts, -pts])
        worst = 0.0
        for alpha in multi_indices(1, 1):
            worst = max(worst, np.max(np.abs(f.deriv(alpha, pts)) * np.exp(-power1(1, pts))))
        assert worst <= cert


def test_tail_certificate_rejects_shrinking_gap(logpen1):
    # a family whose gap shrinks outward must not be certified
    class Shrinking:
        dim = 1

        def __call__(self, m, pts):
            r = np.abs(np.asarray(pts, dtype=float).reshape(-1))
            return (2.0 + m) * r ** 2 - m * np.minimum(r, 3.0) ** 3 / (1 + m)

    with pytest.raises(CertificateError):
        tail_certificate(gaussian(), Shrinking(), 1, 1.0, c=1.0)


@given(st.floats(-3, 3), st.integers(1, 6))
@settings(max_examples=60, deadline=None)
def test_fd_consistency_gaussian(x, k):
    f = gaussian()
    scale = max(1.0, float(np.max(np.abs(f.deriv((k,), np.linspace(-3, 3, 61))))))
    assert fd_check(f, (k,), [x], 1e-3) <= 1e-7 * scale
