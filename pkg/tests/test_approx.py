import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from polydense.approx import (CutoffSpec, chi, chi_deriv, kernel_remainder_bound, moments,
                              pipeline_approximate, psi_derivs, ratio_signature, split_bounds,
                              split_error, stage1_certificate, stage1_cutoff, stage1_error,
                              stage2_error, stage2_mollify, stage3_direct, stage3_error_curve,
                              shifted, stage3_polynomial, transition_derivs, verify)
from polydense.errors import BudgetError, OrderError, ResolutionError
from polydense.fleet import make_function
from polydense.kernel import fejer_h
from polydense.smoothfn import certified_seminorm, fd_check, linear_combination, zero_function

mpmath.mp.dps = 30


@pytest.fixture(scope="module")
def bump_nu():
    return stage1_cutoff(make_function("bump"), 2.0)


@pytest.fixture(scope="module")
def bump_lam(bump_nu):
    return stage2_mollify(bump_nu, 8.0)


# ---------------------------------------------------------------- cutoff

def test_psi_derivatives_against_mpmath():
    ts = [0.05, 0.3, 1.0, 2.5]
    got = psi_derivs(np.array(ts), 6)
    for k in range(7):
        ref = [float(mpmath.diff(lambda t: mpmath.exp(-1 / t), t, k)) for t in ts]
        assert np.allclose(got[k], ref, rtol=1e-10, atol=1e-300)
    assert np.all(psi_derivs(np.array([-1.0, 0.0]), 3) == 0.0)


def test_cutoff_plateau_and_support():
    x = np.linspace(-3, 3, 6001)
    c = chi(x)
    assert np.all(c[np.abs(x) <= 1] == 1.0)
    assert np.all(c[np.abs(x) >= 2] == 0.0)
    assert np.all((0 <= c) & (c <= 1))
    right = c[(x >= 1) & (x <= 2)]
    assert np.all(np.diff(right) <= 0)


@given(st.floats(0, 0.5))
def test_transition_symmetry(s):
    # g(t) + g(1 - t) = 1
    g = transition_derivs(np.array([0.5 + s, 0.5 - s]), 0)[0]
    assert g.sum() == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("k", range(1, 7))
def test_cutoff_derivatives_fd(k):
    x = np.linspace(1.05, 1.95, 19)
    fn = CutoffSpec(1.0, 1)
    ref = np.max(np.abs(chi_deriv(k, np.linspace(1, 2, 2001))))

    class Wrap:
        dim = 1

        def deriv(self, alpha, pts):
            return fn.deriv(alpha, pts)

    for xi in x:
        assert fd_check(Wrap(), (k,), [xi], 1e-3) <= 1e-6 * ref


def test_cutoff_order_limit():
    with pytest.raises(OrderError):
        chi_deriv(7, np.array([1.5]))


def test_cutoff_scaling():
    c = CutoffSpec(3.0, 2)
    pts = np.array([[2.5, 0.0], [4.0, 5.0], [-4.5, 3.3]])
    want = chi(pts[:, 0] / 3) * chi(pts[:, 1] / 3)
    assert np.allclose(c(pts), want)
    d = c.deriv((1, 2), pts)
    want = chi_deriv(1, pts[:, 0] / 3) / 3 * chi_deriv(2, pts[:, 1] / 3) / 9
    assert np.allclose(d, want)


# ---------------------------------------------------------------- stage 1

def test_stage1_agrees_inside_and_vanishes_outside():
    f = make_function("cosh")
    f_nu = stage1_cutoff(f, 2.0)
    inside = np.linspace(-2, 2, 41)
    outside = np.array([-4.0, -5.0, 4.0, 10.0])
    for k in range(4):
        assert np.allclose(f_nu.deriv((k,), inside), f.deriv((k,), inside), rtol=1e-15)
        assert np.all(f_nu.deriv((k,), outside) == 0.0)
    assert f_nu.support.radius == 4.0


@pytest.mark.parametrize("k", [1, 2, 3])
def test_stage1_leibniz_fd(k):
    f_nu = stage1_cutoff(make_function("sin_gaussian"), 1.0)
    for x in (1.2, 1.5, -1.7):
        assert fd_check(f_nu, (k,), [x], 1e-3) <= 1e-7


def test_stage1_error_decreases_and_is_certified(power1):
    f = make_function("cosh")
    prev = np.inf
    for nu in (1.0, 2.0, 3.0, 4.0):
        res, tail, _ = stage1_error(f, power1, 1, nu)
        measured = res.value + tail
        assert measured <= stage1_certificate(f, power1, 1, nu)
        assert measured < prev
        prev = measured


def test_stage1_certificate_zero_for_compact_support(power1):
    assert stage1_certificate(make_function("bump"), power1, 1, 1.0) == 0.0


# ---------------------------------------------------------------- stage 2

def test_mollified_against_adaptive_quadrature(bump_nu, bump_lam):
    lam = 8.0
    A = math.pi / 2
    for x in (-0.7, 0.0, 0.35, 1.3):
        val, _ = quad(lambda y: bump_nu([y])[0] * fejer_h(lam * (x - y)), -1, 1,
                      limit=400, epsabs=1e-14, epsrel=1e-13)
        assert bump_lam([x])[0] == pytest.approx(lam / A * val, rel=1e-10, abs=1e-14)


def test_mollified_derivatives_fd(bump_lam):
    for k in (1, 2):
        for x in (-0.4, 0.9):
            assert fd_check(bump_lam, (k,), [x], 1e-3) <= 1e-6


def test_mollify_resolution_guard(bump_nu):
    with pytest.raises(ResolutionError):
        stage2_mollify(bump_nu, 8.0, quad=10.0)
    with pytest.raises(ValueError):
        stage2_mollify(bump_nu, 1.0)


def test_stage2_error_decays(bump_nu):
    pts = np.linspace(-2, 2, 801)
    errs = [stage2_error(bump_nu, stage2_mollify(bump_nu, lam), 1, pts) for lam in (8, 16, 32)]
    assert errs[0] > errs[1] > errs[2]
    lams = np.array([8.0, 16.0, 32.0])
    # at least the proven rate lam^(-1/3); the kernel's missing first moment
    # makes the observed decay log(lam)/lam
    assert np.polyfit(np.log(lams), np.log(errs), 1)[0] < -1 / 3
    shape = np.array(errs) * lams / np.log(lams)
    assert shape.max() / shape.min() < 1.25


@pytest.mark.parametrize("x", [-0.5, 0.2, 0.8])
def test_split_identity_and_bounds(bump_nu, x):
    lam, m = 16.0, 1
    f_lam = stage2_mollify(bump_nu, lam)
    b1, b2 = split_bounds(bump_nu, lam, m)
    for alpha in [(0,), (1,)]:
        I1, I2 = split_error(bump_nu, lam, alpha, [x])
        diff = f_lam.deriv(alpha, [x])[0] - bump_nu.deriv(alpha, [x])[0]
        assert I1 + I2 == pytest.approx(diff, abs=1e-9)
        assert abs(I1) <= b1 and abs(I2) <= b2


def test_split_identity_two_dims():
    f_nu = stage1_cutoff(make_function("bump", 2), 2.0)
    lam = 4.0
    f_lam = stage2_mollify(f_nu, lam, quad=16.0)
    x = np.array([0.3, -0.2])
    I1, I2 = split_error(f_nu, lam, (1, 0), x, f_lam=f_lam)
    diff = f_lam.deriv((1, 0), x)[0] - f_nu.deriv((1, 0), x)[0]
    assert I1 + I2 == pytest.approx(diff, abs=1e-8)


def test_split_bounds_tail_modes(bump_nu):
    a = split_bounds(bump_nu, 64.0, 1, K_num=1.0)
    e = split_bounds(bump_nu, 64.0, 1, K_num=1.0, tail="exact")
    assert a[0] == e[0]
    assert e[1] <= a[1]


# ---------------------------------------------------------------- stage 3

def test_moments_against_mpmath(bump_nu):
    mom = moments(bump_nu, 6)
    for k in range(7):
        ref = mpmath.quad(lambda y: mpmath.exp(-1 / (1 - y ** 2)) * y ** k, [-1, 0, 1])
        assert mom[(k,)] == pytest.approx(float(ref), rel=1e-10, abs=1e-15)


def test_moments_resolution_guard():
    f_nu = stage1_cutoff(make_function("bump"), 2.0)
    with pytest.raises(ResolutionError):
        moments(f_nu, 4, width=1.0, q=2, tol=1e-14)


@pytest.mark.parametrize("dim,lam,N", [(1, 2.0, 6), (1, 8.0, 20), (2, 2.0, 6)])
def test_polynomial_direct_vs_assembled(dim, lam, N):
    f_nu = stage1_cutoff(make_function("bump", dim), 2.0)
    V = stage3_polynomial(f_nu, lam, N)
    x = np.linspace(-1.5, 1.5, 7)
    pts = x[:, None] if dim == 1 else np.stack([x, x[::-1]], axis=1)
    direct = stage3_direct(f_nu, lam, N, pts)
    assert np.max(np.abs(V(pts) - direct)) <= 1e-9 * max(1.0, np.max(np.abs(direct)))


def test_polynomial_converges_within_bound(bump_nu):
    lam = 2.0
    f_lam = stage2_mollify(bump_nu, lam)
    x = np.linspace(-2, 2, 41)
    prev = np.inf
    for N in (4, 8, 12, 16):
        err = np.abs(f_lam(x) - stage3_polynomial(bump_nu, lam, N)(x))
        assert np.all(err <= kernel_remainder_bound(bump_nu, lam, N, x))
        assert err.max() < prev
        prev = err.max()


def test_error_curve_fit_dominates(bump_nu, power1):
    curve = stage3_error_curve(bump_nu, 2.0, 1, range(0, 12), power1)
    for rep in curve.reports:
        if rep.parameter >= 1:
            assert rep.measured <= rep.bound * (1 + 1e-12)
    assert curve.reports[-1].measured < curve.reports[0].measured


def test_ratio_signature_synthetic():
    Ns = np.arange(1, 30)
    fact = [3.0 ** N / math.factorial(N) for N in Ns]
    assert abs(ratio_signature(Ns, fact, floor=0).slope) < 1e-12
    geom = [0.5 ** N for N in Ns]
    assert ratio_signature(Ns, geom, floor=0).slope > 0.9
    assert np.isnan(ratio_signature([1, 2], [1e-20, 1e-21]).slope)


# ---------------------------------------------------------------- pipeline

def test_pipeline_bump(power1):
    res = pipeline_approximate(make_function("bump"), power1, 1, 0.6, nmax=80)
    assert res.final_error < 0.6
    assert [r.stage for r in res.reports].count(3) == res.N + 1


def test_pipeline_gaussian_loose(power1):
    res = pipeline_approximate(make_function("gaussian"), power1, 1, 10.0)
    assert res.final_error < 10.0


def test_pipeline_zero_function(power1):
    res = pipeline_approximate(zero_function(), power1, 1, 1e-6)
    assert res.N == 0 and res.final_error == 0.0


def test_pipeline_budget_error(power1):
    with pytest.raises(BudgetError) as info:
        pipeline_approximate(make_function("gaussian"), power1, 1, 1e-3, lams=[2.0, 4.0])
    assert any(r.stage == 2 for r in info.value.reports)


# ---------------------------------------------------------------- structural properties

def test_mollify_translation_equivariant(bump_nu):
    a = 0.37
    lam = 8.0
    moved = stage2_mollify(shifted(bump_nu, a), lam)
    base = stage2_mollify(bump_nu, lam)
    x = np.linspace(-1.5, 1.5, 13)
    assert np.allclose(moved(x), base(x - a), atol=1e-10)


def test_mollify_linear(bump_nu):
    lam = 8.0
    x = np.linspace(-1.5, 1.5, 7)
    g = stage2_mollify(linear_combination([(2.5, bump_nu)]), lam)
    assert np.allclose(g(x), 2.5 * stage2_mollify(bump_nu, lam)(x), rtol=1e-13)
    z = stage1_cutoff(zero_function(), 1.0)
    assert np.all(stage2_mollify(z, lam)(x) == 0.0)
    assert split_error(z, lam, (0,), [0.3]) == (0.0, 0.0)


def test_degree_zero_polynomial(bump_nu):
    lam = 2.0
    mom = moments(bump_nu, 8)
    V0 = stage3_polynomial(bump_nu, lam, 0, mom=mom)
    assert V0.degree == 0
    assert V0.coefficient((0,)) == pytest.approx(lam / (math.pi / 2) * 0.25 * mom[(0,)], rel=1e-14)
    for N in range(1, 9):
        assert stage3_polynomial(bump_nu, lam, N, mom=mom).degree <= N


def test_moment_symmetry_and_scaling(bump_nu):
    mom = moments(bump_nu, 7)
    for k in (1, 3, 5, 7):
        assert abs(mom[(k,)]) <= 1e-12
    scaled = moments(linear_combination([(3.0, bump_nu)]), 7)
    for k in range(8):
        assert scaled[(k,)] == pytest.approx(3.0 * mom[(k,)], rel=1e-13, abs=1e-15)


def test_stage_errors_triangle_inequality(power1):
    f = make_function("sin_gaussian")
    m, nu, lam, N = 1, 2.0, 8.0, 30
    f_nu = stage1_cutoff(f, nu)
    f_lam = stage2_mollify(f_nu, lam)
    V = stage3_polynomial(f_nu, lam, N)
    ppa = 2048
    e1 = certified_seminorm(f - f_nu, m, m, power1, tol=1e-12, points_per_axis=ppa)
    e2 = certified_seminorm(f_nu - f_lam, m, m, power1, tol=1e-12, radius=5.0,
                            points_per_axis=ppa)
    e3 = certified_seminorm(f_lam - V.as_smooth(), m, m, power1, tol=1e-12, radius=5.0,
                            points_per_axis=ppa)
    total, tail, _ = verify(f, V, power1, m, ppa)
    parts = sum(r.value + t for r, t, _ in (e1, e2, e3))
    assert total.value <= parts * (1 + 1e-9)
