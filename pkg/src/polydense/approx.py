"""Polynomial approximation in three stages: cutoff, mollification by the
entire kernel H, and replacement of H by its Taylor polynomial U_N.

Stage 1   f_nu(x)        = f(x) eta(x/nu),  eta = chi (x) ... (x) chi
Stage 2   f_{nu,lam}(x)  = (lam^n/A) int f_nu(y) H(lam(x - y)) dy
Stage 3   V_N(x)         = (lam^n/A) int f_nu(y) U_N(lam(x - y)) dy
"""

import time
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from math import comb, factorial, gamma, log, pi, sqrt

import numpy as np

from . import kernel as K
from .conjugate import stirling_log_factor
from .errors import BudgetError, OrderError, ResolutionError
from .multiindex import as_points, multi_binom, multi_indices, sub_indices
from .poly import MultiPoly
from .quadrature import box_rule, composite_gl, panels_for_width
from .smoothfn import (SAFETY, GridSpec, SmoothFunction, certified_seminorm,
                       linear_combination, seminorm_q, tail_certificate)
from .weights import Box

CUTOFF_MAX_ORDER = 6
# below this t, P_k(1/t) exp(-1/t) < 1e-180 for every k <= CUTOFF_MAX_ORDER
_PSI_FLOOR = 1.0 / 700.0


# ---------------------------------------------------------------- cutoff

@lru_cache(maxsize=None)
def _psi_polys(kmax):
    """P_k with psi^(k)(t) = P_k(1/t) exp(-1/t); P_{k+1}(s) = s^2 (P_k - P_k')."""
    polys = [np.polynomial.Polynomial([1.0])]
    s2 = np.polynomial.Polynomial([0.0, 0.0, 1.0])
    for _ in range(kmax):
        p = polys[-1]
        polys.append(s2 * (p - p.deriv()))
    return polys


def psi_derivs(t, kmax):
    """psi^(k)(t) for k = 0..kmax, psi(t) = exp(-1/t) for t > 0, else 0."""
    t = np.asarray(t, dtype=float)
    out = np.zeros((kmax + 1,) + t.shape)
    live = t > _PSI_FLOOR
    s = 1.0 / t[live]
    e = np.exp(-s)
    for k, p in enumerate(_psi_polys(kmax)):
        out[k][live] = p(s) * e
    return out


def transition_derivs(t, kmax):
    """g^(k)(t), k = 0..kmax, for g = psi(t) / (psi(t) + psi(1 - t)).

    g = 0 for t <= 0 and g = 1 for t >= 1, both exactly.
    """
    t = np.asarray(t, dtype=float)
    a = psi_derivs(t, kmax)
    b = psi_derivs(1.0 - t, kmax)
    d = np.array([a[k] + (-1) ** k * b[k] for k in range(kmax + 1)])
    q = np.zeros_like(a)
    for k in range(kmax + 1):
        acc = a[k].copy()
        for j in range(k):
            acc -= comb(k, j) * q[j] * d[k - j]
        q[k] = acc / d[0]
    q[0][t >= 1.0] = 1.0
    q[0][t <= 0.0] = 0.0
    return q


def chi_deriv(k, x):
    """k-th derivative of chi(x) = g(2 - |x|): 1 on [-1, 1], 0 outside (-2, 2)."""
    if k > CUTOFF_MAX_ORDER:
        raise OrderError(f"cutoff derivatives are available up to order {CUTOFF_MAX_ORDER}")
    x = np.asarray(x, dtype=float)
    g = transition_derivs(2.0 - np.abs(x), k)[k]
    return g * (-np.sign(x)) ** k if k else g


def chi(x):
    return chi_deriv(0, x)


@lru_cache(maxsize=None)
def chi_sup(k):
    """Grid sup of |chi^(k)| on [1, 2] times the safety factor."""
    x = np.linspace(1.0, 2.0, 200001)
    return SAFETY * float(np.max(np.abs(chi_deriv(k, x))))


@dataclass(frozen=True)
class CutoffSpec:
    """eta(x/nu) with eta = chi (x) ... (x) chi."""

    nu: float
    dim: int = 1

    def __call__(self, x):
        return self.deriv((0,) * self.dim, x)

    def deriv(self, beta, x):
        pts = as_points(x, self.dim)
        out = np.ones(len(pts))
        for j, b in enumerate(beta):
            out = out * chi_deriv(b, pts[:, j] / self.nu) * self.nu ** (-b)
        return out


# ---------------------------------------------------------------- stage 1

def stage1_cutoff(f, nu):
    """f_nu(x) = f(x) eta(x/nu), derivatives by the Leibniz rule.

    Support is the cube of radius 2nu (or f's own support if smaller).
    """
    if nu <= 0:
        raise ValueError("nu must be positive")
    n = f.dim
    order = min(f.max_order, CUTOFF_MAX_ORDER)
    cut = CutoffSpec(float(nu), n)

    def deriv(alpha, pts):
        out = np.zeros(len(pts))
        inside = np.all(np.abs(pts) < 2 * nu, axis=1)
        if not np.any(inside):
            return out
        p = pts[inside]
        acc = np.zeros(len(p))
        for beta in sub_indices(alpha):
            rest = tuple(a - b for a, b in zip(alpha, beta))
            acc += multi_binom(alpha, beta) * f.deriv(rest, p) * cut.deriv(beta, p)
        out[inside] = acc
        return out

    radius = 2.0 * nu if f.support is None else min(2.0 * nu, f.support.radius)
    env = None
    if f.log_envelope is not None:
        def env(p, r):
            # sum_beta binom(alpha, beta) = 2^|alpha|, nu^-|beta| <= 1 for nu >= 1
            cmax = max(1.0, max(chi_sup(k) for k in range(p + 1)))
            r = np.asarray(r, dtype=float)
            val = f.log_envelope(p, r) + p * log(2.0) + n * log(cmax) + max(0.0, -p * log(nu))
            return np.where(r > radius * sqrt(n), -np.inf, val)

    return SmoothFunction(n, order, deriv, support=Box(radius, n), log_envelope=env,
                          name=f"{f.name}_nu{nu:g}")


def stage1_constant(f, m):
    """Leibniz constant C with |D^alpha f_nu| <= C max_{beta<=alpha} |D^beta f| for |alpha| <= m."""
    cmax = max(1.0, max(chi_sup(k) for k in range(m + 1)))
    return 2.0 ** m * cmax ** f.dim


def stage1_certificate(f, W, m, nu):
    """Bound on q_m(f - f_nu): the difference vanishes on the cube of radius nu,
    and outside it is at most C c_{m+1} exp(-(phi_m - phi_{m+1}))."""
    if f.support is not None and f.support.radius <= nu:
        return 0.0
    c = stage1_constant(f, m) * f.growth_constant(W, m + 1)
    return tail_certificate(f, W, m, nu, c=c)


def stage1_error(f, W, m, nu, points_per_axis=None):
    """Measured q_m(f - f_nu) on a grid covering the transition layer, plus tail."""
    f_nu = stage1_cutoff(f, nu)
    diff = linear_combination([(1.0, f), (-1.0, f_nu)])
    ppa = points_per_axis or (4096 if f.dim == 1 else 256)
    res, tail, r = certified_seminorm(diff, m, m, W, tol=1e-300, radius=2.0 * nu + 1.0,
                                      points_per_axis=ppa)
    return res, tail, r


# ---------------------------------------------------------------- stage 2

def _default_panels_per_unit(lam):
    return max(2.0 * lam, 40.0)


class Mollified(SmoothFunction):
    """(lam^n/A) int_{supp} f_nu(y) H(lam(x - y)) dy by composite Gauss-Legendre."""

    def __init__(self, f_nu, lam, nodes, weights, kern, order):
        self.f_nu = f_nu
        self.lam = lam
        self.nodes = nodes
        self.weights = weights
        self.kern = kern
        self._cache = {}
        self._evals = {}
        n = f_nu.dim
        scale = lam ** n / kern.mass
        l1 = {}
        for alpha in multi_indices(n, order):
            l1[alpha] = float(np.dot(self.weights, np.abs(self._at_nodes(alpha))))
        R = f_nu.support.radius

        def env(p, r):
            r = np.asarray(r, dtype=float)
            top = max(v for a, v in l1.items() if sum(a) <= p)
            d = np.maximum(r / sqrt(n) - R, 0.0)
            with np.errstate(divide="ignore"):
                hb = np.minimum(0.25, 1.0 / (lam * d) ** 2)
            hmax = SAFETY * 0.25 ** (n - 1) * hb
            with np.errstate(divide="ignore"):
                return np.log(scale * top * hmax) if top > 0 else np.full(r.shape, -np.inf)

        super().__init__(n, order, self._eval, support=None, log_envelope=env,
                         name=f"{f_nu.name}_lam{lam:g}")

    def _at_nodes(self, alpha):
        if alpha not in self._cache:
            self._cache[alpha] = self.f_nu.deriv(alpha, self.nodes)
        return self._cache[alpha]

    def _eval(self, alpha, pts):
        # repeated sweeps over the same grid are common (one per degree N)
        key = (alpha, pts.shape, hash(pts.tobytes()))
        hit = self._evals.get(key)
        if hit is None:
            hit = self._quadrature(alpha, pts)
            if len(self._evals) > 16:
                self._evals.clear()
            self._evals[key] = hit
        return hit.copy()

    def _quadrature(self, alpha, pts, chunk=4_000_000):
        vals = self._at_nodes(alpha) * self.weights
        live = vals != 0
        vals, nodes = vals[live], self.nodes[live]
        scale = self.lam ** self.dim / self.kern.mass
        out = np.empty(len(pts))
        step = max(1, chunk // max(1, len(nodes)))
        for i in range(0, len(pts), step):
            p = pts[i:i + step]
            z = self.lam * (p[:, None, :] - nodes[None, :, :])
            hz = K.fejer_h(z.reshape(-1)).reshape(z.shape).prod(axis=2)
            out[i:i + step] = scale * (hz @ vals)
        return out


def stage2_mollify(f_nu, lam, quad=None, q=8, kern=None):
    """Mollify a compactly supported f_nu with the kernel at scale lam.

    Parameters
    ----------
    quad : float, optional
        Quadrature panels per unit length; must be at least 2*lam so that
        each panel is no wider than 0.5/lam.

    Raises
    ------
    ResolutionError
        If a panel is wider than 0.5/lam.
    """
    if lam <= 1:
        raise ValueError("lam must exceed 1")
    if f_nu.support is None:
        raise ValueError("stage 2 needs a compactly supported function")
    quad = _default_panels_per_unit(lam) if quad is None else quad
    if 1.0 / quad > 0.5 / lam * (1 + 1e-12):
        raise ResolutionError(f"panel width {1.0 / quad:g} exceeds 0.5/lam = {0.5 / lam:g}")
    kern = kern or K.fejer_kernel(f_nu.dim)
    R = f_nu.support.radius
    nodes, weights = box_rule(R, f_nu.dim, 1.0 / quad, q)
    return Mollified(f_nu, lam, nodes, weights, kern, f_nu.max_order)


def shifted(f, a):
    """x -> f(x - a); the support box grows to stay centered."""
    a = np.atleast_1d(np.asarray(a, dtype=float))
    support = None if f.support is None else Box(f.support.radius + float(np.max(np.abs(a))), f.dim)
    return SmoothFunction(f.dim, f.max_order, lambda alpha, pts: f.deriv(alpha, pts - a),
                          support=support, name=f"{f.name}_shift")


def stage2_error(f_nu, f_lam, p, pts):
    """max_{|alpha|<=p} max over pts of |D^alpha f_lam - D^alpha f_nu| (unweighted)."""
    pts = as_points(pts, f_nu.dim)
    return max(float(np.max(np.abs(f_lam.deriv(a, pts) - f_nu.deriv(a, pts))))
               for a in multi_indices(f_nu.dim, p))


def near_radius(lam, n):
    """r(lam) = lam^(-2n/(2n+1))."""
    return lam ** (-2.0 * n / (2 * n + 1))


def split_error(f_nu, lam, alpha, x, kern=None, f_lam=None):
    """Near/far decomposition of D^alpha f_{nu,lam}(x) - D^alpha f_nu(x).

    I1 integrates (D^alpha f_nu(y) - D^alpha f_nu(x)) H(lam(x-y)) over
    ||x - y|| < r(lam), I2 over the rest of R^n. In two dimensions the far
    part is the full mollified value minus the near disc; ``f_lam`` reuses
    an existing mollification.
    """
    n = f_nu.dim
    kern = kern or K.fejer_kernel(n)
    x = as_points(x, n)[0]
    alpha = tuple(alpha)
    r = near_radius(lam, n)
    scale = lam ** n / kern.mass
    fx = float(f_nu.deriv(alpha, x)[0])
    width = min(0.5 / lam, r / 4)
    if n == 1:
        a, b = x[0] - r, x[0] + r
        yn, wn = composite_gl(a, b, panels_for_width(a, b, width), 8)
        near = scale * np.dot(wn, (f_nu.deriv(alpha, yn) - fx) * K.fejer_h(lam * (x[0] - yn)))
        R = f_nu.support.radius
        far = 0.0
        for lo, hi in ((-R, min(a, R)), (max(b, -R), R)):
            if hi > lo:
                yf, wf = composite_gl(lo, hi, panels_for_width(lo, hi, 0.5 / lam), 8)
                far += scale * np.dot(wf, f_nu.deriv(alpha, yf) * K.fejer_h(lam * (x[0] - yf)))
        far -= fx * kern.tail_mass(lam * r) / kern.mass
        return float(near), float(far)
    if n != 2:
        raise NotImplementedError("split_error supports n <= 2")
    rr, wr = composite_gl(0.0, r, panels_for_width(0.0, r, width), 8)
    th, wt = composite_gl(0.0, 2 * pi, 64, 8)
    off = np.stack([np.outer(rr, np.cos(th)).ravel(), np.outer(rr, np.sin(th)).ravel()], axis=1)
    w = np.outer(wr * rr, wt).ravel()
    Hv = K.H(lam * off, 2)
    dv = f_nu.deriv(alpha, x - off)
    near = scale * np.dot(w, (dv - fx) * Hv)
    near_f = scale * np.dot(w, dv * Hv)
    f_lam = f_lam or stage2_mollify(f_nu, lam, kern=kern)
    full = float(f_lam.deriv(alpha, x)[0])
    far = full - near_f - fx * kern.tail_mass(lam * r) / kern.mass
    return float(near), float(far)


def k_num(f_nu, m, points_per_axis=None):
    """K_{nu,m} = max_{|beta| <= m+1} sup |D^beta f_nu|: grid sup times the safety factor."""
    R = f_nu.support.radius
    ppa = points_per_axis or (20001 if f_nu.dim == 1 else 401)
    pts = GridSpec(Box(R, f_nu.dim), ppa).points()
    top = max(float(np.max(np.abs(f_nu.deriv(b, pts)))) for b in multi_indices(f_nu.dim, m + 1))
    return SAFETY * top


def split_bounds(f_nu, lam, m, kern=None, K_num=None, tail="analytic"):
    """Bounds for |I1| and |I2| built from C_H, K_{nu,m} and the kernel tail.

    |I1| <= pi^(n/2) sqrt(n) C_H K lam^(-n/(2n+1)) / (A Gamma(n/2 + 1))
    |I2| <= (2 C_H K / A) int_{||u|| > lam^(1/(2n+1))} H(u) du

    With ``tail="analytic"`` the tail integral is replaced by the bound
    n A_1^(n-1) 2 sqrt(n) / R (2/R on the line); ``tail="exact"`` uses the
    computed kernel mass outside the ball.
    """
    n = f_nu.dim
    kern = kern or K.fejer_kernel(n)
    C_H = kern.C_H(m + 1)
    Kv = k_num(f_nu, m) if K_num is None else K_num
    A = kern.mass
    b1 = pi ** (n / 2) * sqrt(n) * C_H * Kv * lam ** (-n / (2 * n + 1)) / (A * gamma(n / 2 + 1))
    R = lam ** (1.0 / (2 * n + 1))
    if tail == "exact":
        t = kern.tail_mass(R)
    else:
        t = n * kern.mass_1d ** (n - 1) * 2 * sqrt(n) / R
    b2 = 2 * C_H * Kv * t / A
    return b1, b2


# ---------------------------------------------------------------- stage 3

def moments(f_nu, max_total_degree, width=0.05, q=16, tol=1e-10):
    """M_beta = int f_nu(y) y^beta dy for |beta| <= max_total_degree.

    The rule is checked against one with half the panel width.

    Raises
    ------
    ResolutionError
        If the two rules disagree at some degree k by more than ``tol``
        times R^k ||f_nu||_1.
    """
    if f_nu.support is None:
        raise ValueError("moments need a compact support")
    n = f_nu.dim
    R = f_nu.support.radius
    betas = multi_indices(n, max_total_degree)

    def compute(w):
        pts, wts = box_rule(R, n, w, q)
        fw = f_nu(pts) * wts
        out = {}
        for beta in betas:
            mono = np.ones(len(pts))
            for j, b in enumerate(beta):
                if b:
                    mono = mono * pts[:, j] ** b
            out[beta] = float(np.dot(fw, mono))
        return out, float(np.sum(np.abs(fw)))

    coarse, _ = compute(width)
    fine, l1 = compute(width / 2)
    # |M_beta| <= R^|beta| ||f_nu||_1, so compare degree by degree on that scale
    for k in range(max_total_degree + 1):
        scale = max(1.0, R) ** k * l1
        worst = max(abs(fine[b] - coarse[b]) for b in betas if sum(b) == k)
        if worst > tol * scale:
            raise ResolutionError(f"moment quadrature unstable at degree {k}: change {worst:.3g}")
    return fine


def stage3_polynomial(f_nu, lam, N, kern=None, mom=None):
    """V_N from the Taylor coefficients of H and the moments of f_nu.

    V_N(x) = (lam^n/A) sum_alpha u_alpha lam^|alpha|
             sum_{k<=alpha} binom(alpha, k) x^k (-1)^|alpha-k| M_{alpha-k}
    """
    n = f_nu.dim
    kern = kern or K.fejer_kernel(n)
    U = kern.taylor(N)
    mom = moments(f_nu, N) if mom is None else mom
    scale = lam ** n / kern.mass
    out = {}
    for alpha, u in U.terms.items():
        c = scale * u * lam ** sum(alpha)
        for k in sub_indices(alpha):
            rest = tuple(a - b for a, b in zip(alpha, k))
            term = c * multi_binom(alpha, k) * (-1) ** sum(rest) * mom[rest]
            out[k] = out.get(k, 0.0) + term
    return MultiPoly(n, out)


def stage3_direct(f_nu, lam, N, x, kern=None, width=0.05, q=16):
    """(lam^n/A) int f_nu(y) U_N(lam(x - y)) dy by direct quadrature."""
    n = f_nu.dim
    kern = kern or K.fejer_kernel(n)
    U = kern.taylor(N)
    pts, wts = box_rule(f_nu.support.radius, n, width, q)
    fw = f_nu(pts) * wts
    x = as_points(x, n)
    scale = lam ** n / kern.mass
    return np.array([scale * np.dot(fw, U(lam * (xi[None, :] - pts))) for xi in x])


@dataclass
class StageReport:
    stage: int
    parameter: float
    measured: float
    bound: float
    seconds: float
    extra: dict = field(default_factory=dict)


@dataclass
class Stage3Curve:
    reports: list
    C1: float
    C2: float
    log_factor: np.ndarray


def _q_diff(f_lam, V, m, W, radius, ppa):
    diff = linear_combination([(1.0, f_lam), (-1.0, V.as_smooth(f"V{V.degree}"))])
    return certified_seminorm(diff, m, m, W, tol=1e-12, radius=radius, points_per_axis=ppa)


def stage3_error_curve(f_nu, lam, m, N_range, W, radius=None, points_per_axis=None,
                       kern=None, f_lam=None):
    """Measured q_m(f_{nu,lam} - V_N) along N_range, with the degree factor
    of the bound and fitted constants C1, C2.

    The bound column is C1 C2^N times the degree factor, with C2 from a
    least-squares fit in log space and C1 raised until every measured point
    lies below.
    """
    n = f_nu.dim
    kern = kern or K.fejer_kernel(n)
    f_lam = f_lam or stage2_mollify(f_nu, lam, kern=kern)
    N_range = list(N_range)
    mom = moments(f_nu, max(N_range))
    radius = radius or f_nu.support.radius + 1.0
    ppa = points_per_axis or (2048 if n == 1 else 128)
    reports = []
    for N in N_range:
        t0 = time.perf_counter()
        V = stage3_polynomial(f_nu, lam, N, kern=kern, mom=mom)
        res, tail, r = _q_diff(f_lam, V, m, W, radius, ppa)
        reports.append(StageReport(3, N, res.value + tail, np.nan, time.perf_counter() - t0,
                                   {"grid": res.value, "tail": tail, "radius": r,
                                    "boundary": res.boundary}))
    Ns = np.array([N for N in N_range if N >= 1])
    lf = np.full(len(N_range), np.nan)
    C1 = C2 = np.nan
    if len(Ns):
        lf_vals = stirling_log_factor(W, m, Ns)
        lf[[i for i, N in enumerate(N_range) if N >= 1]] = lf_vals
        err = np.array([rep.measured for rep, N in zip(reports, N_range) if N >= 1])
        ok = err > 0
        if np.count_nonzero(ok) >= 2:
            resid = np.log(err[ok]) - lf_vals[ok]
            slope, icpt = np.polyfit(Ns[ok], resid, 1)
            C2 = float(np.exp(slope))
            C1 = float(np.exp(np.max(resid - slope * Ns[ok])))
            for rep, N, l in zip(reports, N_range, lf):
                if N >= 1:
                    rep.bound = float(C1 * C2 ** N * np.exp(l))
    return Stage3Curve(reports, C1, C2, lf)


# a bounded ratio sequence shows no sustained growth in a log-log fit
RATIO_SLOPE_TOL = 0.1


@dataclass
class RatioSignature:
    N: np.ndarray
    ratios: np.ndarray
    slope: float


def ratio_signature(Ns, errors, floor=1e-12):
    """r_N = error(N+1) (N+1) / error(N) over consecutive degrees whose
    errors sit above ``floor``, and the slope of log r_N against log(N+1).

    Factorial decay error(N) ~ C^N / N! keeps r_N near C, so the slope is
    close to zero.
    """
    Ns, errors = list(Ns), list(errors)
    keep_N, ratios = [], []
    for i in range(len(Ns) - 1):
        N, e0, e1 = Ns[i], errors[i], errors[i + 1]
        if Ns[i + 1] == N + 1 and e0 >= floor and e1 >= floor:
            keep_N.append(N)
            ratios.append(e1 * (N + 1) / e0)
    keep_N, ratios = np.array(keep_N), np.array(ratios)
    slope = float(np.polyfit(np.log(keep_N + 1.0), np.log(ratios), 1)[0]) if len(ratios) >= 2 else np.nan
    return RatioSignature(keep_N, ratios, slope)


def kernel_remainder_bound(f_nu, lam, N, x, kern=None):
    """Pointwise bound on |f_{nu,lam}(x) - V_N(x)| from the Taylor remainder of H:
    (lam^n/A) ||f_nu||_1 C_H (N+2)^n (lam (||x|| + sqrt(n) R))^(N+1) / (N+1)!."""
    n = f_nu.dim
    kern = kern or K.fejer_kernel(n)
    pts, wts = box_rule(f_nu.support.radius, n, 0.05, 16)
    l1 = float(np.dot(wts, np.abs(f_nu(pts))))
    x = as_points(x, n)
    rad = lam * (np.linalg.norm(x, axis=1) + sqrt(n) * f_nu.support.radius)
    C_H = kern.C_H(0)
    return lam ** n / kern.mass * l1 * C_H * (N + 2) ** n * rad ** (N + 1) / factorial(N + 1)


# ---------------------------------------------------------------- driver

@dataclass
class PipelineResult:
    nu: float
    lam: float
    N: int
    V: MultiPoly
    reports: list
    final_error: float = np.nan
    final_radius: float = np.nan


def _stage2_q(f_nu, f_lam, m, W, ppa):
    diff = linear_combination([(1.0, f_nu), (-1.0, f_lam)])
    return certified_seminorm(diff, m, m, W, tol=1e-12, radius=f_nu.support.radius + 1.0,
                              points_per_axis=ppa)


def pipeline_approximate(f, W, m, eps, nus=range(1, 13), lams=None, nmax=60,
                         points_per_axis=None):
    """Pick nu, lam and N greedily so that each stage costs at most eps/3.

    Returns
    -------
    PipelineResult

    Raises
    ------
    BudgetError
        When no listed nu or lam reaches eps/3, or N exceeds ``nmax``. The
        reports gathered so far are attached as ``err.reports``.
    """
    n = f.dim
    ppa = points_per_axis or (2048 if n == 1 else 128)
    lams = lams or [2.0 * 2 ** k for k in range(10)]
    kern = K.fejer_kernel(n)
    reports = []
    target = eps / 3.0

    def fail(msg):
        err = BudgetError(msg)
        err.reports = reports
        raise err

    nu = None
    for cand in nus:
        t0 = time.perf_counter()
        cert = stage1_certificate(f, W, m, cand)
        reports.append(StageReport(1, cand, np.nan, cert, time.perf_counter() - t0))
        if cert < target:
            nu = cand
            break
    if nu is None:
        fail("no cutoff index meets eps/3")
    f_nu = stage1_cutoff(f, nu)
    res1, tail1, _ = stage1_error(f, W, m, nu)
    reports[-1].measured = res1.value + tail1

    lam = f_lam = None
    for cand in lams:
        t0 = time.perf_counter()
        g = stage2_mollify(f_nu, cand, kern=kern)
        res, tail, _ = _stage2_q(f_nu, g, m, W, ppa)
        reports.append(StageReport(2, cand, res.value + tail, np.nan, time.perf_counter() - t0))
        if res.value + tail < target:
            lam, f_lam = cand, g
            break
    if lam is None:
        fail("no mollification scale meets eps/3")

    mom = moments(f_nu, nmax)
    radius = f_nu.support.radius + 1.0
    for N in range(0, nmax + 1):
        t0 = time.perf_counter()
        V = stage3_polynomial(f_nu, lam, N, kern=kern, mom=mom)
        if not all(np.isfinite(c) for c in V.terms.values()):
            fail(f"coefficients of V_{N} overflow")
        res, tail, _ = _q_diff(f_lam, V, m, W, radius, ppa)
        err = res.value + tail
        reports.append(StageReport(3, N, err, np.nan, time.perf_counter() - t0))
        if err < target:
            out = PipelineResult(nu, lam, N, V, reports)
            final, ftail, fr = verify(f, V, W, m, ppa)
            out.final_error, out.final_radius = final.value + ftail, fr
            return out
    fail(f"degree budget {nmax} exhausted before q_{m} < eps/3")


def verify(f, V, W, m, points_per_axis=None):
    """Certified q_m(f - V) (grid value, tail bound, box radius)."""
    diff = linear_combination([(1.0, f), (-1.0, V.as_smooth())])
    return certified_seminorm(diff, m, m, W, tol=1e-12, points_per_axis=points_per_axis)
