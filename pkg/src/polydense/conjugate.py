"""Young (Legendre-Fenchel) conjugates of sampled functions.

A sampled function is treated as the piecewise-linear interpolant of its
nodes, so the grid conjugate ``max_i (x*y_i - u_i)`` is the exact conjugate of
that interpolant and a lower bound for the conjugate of the true function.
The fast path walks the lower convex hull of the samples; the brute-force
path is kept as an independent check.
"""

from dataclasses import dataclass
from math import lgamma, log

import numpy as np
from numba import njit

from .errors import RangeError, TruncationError
from .multiindex import sphere_points

HALF_LINE = "half_line"
FULL_LINE = "full_line"


@dataclass(frozen=True)
class SampledFunction1D:
    """A function tabulated on a strictly increasing grid."""

    nodes: np.ndarray
    values: np.ndarray
    domain: str = HALF_LINE

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "values", values)
        if nodes.ndim != 1 or nodes.shape != values.shape:
            raise ValueError("nodes and values must be 1-D arrays of equal length")
        if nodes.size < 1 or np.any(np.diff(nodes) <= 0):
            raise ValueError("nodes must be nonempty and strictly increasing")
        if not np.all(np.isfinite(values)):
            raise ValueError("sampled values must be finite")
        if self.domain not in (HALF_LINE, FULL_LINE):
            raise ValueError(f"unknown domain tag {self.domain!r}")
        if self.domain == HALF_LINE and nodes[0] < 0:
            raise ValueError("half_line samples need nonnegative nodes")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < self.nodes[0]) or np.any(x > self.nodes[-1]):
            raise RangeError(f"evaluation outside sampled range [{self.nodes[0]}, {self.nodes[-1]}]")
        return np.interp(x, self.nodes, self.values)

    @property
    def slopes(self):
        return np.diff(self.values) / np.diff(self.nodes)

    def is_convex(self, rtol=1e-9):
        s = self.slopes
        scale = np.maximum(1.0, np.abs(s[1:]))
        return bool(np.all(np.diff(s) >= -rtol * scale))

    def is_nondecreasing(self, atol=0.0):
        return bool(np.all(np.diff(self.values) >= -atol))


@njit(cache=True)
def _lower_hull(y, u):
    n = y.shape[0]
    idx = np.empty(n, np.int64)
    k = 0
    for i in range(n):
        while k >= 2:
            a = idx[k - 2]
            b = idx[k - 1]
            cross = (y[b] - y[a]) * (u[i] - u[a]) - (u[b] - u[a]) * (y[i] - y[a])
            if cross <= 0.0:
                k -= 1
            else:
                break
        idx[k] = i
        k += 1
    return idx[:k].copy()


def hull_conjugate(nodes, values, x):
    """max_i (x*nodes_i - values_i) via the lower convex hull, O(n + m log n)."""
    x = np.asarray(x, dtype=float)
    idx = _lower_hull(np.ascontiguousarray(nodes, dtype=float),
                      np.ascontiguousarray(values, dtype=float))
    hy, hu = nodes[idx], values[idx]
    if hy.size == 1:
        return x * hy[0] - hu[0]
    slopes = np.diff(hu) / np.diff(hy)
    j = np.searchsorted(slopes, x, side="left")
    return x * hy[j] - hu[j]


def brute_conjugate(nodes, values, x, chunk=2_000_000):
    """max_i (x*nodes_i - values_i) by direct enumeration."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty(x.shape)
    rows = max(1, chunk // nodes.size)
    for s in range(0, x.size, rows):
        xs = x[s:s + rows]
        out[s:s + rows] = np.max(xs[:, None] * nodes[None, :] - values[None, :], axis=1)
    return out


def _tail_thresholds(x):
    x_max, x_min = float(np.max(x)), float(np.min(x))
    return max(2.0 * x_max, x_max), min(2.0 * x_min, x_min)


def tail_certificate_ok(u, x):
    """Whether the end secants of ``u`` certify that maximizers for ``x`` lie in range.

    Right tail: (u(Y) - u(Y/2)) / (Y/2) must exceed 2*max(x). On the full
    line the mirrored condition is imposed on the left tail.
    """
    hi, lo = _tail_thresholds(x)
    Y = u.nodes[-1]
    if Y <= 0:
        return False
    right = (u.values[-1] - np.interp(Y / 2, u.nodes, u.values)) / (Y / 2)
    if not right > hi:
        return False
    if u.domain == FULL_LINE:
        Y0 = u.nodes[0]
        if Y0 >= 0:
            return False
        left = (np.interp(Y0 / 2, u.nodes, u.values) - u.values[0]) / (-Y0 / 2)
        if not left < lo:
            return False
    return True


def young_conjugate(u, x_grid, method="hull", check=True):
    """Grid conjugate u*(x) = max over nodes y of (x*y - u(y)).

    Parameters
    ----------
    u : SampledFunction1D
        Samples of u on [0, Y] (half line) or [Y0, Y] (full line).
    x_grid : array_like
        Increasing evaluation points.
    method : {"hull", "brute"}
    check : bool
        Enforce the superlinearity truncation certificate.

    Returns
    -------
    SampledFunction1D
        Values on ``x_grid``; each is a lower bound of the true conjugate.

    Raises
    ------
    TruncationError
        If the sampled range cannot certify the location of the maximizers.
    """
    x = np.asarray(x_grid, dtype=float)
    if check and not tail_certificate_ok(u, x):
        raise TruncationError(
            f"sampled range [{u.nodes[0]:.6g}, {u.nodes[-1]:.6g}] too short for x in "
            f"[{x.min():.6g}, {x.max():.6g}]")
    if method == "hull":
        vals = hull_conjugate(u.nodes, u.values, x)
    elif method == "brute":
        vals = brute_conjugate(u.nodes, u.values, x)
    else:
        raise ValueError(f"unknown method {method!r}")
    domain = HALF_LINE if x.size and x[0] >= 0 else FULL_LINE
    return SampledFunction1D(x, vals, domain)


def sample_for_conjugate(fn, x_max, x_min=None, domain=HALF_LINE, step=1e-4,
                         y_lin=10.0, y_start=1.0, grow=1.25, max_y=1e20, ratio=None):
    """Sample a callable on a range long enough to certify conjugation.

    Nodes are uniform with spacing ``step`` on [0, y_lin] and geometric with
    ratio 1 + ``ratio`` beyond (default ``step/y_lin``); the range grows until
    the truncation certificate for ``[x_min, x_max]`` holds. Full-line grids
    are mirrored. Candidate ranges are screened with end-point evaluations
    before the full grid is built.
    """
    xs = np.array([x_max if x_min is None else x_min, x_max], dtype=float)
    hi, lo = _tail_thresholds(xs)
    ratio = step / y_lin if ratio is None else ratio

    def ends_ok(Y):
        with np.errstate(over="ignore", invalid="ignore"):
            v = np.asarray(fn(np.array([Y / 2, Y])), dtype=float)
            if not np.all(np.isfinite(v)) or not (v[1] - v[0]) / (Y / 2) > hi:
                return False
            if domain == FULL_LINE:
                w = np.asarray(fn(np.array([-Y, -Y / 2])), dtype=float)
                return bool(np.all(np.isfinite(w)) and (w[1] - w[0]) / (Y / 2) < lo)
        return True

    Y = y_start
    while True:
        if ends_ok(Y):
            nodes = _half_nodes(Y, step, y_lin, ratio)
            if domain == FULL_LINE:
                nodes = np.concatenate([-nodes[:0:-1], nodes])
            with np.errstate(over="ignore", invalid="ignore"):
                vals = np.asarray(fn(nodes), dtype=float)
            if not np.all(np.isfinite(vals)):
                raise TruncationError(f"function is not finite on [0, {Y:.6g}]")
            u = SampledFunction1D(nodes, vals, domain)
            if tail_certificate_ok(u, xs):
                return u
        Y *= grow
        if Y > max_y:
            raise TruncationError(f"no certificate up to y={max_y:g}")


def _half_nodes(Y, step, y_lin, ratio=None):
    lin_end = min(Y, y_lin)
    n_lin = max(2, int(np.ceil(lin_end / step)) + 1)
    lin = np.linspace(0.0, lin_end, n_lin)
    if Y <= y_lin:
        return lin
    ratio = 1.0 + (step / y_lin if ratio is None else ratio)
    n_geo = int(np.ceil(np.log(Y / y_lin) / np.log(ratio)))
    geo = y_lin * ratio ** np.arange(1, n_geo + 1)
    geo[-1] = Y
    return np.concatenate([lin, geo[geo > lin_end]])


def biconjugate(u, y_grid, x_grid, method="hull"):
    """(u*)* on ``y_grid``, with u* sampled on ``x_grid``."""
    ustar = young_conjugate(u, x_grid, method=method)
    ustar = SampledFunction1D(ustar.nodes, ustar.values,
                              HALF_LINE if ustar.nodes[0] >= 0 else FULL_LINE)
    return young_conjugate(ustar, y_grid, method=method)


def exp_compose(u, x_grid):
    """u(e)(x) = u(e^x) by piecewise-linear interpolation of the samples."""
    x = np.asarray(x_grid, dtype=float)
    ex = np.exp(x)
    if np.any(ex > u.nodes[-1] * (1 + 1e-15)) or np.any(ex < u.nodes[0]):
        raise RangeError(f"e^x leaves the sampled range [{u.nodes[0]:.6g}, {u.nodes[-1]:.6g}]")
    return SampledFunction1D(x, np.interp(ex, u.nodes, u.values), HALF_LINE)


def _t_grid(T, t_step):
    return np.linspace(0.0, T, max(3, int(np.ceil(T / t_step)) + 1))


def exp_conjugate(u, x, step=1e-4, t_step=1e-4):
    """(u(e))*(x) = sup_{t>=0} (x*t - u(e^t)).

    ``u`` is a vectorized callable on [0, inf) or a SampledFunction1D.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if isinstance(u, SampledFunction1D):
        T = np.log(u.nodes[-1])
        if not T > 0:
            raise RangeError("samples must extend beyond y = 1")
        ue = exp_compose(u, _t_grid(T, t_step))
    else:
        T = sample_for_conjugate(lambda t: u(np.exp(t)), x.max(), step=0.01, y_lin=np.inf).nodes[-1]
        t = _t_grid(T, t_step)
        ue = SampledFunction1D(t, u(np.exp(t)), HALF_LINE)
    return young_conjugate(ue, x).values


def star_exp_conjugate(u, x, step=1e-4, t_step=1e-4, y_lin=10.0):
    """(u*(e))*(x) = sup_{t>=0} (x*t - u*(e^t)), u* the half-line conjugate."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if isinstance(u, SampledFunction1D):
        # largest t whose e^t still has a certified conjugate
        T = _largest_certified_log(u)
        t = _t_grid(T, t_step)
        ustar = young_conjugate(u, np.exp(t))
    else:
        T = _choose_outer_range(u, x.max())
        t = _t_grid(T, t_step)
        s = np.exp(t)
        samples = sample_for_conjugate(u, s[-1], step=step, y_lin=y_lin)
        ustar = young_conjugate(samples, s)
    ue = SampledFunction1D(t, ustar.values, HALF_LINE)
    return young_conjugate(ue, x).values


def _largest_certified_log(u):
    lo, hi = 0.0, np.log(max(u.nodes[-1], 1.0)) + 1.0
    if not tail_certificate_ok(u, np.array([np.exp(lo)])):
        raise TruncationError("samples too short to conjugate at s = 1")
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if tail_certificate_ok(u, np.array([np.exp(mid)])):
            lo = mid
        else:
            hi = mid
    return lo


def _choose_outer_range(u, x_max, grow=1.25):
    """Smallest T (geometric search) such that t -> u*(e^t) certifies x_max on [0, T]."""
    T = 0.5
    for _ in range(200):
        pts = np.exp(np.array([T / 2, T]))
        coarse = sample_for_conjugate(u, pts[-1], step=1e-3, y_lin=10.0)
        v = hull_conjugate(coarse.nodes, coarse.values, pts)
        if (v[1] - v[0]) / (T / 2) > 2.0 * x_max * 1.05:
            return T
        T *= grow
    raise TruncationError("could not certify the outer conjugate range")


def lemma_gap(u, x, step=1e-4, t_step=1e-4):
    """x*ln(x) - x - (u(e))*(x) - (u*(e))*(x) for x > 0.

    The inequality under test asserts the gap is nonnegative. Grid conjugates
    are lower bounds, so the outer transforms bias the gap upward; only the
    inner u* contributes a downward bias of order step**2.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(x <= 0):
        raise ValueError("lemma_gap needs x > 0")
    a = exp_conjugate(u, x, step=step, t_step=t_step)
    b = star_exp_conjugate(u, x, step=step, t_step=t_step)
    return x * np.log(x) - x - a - b


def directional_weight(W, m, sigma, t_grid):
    """Samples of t -> phi_m(sigma*t), t >= 0, for a unit vector sigma."""
    sigma = np.atleast_1d(np.asarray(sigma, dtype=float))
    if sigma.shape != (W.dim,) or abs(np.linalg.norm(sigma) - 1.0) > 1e-12:
        raise ValueError("sigma must be a unit vector of the family's dimension")
    t = np.asarray(t_grid, dtype=float)
    return SampledFunction1D(t, W(m, t[:, None] * sigma[None, :]), HALF_LINE)


def default_directions(dim):
    """{-1, +1} on the line, 64 equally spaced angles in the plane."""
    return sphere_points(dim, 64)


def stirling_log_factor(W, m, N, sigmas=None, step=1e-3, t_step=1e-3):
    """Natural log of the degree-dependent factor of the final polynomial bound.

    log[(N+1)^(N+1) / (N+1)!] - inf_sigma (phi*_{m,sigma}(e^t))*(N+1).
    Vectorized over ``N``.
    """
    N = np.atleast_1d(np.asarray(N))
    if np.any(N < 1):
        raise ValueError("N >= 1 required")
    if sigmas is None:
        sigmas = default_directions(W.dim)
    k = (N + 1).astype(float)
    worst = np.full(k.shape, np.inf)
    for sigma in np.atleast_2d(sigmas):
        fn = _direction_fn(W, m, sigma)
        worst = np.minimum(worst, star_exp_conjugate(fn, k, step=step, t_step=t_step))
    head = np.array([ki * log(ki) - lgamma(ki + 1.0) for ki in k])
    return head - worst


def _direction_fn(W, m, sigma):
    sigma = np.asarray(sigma, dtype=float)
    return lambda t: W(m, np.asarray(t, dtype=float)[:, None] * sigma[None, :])


def stirling_bound_factor(W, m, N, sigmas=None, step=1e-3, t_step=1e-3):
    """exp of :func:`stirling_log_factor`; scalar in, scalar out."""
    out = np.exp(stirling_log_factor(W, m, N, sigmas, step, t_step))
    return float(out[0]) if np.ndim(N) == 0 else out


def tilde_weight(W, m, x_grid, step=1e-3):
    """Two-sided conjugate sup_{y in R} (x*y - phi_m(y)) of a convex 1-D weight."""
    if W.dim != 1 or not W.convex:
        raise ValueError("tilde_weight needs a convex one-dimensional family")
    x = np.asarray(x_grid, dtype=float)
    u = sample_for_conjugate(lambda y: W(m, y), float(np.max(x)), float(np.min(x)),
                             domain=FULL_LINE, step=step)
    vals = hull_conjugate(u.nodes, u.values, x)
    return SampledFunction1D(x, vals, FULL_LINE)


# Test functions on [0, inf) used by the command line and the acceptance checks.
TEST_FUNCTIONS = {
    "square": lambda y: 0.5 * np.asarray(y) ** 2,
    "exp": lambda y: np.exp(np.asarray(y)),
    "ylog": lambda y: np.asarray(y) * np.log1p(np.asarray(y)),
    "pow15": lambda y: np.abs(np.asarray(y)) ** 1.5,
    # not convex: used for the one-sided biconjugate bound
    "wiggle": lambda y: 0.5 * np.asarray(y) ** 2 + np.sin(3 * np.asarray(y)),
}


def catalogue_function(name):
    try:
        return TEST_FUNCTIONS[name]
    except KeyError:
        raise ValueError(f"unknown test function {name!r}; choose from {sorted(TEST_FUNCTIONS)}") from None
