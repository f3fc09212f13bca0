"""Smooth functions with derivative oracles and weighted seminorms q_{p,m}."""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import CertificateError, OrderError
from .multiindex import as_points, multi_indices, shell_points
from .weights import Box

SAFETY = 1.05


class SmoothFunction:
    """A function on R^dim with exact derivative oracles up to ``max_order``.

    Parameters
    ----------
    dim : int
    max_order : int
    deriv : callable
        ``deriv(alpha, pts)`` with ``alpha`` a tuple and ``pts`` of shape
        (npts, dim); returns D^alpha f at the points.
    support : Box, optional
        f and all its derivatives vanish outside this cube.
    log_envelope : callable, optional
        ``log_envelope(p, r)``: log of an upper bound for
        max_{|alpha|<=p} |D^alpha f(x)| over ||x|| = r (vectorized in r).
    growth_certificate : mapping or callable, optional
        Explicit constants c_m with |D^alpha f| <= c_m theta_m for |alpha| <= m.
    """

    def __init__(self, dim, max_order, deriv, support=None, log_envelope=None,
                 growth_certificate=None, name="f"):
        self.dim = dim
        self.max_order = max_order
        self._deriv = deriv
        self.support = support
        self.log_envelope = log_envelope
        self.growth_certificate = growth_certificate
        self.name = name

    def __repr__(self):
        return f"SmoothFunction({self.name!r}, dim={self.dim}, max_order={self.max_order})"

    def __call__(self, x):
        return self.deriv((0,) * self.dim, x)

    def deriv(self, alpha, x):
        alpha = tuple(int(a) for a in np.atleast_1d(alpha))
        if len(alpha) != self.dim:
            raise ValueError(f"multi-index {alpha} does not match dim {self.dim}")
        if sum(alpha) > self.max_order:
            raise OrderError(f"{self.name}: order {sum(alpha)} exceeds max_order {self.max_order}")
        return np.asarray(self._deriv(alpha, as_points(x, self.dim)), dtype=float)

    def growth_constant(self, W, m):
        """c_m such that |D^alpha f| <= c_m * theta_m for |alpha| <= m."""
        gc = self.growth_certificate
        if gc is not None:
            return float(gc(W, m) if callable(gc) else gc[m])
        if self.log_envelope is None:
            raise CertificateError(f"{self.name} carries no growth information")
        return SAFETY * float(np.exp(radial_log_sup(self.log_envelope, W, m, m, 0.0)))

    def __add__(self, other):
        return linear_combination([(1.0, self), (1.0, other)])

    def __sub__(self, other):
        return linear_combination([(1.0, self), (-1.0, other)])

    def __rmul__(self, c):
        return linear_combination([(float(c), self)])

    def __neg__(self):
        return linear_combination([(-1.0, self)])


def zero_function(dim=1, max_order=64):
    return SmoothFunction(dim, max_order, lambda alpha, pts: np.zeros(len(pts)),
                          support=None, log_envelope=lambda p, r: np.full(np.shape(r), -np.inf),
                          name="zero")


def linear_combination(terms):
    """sum_i c_i f_i as a SmoothFunction; envelopes and supports combine."""
    terms = [(float(c), f) for c, f in terms]
    dim = terms[0][1].dim
    if any(f.dim != dim for _, f in terms):
        raise ValueError("dimension mismatch")
    order = min(f.max_order for _, f in terms)

    def deriv(alpha, pts):
        out = np.zeros(len(pts))
        for c, f in terms:
            if c != 0.0:
                out += c * f._deriv(alpha, pts)
        return out

    support = None
    if all(f.support is not None for _, f in terms):
        support = Box(max(f.support.radius for _, f in terms), dim)
    env = None
    if all(f.log_envelope is not None or c == 0.0 for c, f in terms):
        live = [(c, f) for c, f in terms if c != 0.0]

        def env(p, r):
            r = np.asarray(r, dtype=float)
            acc = np.full(r.shape, -np.inf)
            for c, f in live:
                acc = np.logaddexp(acc, np.log(abs(c)) + f.log_envelope(p, r))
            return acc

    name = " + ".join(f"{c:g}*{f.name}" for c, f in terms)
    return SmoothFunction(dim, order, deriv, support=support, log_envelope=env, name=name)


def radial_log_sup(log_env, W, p, m, r_min, r_far=None):
    """log sup_{r >= r_min} envelope(p, r) / exp(min_{||x||=r} phi_m).

    The search range doubles until the log-ratio at its far end has dropped
    40 units below the running maximum.
    """
    r_hi = max(2.0 * r_min, 4.0) if r_far is None else r_far
    for _ in range(40):
        r = np.concatenate([[r_min], r_min + (r_hi - r_min) * np.linspace(0, 1, 8001)[1:] ** 2])
        vals = log_env(p, r) - W.sphere_min(m, r)
        top = np.max(vals)
        if top == -np.inf:
            return -np.inf
        if vals[-1] < top - 40 and vals[-1] <= vals[-2]:
            return float(top)
        r_hi *= 2
    raise CertificateError("weighted envelope does not decay; the weight may be too weak")


@dataclass(frozen=True)
class GridSpec:
    """Cell-centered tensor grid on a cube."""

    box: Box
    points_per_axis: int

    def __post_init__(self):
        if self.points_per_axis < 3:
            raise ValueError("need at least 3 points per axis")

    @property
    def axis(self):
        r, k = self.box.radius, self.points_per_axis
        return -r + (np.arange(k) + 0.5) * (2 * r / k)

    def points(self):
        ax = self.axis
        if self.box.dim == 1:
            return ax[:, None]
        mesh = np.meshgrid(*([ax] * self.box.dim), indexing="ij")
        return np.stack([g.ravel() for g in mesh], axis=1)

    def boundary_mask(self):
        k = self.points_per_axis
        idx = np.arange(k)
        edge = (idx == 0) | (idx == k - 1)
        if self.box.dim == 1:
            return edge
        mesh = np.meshgrid(*([edge] * self.box.dim), indexing="ij")
        return np.any(np.stack([g.ravel() for g in mesh], axis=1), axis=1)


def default_grid(radius, dim):
    return GridSpec(Box(radius, dim), 2048 if dim == 1 else 256)


@dataclass
class SeminormResult:
    value: float
    boundary: float
    argmax: np.ndarray
    alpha: tuple

    def __float__(self):
        return float(self.value)


def seminorm_q(f, p, m, W, grid, pts=None):
    """Grid value of q_{p,m}(f) = sup_{x, |alpha|<=p} |D^alpha f(x)| / theta_m(x).

    Ratios are formed as exp(log|D^alpha f| - phi_m). The maximum over the
    outermost cell layer is returned alongside, to judge truncation.
    """
    if p > f.max_order:
        raise OrderError(f"seminorm order {p} exceeds max_order {f.max_order} of {f.name}")
    if pts is None:
        pts = grid.points()
    logw = W(m, pts)
    best = np.full(len(pts), -np.inf)
    best_alpha = np.zeros(len(pts), dtype=int)
    alphas = multi_indices(f.dim, p)
    for i, alpha in enumerate(alphas):
        with np.errstate(divide="ignore"):
            la = np.log(np.abs(f.deriv(alpha, pts))) - logw
        upd = la > best
        best[upd] = la[upd]
        best_alpha[upd] = i
    j = int(np.argmax(best))
    value = float(np.exp(best[j]))
    mask = grid.boundary_mask()
    boundary = float(np.exp(np.max(best[mask])))
    return SeminormResult(value, boundary, pts[j].copy(), alphas[best_alpha[j]])


def envelope_tail(f, W, m, p, radius):
    """Bound on sup_{x outside Pi_radius, |alpha|<=p} |D^alpha f| / theta_m."""
    if f.support is not None and radius >= f.support.radius:
        return 0.0
    if f.log_envelope is None:
        raise CertificateError(f"{f.name}: no envelope for a tail bound")
    return float(np.exp(radial_log_sup(f.log_envelope, W, p, m, radius)))


def certified_seminorm(f, p, m, W, tol=1e-10, radius=None, points_per_axis=None):
    """Grid value of q_{p,m}(f) on a cube grown until the tail bound is below tol.

    Returns
    -------
    (SeminormResult, tail, radius)
        The true seminorm lies in [value, value + tail] up to grid resolution.
    """
    r = radius if radius is not None else (f.support.radius if f.support is not None else 2.0)
    while True:
        tail = envelope_tail(f, W, m, p, r)
        if tail < tol:
            break
        r *= 1.5
    ppa = points_per_axis or (2048 if f.dim == 1 else 256)
    res = seminorm_q(f, p, m, W, GridSpec(Box(r, f.dim), ppa))
    return res, tail, r


def tail_certificate(f, W, m, r, c=None, check_radii=(1.0, 1.25, 1.5, 2.0, 3.0, 4.0, 8.0, 16.0)):
    """Upper bound c_{m+1} * exp(-min_{||x||_inf=r} (phi_m - phi_{m+1})(x)).

    Bounds sup_{x outside Pi_r, |alpha|<=m} |D^alpha f(x)| / theta_m(x) when the
    gap phi_m - phi_{m+1} does not decrease outward from the shell.

    Raises
    ------
    CertificateError
        If the shell minima of the gap are not nondecreasing in the radius.
    """
    mins = []
    for s in check_radii:
        pts = shell_points(r * s, W.dim)
        mins.append(np.min(W(m, pts) - W(m + 1, pts)))
    mins = np.array(mins)
    if np.any(np.diff(mins) < -1e-12 * np.maximum(1.0, np.abs(mins[1:]))):
        raise CertificateError(f"phi_{m} - phi_{m + 1} is not increasing beyond r={r}")
    if c is None:
        c = f.growth_constant(W, m + 1)
    return float(c * np.exp(-mins[0]))


def fd_check(f, alpha, x, step):
    """|D^alpha f(x) - Richardson-extrapolated central difference of D^(alpha-e_j) f|.

    The difference is taken along the first coordinate j with alpha_j > 0;
    the extrapolated error is O(step**4).
    """
    alpha = tuple(np.atleast_1d(alpha))
    j = next(i for i, a in enumerate(alpha) if a > 0)
    lower = list(alpha)
    lower[j] -= 1
    lower = tuple(lower)
    x = as_points(x, f.dim)[0]
    e = np.zeros(f.dim)
    e[j] = 1.0

    def central(h):
        plus = f.deriv(lower, x + h * e)[0]
        minus = f.deriv(lower, x - h * e)[0]
        return (plus - minus) / (2 * h)

    fd = (4 * central(step / 2) - central(step)) / 3
    return abs(float(f.deriv(alpha, x)[0]) - fd)
