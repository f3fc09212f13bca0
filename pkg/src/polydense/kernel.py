"""The entire kernel h(z) = sin^2(z/2)/z^2, its tensor product H, and Taylor data.

h is nonnegative, even, of exponential type 1, with integral pi. The
Fourier transform of h is supported in [-1, 1], so by Bernstein's inequality
every derivative satisfies |h^(k)| <= sup|h| = 1/4.
"""

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial, gamma, pi

import numpy as np
from scipy.special import sici

from .errors import OrderError
from .multiindex import as_points, multi_indices
from .poly import MultiPoly
from .quadrature import composite_gl

MAX_DERIV = 8
_SERIES_SWITCH = 1e-4
_DERIV_SERIES_SWITCH = 4.0
_SERIES_TERMS = 40


@lru_cache(maxsize=None)
def taylor_coeff(k):
    """Exact coefficient of z^k in h: (-1)^j / (2 (2j+2)!) for k = 2j, 0 for odd k."""
    if k % 2:
        return Fraction(0)
    j = k // 2
    return Fraction((-1) ** j, 2 * factorial(2 * j + 2))


def fejer_h(x):
    """h(x) = sin^2(x/2) / x^2, with a 4-term series for |x| < 1e-4."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = np.abs(x) < _SERIES_SWITCH
    xs = x[small] ** 2
    out[small] = 0.25 + xs * (-1 / 48 + xs * (1 / 1440 - xs / 80640))
    xb = x[~small]
    out[~small] = np.sin(xb / 2) ** 2 / xb ** 2
    return out if out.ndim else float(out)


def fejer_h_deriv(k, x):
    """k-th derivative of h for k <= 8.

    For |x| < 4 the Taylor series is differentiated term by term; beyond, the
    Leibniz rule on (1 - cos x)/2 * x^-2 has no cancellation problem.
    """
    if k > MAX_DERIV:
        raise OrderError(f"kernel derivative oracles stop at order {MAX_DERIV}")
    if k == 0:
        return fejer_h(x)
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = np.abs(x) < _DERIV_SERIES_SWITCH
    xs = x[small]
    acc = np.zeros_like(xs)
    for j in range(_SERIES_TERMS):
        p = 2 * j
        if p < k:
            continue
        c = float(taylor_coeff(p)) * factorial(p) / factorial(p - k)
        acc += c * xs ** (p - k)
    out[small] = acc
    xb = x[~small]
    acc = np.zeros_like(xb)
    for j in range(k + 1):
        # j-th derivative of (1 - cos x)/2 and (k-j)-th of x^-2
        du = 0.5 * (1 - np.cos(xb)) if j == 0 else -0.5 * np.cos(xb + j * pi / 2)
        i = k - j
        dv = (-1) ** i * factorial(i + 1) * xb ** (-2.0 - i)
        acc += comb(k, j) * du * dv
    out[~small] = acc
    return out


def H(x, dim):
    """Tensor product kernel H(x) = prod_j h(x_j)."""
    pts = as_points(x, dim)
    return np.prod(fejer_h(pts), axis=1) if dim > 1 else fejer_h(pts[:, 0])


def H_deriv(alpha, x, dim):
    pts = as_points(x, dim)
    out = np.ones(len(pts))
    for j, a in enumerate(alpha):
        out = out * fejer_h_deriv(a, pts[:, j])
    return out


def tail_mass_1d(R):
    """Exact int_{|u| > R} h(u) du = (1 - cos R)/R + pi/2 - Si(R)."""
    si, _ = sici(R)
    return (1 - np.cos(R)) / R + pi / 2 - si


def kernel_mass(n=1, R=1000.0, panel=1.0, q=16):
    """A = (A_1)^n with A_1 = int_R h, by composite Gauss-Legendre on [-R, R]
    plus the exact tail. The crude tail bound 2/R brackets the same value."""
    x, w = composite_gl(0.0, R, int(np.ceil(R / panel)), q)
    a1 = 2.0 * float(np.dot(w, fejer_h(x))) + tail_mass_1d(R)
    return a1 ** n


def kernel_mass_bracket(R, panel=1.0, q=16):
    """(lower, upper) for A_1 from quadrature on [-R, R] and the tail bound 2/R."""
    x, w = composite_gl(0.0, R, int(np.ceil(R / panel)), q)
    inner = 2.0 * float(np.dot(w, fejer_h(x)))
    return inner, inner + 2.0 / R


@lru_cache(maxsize=None)
def _sup_deriv(k, half_width=50.0, npts=400001):
    x = np.linspace(-half_width, half_width, npts)
    return float(np.max(np.abs(fejer_h_deriv(k, x))))


def estimate_CH(order, n=1, safety=1.05):
    """Certified bound C_H on |D^alpha H| for |alpha| <= order.

    Grid sup over |x| <= 50 of |h^(k)| (each decays like x^-2 beyond),
    combined through the product structure, times ``safety``.
    """
    if order > MAX_DERIV:
        raise OrderError(f"C_H certified only up to order {MAX_DERIV}")
    sups = [_sup_deriv(k) for k in range(order + 1)]
    best = 0.0
    for alpha in multi_indices(n, order):
        best = max(best, float(np.prod([sups[a] for a in alpha])))
    return safety * best


def taylor_U(N, n=1):
    """Degree-N Taylor polynomial of H at 0, from the exact series of h."""
    terms = {}
    for alpha in multi_indices(n, N):
        c = Fraction(1)
        for a in alpha:
            c *= taylor_coeff(a)
        if c:
            terms[alpha] = float(c)
    return MultiPoly(n, terms)


def _series_tails(t, N, kmax):
    """T_k(t) = sum_{j > k} c_j t^j for k = 0..N, as an (N+1, npts) array."""
    coeffs = np.array([float(taylor_coeff(j)) for j in range(kmax + 1)])
    terms = coeffs[None, :] * t[:, None] ** np.arange(kmax + 1)[None, :]
    rev = np.cumsum(terms[:, ::-1], axis=1)[:, ::-1]      # rev[:, j] = sum_{i >= j}
    out = np.zeros((N + 1, len(t)))
    for k in range(N + 1):
        if k + 1 <= kmax:
            out[k] = rev[:, k + 1]
    return out, coeffs


def remainder_series(N, x, n=1, kmax=120):
    """H(x) - U_N(x) summed from Taylor-series tails, without subtracting
    nearly equal numbers.

    In several variables the tail of the product splits as
    sum_{i <= N} c_i x_1^i R_{n-1}(x', N - i) + T_N(x_1) H_{n-1}(x').
    """
    pts = as_points(x, n)
    t = pts[:, 0]
    tails, coeffs = _series_tails(t, N, kmax)
    if n == 1:
        return tails[N]
    rest = pts[:, 1:]
    out = tails[N] * H(rest, n - 1)
    if n == 2:
        inner, _ = _series_tails(rest[:, 0], N, kmax)
        for i in range(0, N + 1, 2):
            out = out + coeffs[i] * t ** i * inner[N - i]
        return out
    for i in range(0, N + 1):
        if coeffs[i]:
            out = out + coeffs[i] * t ** i * remainder_series(N - i, rest, n - 1, kmax)
    return out


def remainder_bound(N, x, C_H, n=1):
    """C_H (N+2)^n ||x||^(N+1) / (N+1)!."""
    r = np.linalg.norm(as_points(x, n), axis=1)
    return C_H * (N + 2) ** n * r ** (N + 1) / factorial(N + 1)


@dataclass(frozen=True)
class KernelSpec:
    """The kernel data used by the approximation stages."""

    dim: int
    mass: float
    mass_1d: float

    def __call__(self, x):
        return H(x, self.dim)

    def deriv(self, alpha, x):
        return H_deriv(alpha, x, self.dim)

    def C_H(self, order):
        return estimate_CH(order, self.dim)

    def taylor(self, N):
        return taylor_U(N, self.dim)

    def tail_mass(self, R):
        """int over ||u|| > R of H(u) du."""
        if self.dim == 1:
            return float(tail_mass_1d(R))
        return self.mass - _disc_mass(R, self.dim)


@lru_cache(maxsize=None)
def _disc_mass(R, dim):
    if dim != 2:
        raise NotImplementedError("ball masses implemented for n <= 2")
    # polar coordinates on the disc of radius R
    rr, wr = composite_gl(0.0, R, max(8, int(np.ceil(R / 0.5))), 16)
    th, wt = composite_gl(0.0, 2 * pi, 64, 16)
    X = rr[:, None] * np.cos(th)[None, :]
    Y = rr[:, None] * np.sin(th)[None, :]
    vals = fejer_h(X) * fejer_h(Y) * rr[:, None]
    return float(wr @ vals @ wt)


def fejer_kernel(n=1):
    a1 = kernel_mass(1)
    return KernelSpec(dim=n, mass=a1 ** n, mass_1d=a1)


def ball_volume_factor(n):
    """pi^(n/2) / Gamma(n/2 + 1)."""
    return pi ** (n / 2) / gamma(n / 2 + 1)
