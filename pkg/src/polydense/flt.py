"""Fourier-Laplace transforms of point-derivative functionals and growth
norms of entire functions against the conjugate weights phi~_m.

For F(f) = sum_j c_j f^(k_j)(a_j) the transform is
F^(lam) = F(exp(-i lam x)) = sum_j c_j (-i lam)^k_j exp(-i lam a_j).
"""

from dataclasses import dataclass, field
from math import factorial
from typing import Callable

import numpy as np

from .conjugate import tilde_weight

FINITE = "FINITE"
DIVERGENT = "DIVERGENT"


@dataclass(frozen=True)
class DiscreteFunctional:
    """F(f) = sum c * f^(k)(a) over ``terms`` of (c, k, a)."""

    terms: tuple = ()

    def __post_init__(self):
        clean = []
        for c, k, a in self.terms:
            if int(k) != k or k < 0:
                raise ValueError(f"derivative order must be a nonnegative integer, got {k}")
            clean.append((complex(c), int(k), float(a)))
        object.__setattr__(self, "terms", tuple(clean))

    @property
    def order(self):
        return max((k for _, k, _ in self.terms), default=0)

    @property
    def reach(self):
        return max((abs(a) for _, _, a in self.terms), default=0.0)

    def __call__(self, f):
        """Apply to a one-dimensional SmoothFunction."""
        total = 0j
        for c, k, a in self.terms:
            total += c * float(f.deriv((k,), np.array([a]))[0])
        return total

    def on_monomial(self, j):
        """F(x^j) in closed form."""
        total = 0j
        for c, k, a in self.terms:
            if k <= j:
                total += c * factorial(j) / factorial(j - k) * a ** (j - k)
        return total

    def __add__(self, other):
        return DiscreteFunctional(self.terms + other.terms)

    def __rmul__(self, s):
        return DiscreteFunctional(tuple((s * c, k, a) for c, k, a in self.terms))

    def __neg__(self):
        return (-1) * self

    @property
    def is_real(self):
        return all(c.imag == 0 for c, _, _ in self.terms)


def delta(a=0.0, k=0, c=1.0):
    """c * f^(k)(a)."""
    return DiscreteFunctional(((c, k, a),))


@dataclass(frozen=True)
class EntireSample:
    """An entire function given by an evaluator (entireness is declared, not checked)."""

    fn: Callable
    name: str = "g"
    source: object = None

    def __call__(self, lam):
        return np.asarray(self.fn(np.asarray(lam, dtype=complex)), dtype=complex)

    def __add__(self, other):
        return EntireSample(lambda z: self(z) + other(z), f"{self.name}+{other.name}")

    def __rmul__(self, s):
        return EntireSample(lambda z: s * self(z), f"{s}*{self.name}")


ZERO = EntireSample(lambda z: np.zeros_like(z), "0")


def flt_transform(F):
    """Closed-form Fourier-Laplace transform of a DiscreteFunctional."""
    terms = F.terms

    def fn(lam):
        out = np.zeros(np.shape(lam), dtype=complex)
        for c, k, a in terms:
            out += c * (-1j * lam) ** k * np.exp(-1j * lam * a)
        return out

    return EntireSample(fn, "F^", source=F)


def transform_deriv_at_zero(F, j):
    """d^j/dlam^j F^(0) from the product of the series of (-i lam)^k and
    exp(-i lam a): only the lam^(j-k) coefficient of the exponential survives."""
    total = 0j
    for c, k, a in F.terms:
        if k <= j:
            coeff = (-1j) ** k * (-1j * a) ** (j - k) / factorial(j - k)
            total += c * coeff * factorial(j)
    return total


def cauchy_deriv(g, j, radius=1.0, points=128):
    """g^(j)(0) = j!/(2 pi i) contour integral of g(z)/z^(j+1), trapezoid rule."""
    th = 2 * np.pi * np.arange(points) / points
    z = radius * np.exp(1j * th)
    return factorial(j) * np.mean(g(z) * np.exp(-1j * j * th)) / radius ** j


@dataclass
class MomentCheck:
    k: int
    direct: complex
    closed_form: complex
    contour: complex
    residual_closed: float
    residual_contour: float


def moment_check(F, k, radius=1.0, points=128):
    """|F(x^k) - i^k F^^(k)(0)| by the closed-form derivative and by a Cauchy
    contour integral of the transform."""
    if k > 6:
        raise ValueError("moment checks are provided for k <= 6")
    direct = F.on_monomial(k)
    cf = (1j) ** k * transform_deriv_at_zero(F, k)
    ct = (1j) ** k * cauchy_deriv(flt_transform(F), k, radius, points)
    return MomentCheck(k, direct, cf, ct, abs(direct - cf), abs(direct - ct))


def hermitian_residual(g, re, im):
    """max |g(-conj z) - conj g(z)| on the grid re x im."""
    Z = re[None, :] + 1j * im[:, None]
    return float(np.max(np.abs(g(-np.conj(Z)) - np.conj(g(Z)))))


@dataclass
class GrowthNorm:
    """Grid value of N_m and the data needed to judge it."""

    value: float
    argmax: complex
    boundary: float
    verdict: str
    R: float
    Y: float
    history: list = field(default_factory=list)

    def __float__(self):
        return float(self.value)


@dataclass(frozen=True)
class Rectangle:
    """[-R, R] x [-Y, Y] sampled with (points x points) nodes, 0 included."""

    R: float = 8.0
    Y: float = 8.0
    points: int = 201

    def grid(self):
        k = self.points if self.points % 2 else self.points + 1
        return np.linspace(-self.R, self.R, k), np.linspace(-self.Y, self.Y, k)


def _log_ratio(g, m, W, re, im, phi_tilde=None, weight_index=None):
    Z = re[None, :] + 1j * im[:, None]
    with np.errstate(divide="ignore"):
        lg = np.log(np.abs(g(Z)))
    wi = max(m, 1) if weight_index is None else weight_index
    pt = phi_tilde if phi_tilde is not None else tilde_weight(W, wi, im).values
    return lg - m * np.log1p(np.abs(Z)) - pt[:, None]


def growth_norm(g, m, W, rect=None, doublings=6, growth=1.5, tilde=None, weight_index=None):
    """N_m(g) = sup_z |g(z)| / ((1 + |z|)^m exp(phi~_m(Im z))) on rectangles.

    The rectangle is doubled until the maximum is interior. When the
    boundary maximum grows by at least ``growth`` on each of two consecutive
    doublings the verdict is DIVERGENT; otherwise FINITE with the grid sup.

    Parameters
    ----------
    tilde : callable, optional
        ``tilde(m, y)`` giving phi~_m(y); defaults to the numerical two-sided
        conjugate of the convex one-dimensional family ``W``.
    weight_index : int, optional
        Index of the weight in the exponential factor; defaults to
        max(m, 1), so that m = 0 measures polynomial growth alone against a
        family indexed from 1.
    """
    rect = rect or Rectangle()
    R, Y = rect.R, rect.Y
    history = []
    best = None
    for _ in range(doublings + 1):
        re, im = Rectangle(R, Y, rect.points).grid()
        pt = tilde(m, im) if tilde is not None else None
        lr = _log_ratio(g, m, W, re, im, pt, weight_index)
        i, j = np.unravel_index(int(np.argmax(lr)), lr.shape)
        top = float(np.exp(lr[i, j]))
        edge = np.concatenate([lr[0], lr[-1], lr[:, 0], lr[:, -1]])
        bnd = float(np.exp(np.max(edge)))
        interior = 0 < i < lr.shape[0] - 1 and 0 < j < lr.shape[1] - 1 and bnd < top
        history.append((R, Y, top, bnd))
        best = GrowthNorm(top, complex(re[j], im[i]), bnd, FINITE, R, Y, history)
        if interior:
            return best
        if len(history) >= 3:
            b = [h[3] for h in history[-3:]]
            if b[1] >= growth * b[0] and b[2] >= growth * b[1]:
                best.verdict = DIVERGENT
                best.value = np.inf
                return best
        R, Y = 2 * R, 2 * Y
    return best


def p_space_norm(gs, m, c, W, rect=None, tilde=None):
    """||g||_m = max_k N_m(g_k) / c_k^(m) over a finite sequence g_1, ..., g_K."""
    top = 0.0
    for k, g in enumerate(gs, start=1):
        if g is ZERO:
            continue
        nm = growth_norm(g, m, W, rect, tilde=tilde)
        if nm.verdict == DIVERGENT:
            return np.inf
        top = max(top, nm.value / c(k, m))
    return top


def functional_fleet():
    """Ten point-derivative functionals of order <= 2 with points in [-1, 1]."""
    return {
        "delta0": delta(0.0),
        "delta1": delta(1.0),
        "delta_pm1": delta(1.0) + delta(-1.0),
        "d1_at0": delta(0.0, 1),
        "d2_at_half": delta(0.5, 2),
        "mix": 2.0 * delta(0.3) + delta(-0.7, 1, -1.0),
        "diff_quot": 10.0 * delta(0.05) + (-10.0) * delta(-0.05),
        "complex": delta(0.2, 0, 1 + 2j) + delta(-0.4, 1, 0.5j),
        "second_diff": delta(0.1) + delta(-0.1) + (-2.0) * delta(0.0),
        "cancel": delta(0.0, 1) + delta(0.0, 1, -1.0),
    }
