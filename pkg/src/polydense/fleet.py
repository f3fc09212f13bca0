"""Named test functions with exact derivatives and growth envelopes.

Every member is a tensor product of one-dimensional factors, so
D^alpha f = prod_j g_j^(alpha_j)(x_j).
"""

from functools import lru_cache
from math import comb, factorial, log, sqrt

import numpy as np
from numpy.polynomial import Polynomial
from numpy.polynomial.hermite import hermval

from .smoothfn import SAFETY, SmoothFunction, zero_function
from .weights import Box

# Cramer's bound: |H_k(x)| exp(-x^2/2) <= CRAMER * sqrt(2^k k!)
CRAMER = 1.086435
MAX_ORDER = 12


def _product_deriv(factors):
    def deriv(alpha, pts):
        out = np.ones(len(pts))
        for j, (g, a) in enumerate(zip(factors, alpha)):
            out = out * g(a, pts[:, j])
        return out
    return deriv


def gauss_1d(k, x):
    """k-th derivative of exp(-x^2)."""
    c = np.zeros(k + 1)
    c[k] = 1.0
    return (-1) ** k * hermval(x, c) * np.exp(-x * x)


def _log_gauss_const(p):
    return log(CRAMER) + 0.5 * (p * log(2.0) + sum(log(i) for i in range(1, p + 1)))


def gaussian(n=1):
    """exp(-||x||^2)."""
    def env(p, r):
        return n * log(CRAMER) + (_log_gauss_const(p) - log(CRAMER)) - 0.5 * np.asarray(r) ** 2

    return SmoothFunction(n, MAX_ORDER, _product_deriv([gauss_1d] * n),
                          log_envelope=env, name="gaussian")


def cosh_1d(k, x):
    return np.cosh(x) if k % 2 == 0 else np.sinh(x)


def cosh_fn(n=1):
    """prod_j cosh(x_j)."""
    def env(p, r):
        return sqrt(n) * np.asarray(r, dtype=float)

    return SmoothFunction(n, MAX_ORDER, _product_deriv([cosh_1d] * n),
                          log_envelope=env, name="cosh")


def sin_gauss_1d(k, x):
    """k-th derivative of sin(x) exp(-x^2) by the Leibniz rule."""
    out = np.zeros_like(x, dtype=float)
    for j in range(k + 1):
        out += comb(k, j) * np.sin(x + j * np.pi / 2) * gauss_1d(k - j, x)
    return out


def sin_gaussian(n=1):
    """sin(x_1) exp(-||x||^2)."""
    def env(p, r):
        s = max(sum(comb(k, j) * np.exp(_log_gauss_const(k - j)) for j in range(k + 1))
                for k in range(p + 1))
        return log(s) + (n - 1) * log(CRAMER) + (_log_gauss_const(p) - log(CRAMER)) \
            - 0.5 * np.asarray(r) ** 2

    factors = [sin_gauss_1d] + [gauss_1d] * (n - 1)
    return SmoothFunction(n, MAX_ORDER, _product_deriv(factors), log_envelope=env,
                          name="sin_gaussian")


@lru_cache(maxsize=None)
def _bump_polys(kmax):
    one_minus = Polynomial([1.0, 0.0, -1.0])
    x = Polynomial([0.0, 1.0])
    polys = [Polynomial([1.0])]
    for k in range(kmax):
        P = polys[-1]
        polys.append(P.deriv() * one_minus ** 2 + 4 * k * x * one_minus * P - 2 * x * P)
    return polys


def bump_1d(k, x):
    """k-th derivative of exp(-1/(1-x^2)) on (-1, 1), zero outside."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = np.abs(x) < 1.0
    xi = x[inside]
    w = 1.0 - xi * xi
    with np.errstate(under="ignore"):
        out[inside] = _bump_polys(k)[k](xi) * np.exp(-1.0 / w - 2 * k * np.log(w))
    return out


@lru_cache(maxsize=None)
def bump_sup(k):
    """Grid sup of |bump^(k)| on (-1, 1) times a safety factor."""
    x = np.linspace(-1, 1, 200001)[1:-1]
    return SAFETY * float(np.max(np.abs(bump_1d(k, x))))


def bump(n=1):
    """prod_j exp(-1/(1-x_j^2)), supported in the unit cube."""
    def env(p, r):
        r = np.asarray(r, dtype=float)
        top = max(max(bump_sup(k) for k in range(p + 1)), 1.0) ** n
        return np.where(r < sqrt(n), log(top), -np.inf)

    return SmoothFunction(n, MAX_ORDER, _product_deriv([bump_1d] * n), support=Box(1.0, n),
                          log_envelope=env, name="bump")


def polynomial(coeffs=(1.0, -2.0, 0.0, 1.0), n=1):
    """prod_j p(x_j) with p given by ascending coefficients."""
    base = Polynomial(coeffs)
    derivs = [base.deriv(k) if k else base for k in range(MAX_ORDER + 1)]
    deg = base.degree()
    scale = sum(abs(c) for c in coeffs) * max(1, factorial(deg))

    def g(k, x):
        return derivs[k](x)

    def env(p, r):
        return n * log(scale) + n * deg * np.log1p(np.asarray(r, dtype=float))

    return SmoothFunction(n, MAX_ORDER, _product_deriv([g] * n), log_envelope=env,
                          name="polynomial")


FLEET = {
    "gaussian": gaussian,
    "cosh": cosh_fn,
    "sin_gaussian": sin_gaussian,
    "bump": bump,
    "polynomial": polynomial,
    "zero": lambda n=1: zero_function(n),
}


def make_function(name, n=1, **kwargs):
    try:
        return FLEET[name](n=n, **kwargs)
    except KeyError:
        raise ValueError(f"unknown fleet function {name!r}; choose from {sorted(FLEET)}") from None
