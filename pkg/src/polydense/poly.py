"""Sparse multivariate polynomials keyed by multi-index."""

from math import log

import numpy as np

from .multiindex import as_points


class MultiPoly:
    """Polynomial sum_alpha c_alpha x^alpha in ``dim`` variables.

    Zero coefficients are never stored.

    >>> p = MultiPoly(1, {(0,): 0.25, (2,): -1 / 48})
    >>> p.degree
    2
    """

    def __init__(self, dim, terms=None):
        self.dim = dim
        self.terms = {}
        for alpha, c in (terms or {}).items():
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != dim:
                raise ValueError(f"multi-index {alpha} does not match dim {dim}")
            if c != 0:
                self.terms[alpha] = self.terms.get(alpha, 0.0) + float(c)
        self.terms = {a: c for a, c in self.terms.items() if c != 0}

    @classmethod
    def zero(cls, dim):
        return cls(dim)

    @property
    def degree(self):
        return max((sum(a) for a in self.terms), default=0)

    def coefficient(self, alpha):
        return self.terms.get(tuple(alpha), 0.0)

    def __repr__(self):
        return f"MultiPoly(dim={self.dim}, degree={self.degree}, nterms={len(self.terms)})"

    def __call__(self, x):
        pts = as_points(x, self.dim)
        out = np.zeros(len(pts))
        if not self.terms:
            return out
        deg = self.degree
        powers = [np.vander(pts[:, j], deg + 1, increasing=True) for j in range(self.dim)]
        for alpha, c in self.terms.items():
            term = np.full(len(pts), c)
            for j, a in enumerate(alpha):
                if a:
                    term = term * powers[j][:, a]
            out += term
        return out

    def derivative(self, alpha):
        alpha = tuple(alpha)
        out = {}
        for beta, c in self.terms.items():
            if all(b >= a for a, b in zip(alpha, beta)):
                factor = 1.0
                for a, b in zip(alpha, beta):
                    for i in range(a):
                        factor *= b - i
                key = tuple(b - a for a, b in zip(alpha, beta))
                out[key] = out.get(key, 0.0) + c * factor
        return MultiPoly(self.dim, out)

    def __add__(self, other):
        out = dict(self.terms)
        for a, c in other.terms.items():
            out[a] = out.get(a, 0.0) + c
        return MultiPoly(self.dim, out)

    def __neg__(self):
        return MultiPoly(self.dim, {a: -c for a, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, c):
        return MultiPoly(self.dim, {a: c * v for a, v in self.terms.items()})

    __rmul__ = __mul__

    def log_envelope(self, p, r):
        """log of sum_beta |c_beta| |beta|^p (1 + r)^|beta|, which bounds
        max_{|alpha|<=p} |D^alpha P(x)| for ||x|| <= r."""
        r = np.asarray(r, dtype=float)
        acc = np.full(r.shape, -np.inf)
        for beta, c in self.terms.items():
            k = sum(beta)
            acc = np.logaddexp(acc, log(abs(c)) + p * log(max(k, 1)) + k * np.log1p(r))
        return acc

    def as_smooth(self, name="poly"):
        """Wrap as a SmoothFunction with exact derivatives."""
        from .smoothfn import SmoothFunction

        def deriv(alpha, pts):
            return self.derivative(alpha)(pts)

        return SmoothFunction(self.dim, 10 ** 6, deriv, log_envelope=self.log_envelope, name=name)
