"""Weighted sequence spaces of smooth functions.

For weights c_k^(m) > 0 with K_m = sum_k c_k^(m)/c_k^(m+1) finite, a
finitely supported sequence f = (f_1, f_2, ...) has the seminorm
p_m(f) = sum_k c_k^(m) q_m(f_k).
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DivergenceWarning
from .flt import DiscreteFunctional
from .multiindex import multi_indices
from .smoothfn import certified_seminorm, seminorm_q


@dataclass(frozen=True)
class SeqWeightFamily:
    """c_k^(m) given as log c_k^(m) to avoid overflow at large k m."""

    kind: str
    log_fn: object

    def __call__(self, k, m):
        return float(np.exp(self.log_fn(k, m)))

    def log(self, k, m):
        return self.log_fn(k, m)

    def ratio(self, k, m):
        """c_k^(m) / c_k^(m+1)."""
        return np.exp(self.log_fn(k, m) - self.log_fn(k, m + 1))


def make_seq_weights(kind="geometric"):
    """``geometric``: c_k^(m) = 2^(k m); ``power``: c_k^(m) = k^m."""
    if kind == "geometric":
        return SeqWeightFamily(kind, lambda k, m: k * m * np.log(2.0))
    if kind == "power":
        return SeqWeightFamily(kind, lambda k, m: m * np.log(k))
    raise ValueError(f"unknown sequence weight kind {kind!r}")


@dataclass
class KmResult:
    value: float
    depth: int
    tail: float
    converged: bool

    @property
    def upper(self):
        return self.value + self.tail


def km_sum(c, m, tol=1e-12, probe=64, max_depth=100_000):
    """K_m = sum_k c_k^(m)/c_k^(m+1) with a geometric tail bound.

    With r_k the terms and q the largest ratio r_{j+1}/r_j over the last
    ``probe`` steps, the tail after depth K is at most r_K q/(1-q) when
    q < 1. Summation stops once that bound is below ``tol``. If the bound
    fails to halve across a probe window the ratio test is declared failed:
    a DivergenceWarning is issued and the tail is reported as infinite.
    """
    total = 0.0
    ratios = []
    bounds = []
    r_prev = None
    for k in range(1, max_depth + 1):
        r = float(c.ratio(k, m))
        total += r
        if r_prev is not None:
            ratios.append(r / r_prev if r_prev > 0 else np.inf)
        r_prev = r
        if len(ratios) < 2:
            continue
        q = max(ratios[-probe:])
        bound = r * q / (1 - q) if q < 1 else np.inf
        bounds.append(bound)
        if bound < tol:
            return KmResult(total, k, bound, True)
        if len(bounds) > probe and not bounds[-1] <= 0.5 * bounds[-1 - probe]:
            warnings.warn(f"ratio test fails for {c.kind} weights at depth {k}",
                          DivergenceWarning, stacklevel=2)
            return KmResult(total, k, np.inf, False)
    warnings.warn("K_m did not settle within max_depth", DivergenceWarning, stacklevel=2)
    return KmResult(total, max_depth, np.inf, False)


@dataclass
class FnSequence:
    """Finitely supported sequence k -> f_k (k >= 1); missing entries are zero."""

    entries: dict = field(default_factory=dict)

    def __post_init__(self):
        if any(int(k) != k or k < 1 for k in self.entries):
            raise ValueError("sequence indices start at 1")

    @property
    def support(self):
        return sorted(self.entries)

    def component(self, k):
        """The k-th entry f_k, or None when it is zero."""
        return self.entries.get(k)

    def truncation(self, j):
        """(f_1, ..., f_j, 0, 0, ...)."""
        return FnSequence({k: f for k, f in self.entries.items() if k <= j})


def p_seminorm(f, m, c, W, grid=None, tol=1e-10):
    """p_m(f) = sum_k c_k^(m) q_m(f_k) over the support of f.

    With ``grid`` the seminorms are grid values on it; otherwise each q_m is
    certified (grid value on a box grown until the tail is below ``tol``).
    """
    total = 0.0
    for k in f.support:
        fk = f.entries[k]
        if grid is not None:
            q = seminorm_q(fk, m, m, W, grid).value
        else:
            q = certified_seminorm(fk, m, m, W, tol=tol)[0].value
        total += c(k, m) * q
    return total


def split_functional(Fs, f):
    """F(f) = sum_k F_k(f_k) over the common support."""
    total = 0j
    for k in sorted(set(Fs) & set(f.entries)):
        total += Fs[k](f.entries[k])
    return total


@dataclass
class MonomialProbe:
    table: dict
    all_zero: bool


def monomial_probe(Fs, alpha_max, k_max, atol=1e-12):
    """F_k(x^alpha) for alpha <= alpha_max, k <= k_max; ALL-ZERO when all vanish."""
    table = {}
    for k in range(1, k_max + 1):
        F = Fs.get(k, DiscreteFunctional())
        for a in range(alpha_max + 1):
            table[(k, a)] = F.on_monomial(a)
    return MonomialProbe(table, all(abs(v) < atol for v in table.values()))


def functional_bound(F, u, m, W, q=None):
    """(sum_j |c_j| theta_m(a_j)) q_m(u), an upper bound for |F(u)| when the
    orders in F do not exceed m.

    The seminorm is a sup over all x, so the evaluation points a_j are added
    to the grid used for q_m.
    """
    if F.order > m:
        raise ValueError("functional order exceeds m")
    if q is None:
        q = certified_seminorm(u, m, m, W)[0].value
        pts = np.array([[a] for _, _, a in F.terms]) if F.terms else np.zeros((0, 1))
        if len(pts):
            logw = W(m, pts)
            for alpha in multi_indices(1, m):
                with np.errstate(divide="ignore"):
                    q = max(q, float(np.max(np.exp(np.log(np.abs(u.deriv(alpha, pts))) - logw))))
    s = sum(abs(c) * float(np.exp(W(m, np.array([[a]]))[0])) for c, _, a in F.terms)
    return s * q
