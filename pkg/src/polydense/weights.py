"""Weight families phi_m on R^n, their exponentials theta_m, and cubes Pi_r."""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .multiindex import as_points, sphere_points

_LOG_MAX = np.log(np.finfo(float).max)


@dataclass(frozen=True)
class Box:
    """The open cube {x : |x_j| < radius for all j}."""

    radius: float
    dim: int = 1

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("box radius must be positive")

    def contains(self, x):
        pts = as_points(x, self.dim)
        return np.all(np.abs(pts) < self.radius, axis=1)


@dataclass(frozen=True)
class WeightFamily:
    """Indexed family m -> phi_m of continuous weights on R^dim.

    ``radial(m, r)`` gives phi_m on the sphere of radius r when the family
    depends on ||x|| only; ``func(m, pts)`` is the general evaluator.
    """

    dim: int
    kind: str
    convex: bool
    func: Callable
    radial: Optional[Callable] = None
    params: dict = field(default_factory=dict)

    def __call__(self, m, x):
        return self.func(m, as_points(x, self.dim))

    def sphere_min(self, m, r):
        """min over ||x|| = r of phi_m(x), vectorized in r."""
        r = np.asarray(r, dtype=float)
        if self.radial is not None:
            return self.radial(m, r)
        dirs = sphere_points(self.dim)
        vals = [np.min(self.func(m, dirs * ri)) for ri in r.ravel()]
        return np.asarray(vals).reshape(r.shape)

    def describe(self):
        return {"kind": self.kind, **self.params}


def _norm(pts):
    return np.linalg.norm(pts, axis=1)


def make_power_family(a, n=1):
    """phi_m(x) = (1 + 1/m) ||x||^a, a > 1."""
    if not a > 1:
        raise ValueError(f"power family needs a > 1, got a={a}")

    def radial(m, r):
        return (1.0 + 1.0 / m) * np.abs(r) ** a

    def func(m, pts):
        return radial(m, _norm(pts))

    return WeightFamily(dim=n, kind="power", convex=True, func=func,
                        radial=radial, params={"a": float(a)})


def make_log_penalty_family(a=2.0, coeff=1.0, n=1):
    """phi_m(x) = coeff*||x||^a - m*ln(1 + ||x||).

    Consecutive members differ by exactly ln(1 + ||x||). Not convex: the
    logarithmic term puts a concave kink at the origin.
    """
    if not a > 1:
        raise ValueError(f"log-penalty base needs a > 1, got a={a}")

    def radial(m, r):
        r = np.abs(r)
        return coeff * r ** a - m * np.log1p(r)

    def func(m, pts):
        return radial(m, _norm(pts))

    return WeightFamily(dim=n, kind="log_penalty", convex=False, func=func,
                        radial=radial, params={"a": float(a), "coeff": float(coeff)})


def make_weight_family(spec, n=1):
    """Build a family from a config mapping like ``{"kind": "power", "a": 2.0}``."""
    spec = dict(spec)
    kind = spec.pop("kind", None)
    if kind == "power":
        return make_power_family(spec.pop("a", 2.0), n)
    if kind == "log_penalty":
        return make_log_penalty_family(spec.pop("a", 2.0), spec.pop("coeff", 1.0), n)
    raise ValueError(f"unknown weight kind {kind!r}")


def log_theta(W, m, x):
    """log theta_m(x) = phi_m(x); never exponentiates."""
    return W(m, x)


def theta(W, m, x):
    """theta_m(x) = exp(phi_m(x)).

    Raises OverflowError when phi_m exceeds the double exponent range; use
    :func:`log_theta` for ratios.
    """
    phi = W(m, x)
    if np.any(phi > _LOG_MAX):
        raise OverflowError(f"theta_{m} overflows (phi up to {np.max(phi):.6g}); use log_theta")
    return np.exp(phi)


@dataclass
class GrowthRow:
    m: int
    radii: np.ndarray
    ratio_min: np.ndarray   # min over ||x||=r of phi_m(x)/r
    diff_min: np.ndarray    # min over ||x||=r of phi_m(x) - phi_{m+1}(x)
    passed: bool


@dataclass
class ConditionReport:
    rows: list
    threshold: float
    largest_radius: float

    @property
    def passed(self):
        return all(row.passed for row in self.rows)


def check_growth_conditions(W, m_max, probe_radii, threshold=1.0):
    """Empirical check of superlinear growth and of growing gaps phi_m - phi_{m+1}.

    For each m <= m_max the minima over spheres of radius r are tabulated.
    A row passes when both sequences increase strictly along the radii and
    both exceed ``threshold`` at the largest radius. A failing row is data.
    """
    radii = np.asarray(probe_radii, dtype=float)
    if radii.size < 3 or np.any(np.diff(radii) <= 0):
        raise ValueError("probe_radii must be strictly increasing with at least 3 values")
    dirs = sphere_points(W.dim)
    rows = []
    for m in range(1, m_max + 1):
        ratio, diff = [], []
        for r in radii:
            pts = dirs * r
            ratio.append(np.min(W(m, pts)) / r)
            diff.append(np.min(W(m, pts) - W(m + 1, pts)))
        ratio, diff = np.array(ratio), np.array(diff)
        ok = (np.all(np.diff(ratio) > 0) and np.all(np.diff(diff) > 0)
              and ratio[-1] > threshold and diff[-1] > threshold)
        rows.append(GrowthRow(m, radii, ratio, diff, bool(ok)))
    return ConditionReport(rows, threshold, float(radii[-1]))
