"""Multi-index enumeration and point-array helpers."""

from itertools import product
from math import comb

import numpy as np


def multi_indices(dim, max_order, exact=False):
    """All multi-indices of length ``dim`` with total order <= max_order.

    With ``exact=True`` only those of total order equal to ``max_order``.
    Ordered by total order, then lexicographically.
    """
    out = []
    for alpha in product(range(max_order + 1), repeat=dim):
        s = sum(alpha)
        if (s == max_order) if exact else (s <= max_order):
            out.append(alpha)
    out.sort(key=lambda a: (sum(a), a))
    return out


def sub_indices(alpha):
    """All beta <= alpha componentwise."""
    return list(product(*(range(a + 1) for a in alpha)))


def multi_binom(alpha, beta):
    out = 1
    for a, b in zip(alpha, beta):
        out *= comb(a, b)
    return out


def as_points(x, dim):
    """Coerce ``x`` to a float array of shape (npts, dim)."""
    x = np.asarray(x, dtype=float)
    if dim == 1:
        return x.reshape(-1, 1)
    if x.ndim == 1:
        if x.shape[0] != dim:
            raise ValueError(f"expected points of dimension {dim}, got shape {x.shape}")
        return x[None, :]
    if x.ndim != 2 or x.shape[1] != dim:
        raise ValueError(f"expected shape (npts, {dim}), got {x.shape}")
    return x


def sphere_points(dim, count=64):
    """Deterministic sample of the unit sphere in R^dim.

    dim=1 gives {-1, +1}; dim=2 gives ``count`` equally spaced angles.
    """
    if dim == 1:
        return np.array([[-1.0], [1.0]])
    if dim == 2:
        th = 2 * np.pi * np.arange(count) / count
        return np.stack([np.cos(th), np.sin(th)], axis=1)
    rng = np.random.default_rng(12345)
    v = rng.standard_normal((max(count, 256), dim))
    v = np.vstack([np.eye(dim), -np.eye(dim), v])
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def shell_points(radius, dim, per_side=256):
    """Points on the boundary {||x||_inf = radius} of the cube."""
    if dim == 1:
        return np.array([[-radius], [radius]])
    s = np.linspace(-radius, radius, per_side)
    faces = []
    for j in range(dim):
        for sign in (-1.0, 1.0):
            if dim == 2:
                pts = np.zeros((per_side, 2))
                pts[:, 1 - j] = s
            else:
                k = max(8, int(round(per_side ** (1.0 / (dim - 1)))))
                t = np.linspace(-radius, radius, k)
                mesh = np.meshgrid(*([t] * (dim - 1)), indexing="ij")
                pts = np.zeros((mesh[0].size, dim))
                others = [i for i in range(dim) if i != j]
                for i, g in zip(others, mesh):
                    pts[:, i] = g.ravel()
            pts[:, j] = sign * radius
            faces.append(pts)
    return np.vstack(faces)
