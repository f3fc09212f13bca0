"""Composite Gauss-Legendre rules on intervals and boxes."""

from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss


@lru_cache(maxsize=32)
def _gauss(q):
    x, w = leggauss(q)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def composite_gl(a, b, panels, q=8):
    """Nodes and weights of a composite Gauss-Legendre rule on [a, b].

    Parameters
    ----------
    a, b : float
        Interval end points, ``a < b``.
    panels : int
        Number of equal panels.
    q : int
        Gauss points per panel.

    Returns
    -------
    nodes, weights : ndarray
        Flat arrays of length ``panels * q``, nodes sorted.
    """
    g, w = _gauss(q)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * g[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def panels_for_width(a, b, max_width):
    """Smallest panel count on [a, b] with panel width <= max_width."""
    return max(1, int(np.ceil((b - a) / max_width - 1e-12)))


def box_rule(radius, dim, max_width, q=8):
    """Tensor composite rule on the cube [-radius, radius]^dim.

    Returns points of shape (M, dim) and weights of shape (M,).
    """
    p = panels_for_width(-radius, radius, max_width)
    x, w = composite_gl(-radius, radius, p, q)
    if dim == 1:
        return x[:, None], w
    grids = np.meshgrid(*([x] * dim), indexing="ij")
    wgrids = np.meshgrid(*([w] * dim), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    wts = np.prod(np.stack([g.ravel() for g in wgrids], axis=1), axis=1)
    return pts, wts
