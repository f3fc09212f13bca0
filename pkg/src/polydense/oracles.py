"""Reference values computed without the grid machinery.

Conjugates of the catalogue functions come from closed forms or from the
stationarity condition u'(y) = x solved by a bracketing root finder.
"""

import numpy as np
from scipy.optimize import brentq


def conjugate_oracle(name, x):
    """sup_{y >= 0} (x y - u(y)) for a catalogue function, x > 0."""
    x = np.asarray(x, dtype=float)
    if name == "square":
        return np.where(x > 0, 0.5 * x ** 2, 0.0)
    if name == "exp":
        return np.where(x > 1, x * np.log(np.maximum(x, 1)) - x, -1.0)
    if name == "pow15":
        return np.where(x > 0, 0.5 * (x / 1.5) ** 3, 0.0)
    if name == "ylog":
        def one(v):
            if v <= 0:
                return 0.0
            y = brentq(lambda t: np.log1p(t) + t / (1 + t) - v, 0.0, 1e30, xtol=1e-300, rtol=1e-15)
            return v * y - y * np.log1p(y)
        return np.array([one(v) for v in np.atleast_1d(x)]).reshape(x.shape)
    raise ValueError(f"no conjugate oracle for {name!r}")
