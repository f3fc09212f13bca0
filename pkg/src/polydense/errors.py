"""Exception and warning classes shared across the package."""


class PolyDenseError(Exception):
    """Base class for all errors raised by polydense."""


class TruncationError(PolyDenseError):
    """A sampled conjugate cannot certify that its maximizer lies in range."""


class RangeError(PolyDenseError):
    """A composition requested values outside the sampled domain."""


class OrderError(PolyDenseError):
    """A derivative order exceeds what an oracle provides."""


class CertificateError(PolyDenseError):
    """A tail certificate could not be established."""


class ResolutionError(PolyDenseError):
    """A quadrature rule is too coarse for the kernel scale."""


class BudgetError(PolyDenseError):
    """An adaptive search ran out of its parameter budget."""


class ConfigError(PolyDenseError):
    """Malformed experiment configuration."""


class DivergenceWarning(RuntimeWarning):
    """A series failed a ratio test on the probed range."""
