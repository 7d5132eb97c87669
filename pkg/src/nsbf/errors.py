"""Exception hierarchy shared by all nsbf modules.

The CLI maps these onto process exit codes; see :mod:`nsbf.cli`.
"""


class NsbfError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(NsbfError):
    """Invalid run configuration (bad flags, malformed config file, ...)."""


class GridError(NsbfError):
    """Invalid grid parameters (b <= 0, M too small or not divisible by 6)."""


class ExpressionSyntaxError(NsbfError):
    """Potential expression could not be parsed.

    Carries the byte offset of the failure and a description of what was
    expected there.
    """

    def __init__(self, message: str, offset: int, expected: str = ""):
        self.offset = offset
        self.expected = expected
        detail = f" at offset {offset}"
        if expected:
            detail += f" (expected {expected})"
        super().__init__(message + detail)


class ExpressionEvalError(NsbfError):
    """Evaluation of a potential expression failed (domain error, overflow)."""


class ConvergenceError(NsbfError):
    """An iterative scheme did not converge within its iteration budget."""


class NearVanishingError(NsbfError):
    """A homogeneous solution gets too close to zero for the recursive
    integrals to be trustworthy."""


class LimitError(NsbfError):
    """A documented implementation limit was exceeded (order caps, overflow
    guards)."""


class ZeroOmegaError(NsbfError):
    """An operation that divides by the spectral parameter received omega = 0."""


class RangeExhaustedError(NsbfError):
    """The eigenvalue scan range was exhausted before finding the requested
    number of eigenvalues."""


class UnsupportedIntervalError(NsbfError):
    """The asymptotic eigenvalue formula is only available for b = pi."""


class OracleError(NsbfError):
    """The built-in reference integrator failed to reach its tolerance."""
