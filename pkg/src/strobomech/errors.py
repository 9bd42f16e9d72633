"""Exception types shared across the package.

Everything raised on purpose derives from StrobomechError so callers (and the
command line front end) can distinguish our failures from genuine bugs.
"""


class StrobomechError(Exception):
    """Base class for all errors raised deliberately by this package."""


class UsageError(StrobomechError, ValueError):
    """Malformed input: wrong shapes, invalid parameter combinations, bad flags."""


class DomainError(StrobomechError, ValueError):
    """The requested quantity is mathematically undefined for these inputs."""


class UnsupportedBranchError(StrobomechError, ValueError):
    """The inputs fall on an analytic branch the fast path does not support."""


class ConvergenceError(StrobomechError, RuntimeError):
    """An iterative solver ran out of iterations.

    Carries the last residual so callers can decide whether the partial
    answer is still useful.
    """

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class StepSizeError(StrobomechError, RuntimeError):
    """A fixed-step integration produced an unphysical state; reduce dt."""


class InternalError(StrobomechError, RuntimeError):
    """An internal consistency check failed; this indicates a bug."""
