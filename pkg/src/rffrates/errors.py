"""Exception types raised across the package."""


class UnsupportedFamilyError(ValueError):
    """The kernel family does not support the requested operation."""


class DegenerateProfileError(ValueError):
    """A leverage profile has no positive mass to resample from."""


class ConvergenceError(RuntimeError):
    """A solver stopped at ``max_iters`` before certifying its tolerance.

    The best iterate found so far is kept on ``best`` so callers can still
    inspect or use it.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best
