"""Shared error types, the divergence sentinel, and numerical constants."""

# Per-pixel simplex tolerance on construction/validation.
SIMPLEX_TOL = 1e-6

# Clamp applied inside logarithms during loss *evaluation*. Gradients never
# clamp: a divergent point is refused (or skipped and counted, in the solver).
LOG_CLAMP = 1e-12


class DataError(ValueError):
    """Malformed input: bad file, bad config, dimension mismatch, bad value."""


class NumericalError(RuntimeError):
    """Numerical failure: singular system, solver non-convergence."""


class DivergentPointError(NumericalError):
    """A gradient was requested at a point where the value diverges."""


class InfiniteDivergenceError(NumericalError):
    """KL divergence is infinite: q has no support where p does."""


class _Divergent:
    """Tag for a log-based value whose ln argument fell at/below the clamp.

    Returned (never raised) by value-level operations so callers can detect
    divergence deterministically instead of comparing float infinities.
    """

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "DIVERGENT"


DIVERGENT = _Divergent()


def is_divergent(value):
    return value is DIVERGENT
