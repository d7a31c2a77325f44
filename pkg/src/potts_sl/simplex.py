"""Simplex-valued fields and the softmax/entropy/KL primitives.

A pixel state is a point on the K-class probability simplex. Grids of such
points serve both as classifier predictions and as (soft) pseudo-labels, so
all loss and solver modules build on the types here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, InfiniteDivergenceError, LOG_CLAMP, SIMPLEX_TOL

# ProbField entries may dip this far below zero (iterative linear solvers
# produce O(1e-10) undershoot); anything worse is rejected.
_FIELD_NEG_TOL = 1e-9


def _as_prob_vector(probs) -> np.ndarray:
    """Validate and canonicalize one probability vector.

    Entries within SIMPLEX_TOL of the simplex are renormalized; anything
    further out is rejected rather than silently cleaned up.
    """
    p = np.asarray(probs, dtype=np.float64).copy()
    if p.ndim != 1 or p.size < 2:
        raise DataError(f"probability vector must be 1-D with K >= 2, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise DataError("probability vector has non-finite entries")
    if np.min(p) < -SIMPLEX_TOL:
        raise DataError(f"negative probability {np.min(p):g} below tolerance")
    np.clip(p, 0.0, None, out=p)
    s = p.sum()
    if abs(s - 1.0) > SIMPLEX_TOL:
        raise DataError(f"probabilities sum to {s:.9g}, not 1 within {SIMPLEX_TOL:g}")
    p /= s
    return p


@dataclass
class Distribution:
    """A point on the K-class probability simplex."""

    probs: np.ndarray

    def __post_init__(self):
        self.probs = _as_prob_vector(self.probs)

    @property
    def classes(self) -> int:
        return self.probs.size

    def __array__(self, dtype=None, copy=None):
        arr = self.probs
        return arr.astype(dtype) if dtype is not None else arr

    def __len__(self):
        return self.probs.size


@dataclass
class ProbField:
    """H x W grid of simplex points, stored as an (H, W, K) float array.

    Validation checks every pixel against the simplex tolerance but keeps the
    stored values bit-for-bit as given (no renormalization), so fields written
    to and read back from disk round-trip exactly.
    """

    data: np.ndarray

    def __post_init__(self):
        a = np.ascontiguousarray(np.asarray(self.data, dtype=np.float64))
        if a.ndim != 3 or a.shape[0] < 1 or a.shape[1] < 1 or a.shape[2] < 2:
            raise DataError(f"probability field must be (H, W, K>=2), got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise DataError("probability field has non-finite entries")
        if a.min() < -_FIELD_NEG_TOL:
            raise DataError(f"probability field entry {a.min():g} below tolerance")
        sums = a.sum(axis=2)
        worst = np.max(np.abs(sums - 1.0))
        if worst > SIMPLEX_TOL:
            raise DataError(f"pixel probabilities sum off by {worst:.3g} (> {SIMPLEX_TOL:g})")
        self.data = a

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def classes(self) -> int:
        return self.data.shape[2]

    @property
    def npixels(self) -> int:
        return self.data.shape[0] * self.data.shape[1]

    def flat(self) -> np.ndarray:
        """(N, K) view in row-major pixel order."""
        return self.data.reshape(-1, self.data.shape[2])

    def at(self, row: int, col: int) -> Distribution:
        return Distribution(self.data[row, col])

    @classmethod
    def uniform(cls, height: int, width: int, classes: int) -> "ProbField":
        return cls(np.full((height, width, classes), 1.0 / classes))


@dataclass
class LogitField:
    """H x W grid of unconstrained K-vectors; softmax image is a ProbField."""

    data: np.ndarray

    def __post_init__(self):
        a = np.ascontiguousarray(np.asarray(self.data, dtype=np.float64))
        if a.ndim != 3 or a.shape[2] < 2:
            raise DataError(f"logit field must be (H, W, K>=2), got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise DataError("logit field has non-finite entries")
        self.data = a

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def classes(self) -> int:
        return self.data.shape[2]

    def flat(self) -> np.ndarray:
        return self.data.reshape(-1, self.data.shape[2])


@dataclass
class ScribbleField:
    """Per-pixel optional ground-truth class: 1..K labeled, 0 unlabeled."""

    data: np.ndarray

    def __post_init__(self):
        a = np.ascontiguousarray(np.asarray(self.data))
        if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
            raise DataError(f"scribble field must be 2-D, got shape {a.shape}")
        if not np.issubdtype(a.dtype, np.integer):
            raise DataError("scribble field must hold integers")
        if a.min() < 0:
            raise DataError("scribble classes must be >= 1 (0 means unlabeled)")
        self.data = a.astype(np.int64)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    def labeled_mask(self) -> np.ndarray:
        return self.data > 0

    def labeled_fraction(self) -> float:
        return float(np.count_nonzero(self.data)) / self.data.size

    def max_class(self) -> int:
        return int(self.data.max())

    @classmethod
    def empty(cls, height: int, width: int) -> "ScribbleField":
        return cls(np.zeros((height, width), dtype=np.int64))


# ---------------------------------------------------------------------------
# primitives


def softmax(logits) -> Distribution:
    """Map a length-K logit vector to the simplex.

    The max is subtracted before exponentiation, so the result is finite for
    any finite input and invariant to adding a constant to all logits.
    """
    z = np.asarray(logits, dtype=np.float64)
    if not np.all(np.isfinite(z)):
        raise DataError("softmax requires finite logits")
    e = np.exp(z - z.max())
    return Distribution(e / e.sum())


def softmax_rows(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax for an (N, K) array of logit vectors."""
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def entropy(p) -> float:
    """Shannon entropy in nats; zero-probability terms contribute 0."""
    q = np.asarray(p, dtype=np.float64)
    return float(-np.sum(np.where(q > 0.0, q * np.log(np.maximum(q, LOG_CLAMP)), 0.0)))


def entropy_rows(p: np.ndarray) -> np.ndarray:
    """Row-wise entropy of an (N, K) array."""
    return -np.sum(np.where(p > 0.0, p * np.log(np.maximum(p, LOG_CLAMP)), 0.0), axis=1)


def kl(p, q) -> float:
    """KL divergence KL(p || q) in nats.

    Raises InfiniteDivergenceError when q lacks support somewhere p has mass;
    an infinite divergence is an error to surface, not a float to propagate.
    """
    a = np.asarray(p, dtype=np.float64)
    b = np.asarray(q, dtype=np.float64)
    if a.shape != b.shape:
        raise DataError(f"kl shape mismatch: {a.shape} vs {b.shape}")
    support = a > 0.0
    if np.any(b[support] <= 0.0):
        raise InfiniteDivergenceError("kl(p, q) is infinite: q = 0 where p > 0")
    ratio = np.log(a[support]) - np.log(b[support])
    return float(np.sum(a[support] * ratio))


def one_hot(k: int, classes: int) -> Distribution:
    """One-hot distribution for class k (1-based)."""
    if not 1 <= k <= classes:
        raise DataError(f"class {k} out of range 1..{classes}")
    p = np.zeros(classes)
    p[k - 1] = 1.0
    return Distribution(p)


def one_hot_rows(labels: np.ndarray, classes: int) -> np.ndarray:
    """(n, K) one-hot rows for an array of 1-based class indices."""
    lab = np.asarray(labels, dtype=np.int64)
    if lab.size and (lab.min() < 1 or lab.max() > classes):
        raise DataError(f"class index out of range 1..{classes}")
    out = np.zeros((lab.size, classes))
    out[np.arange(lab.size), lab - 1] = 1.0
    return out


def argmax_decode(field: ProbField) -> np.ndarray:
    """Per-pixel most probable class (1-based); ties go to the smallest index."""
    return np.argmax(field.data, axis=2).astype(np.int64) + 1
