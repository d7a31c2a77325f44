"""Couplings between pseudo-labels y and predictions sigma, plus gradients.

Argument order is fixed as (y, sigma) = (target, estimate) throughout:

  CE    -sum_k y_k ln sigma_k      standard cross-entropy
  RCE   -sum_k sigma_k ln y_k      reverse cross-entropy
  CCE   -ln sigma.y                collision cross-entropy (symmetric)
  QUAD  ||y - sigma||^2            quadratic coupling (no 1/2 factor)

With a uniform target, RCE and CCE are constant (= ln K) in sigma, so they
never push predictions to mimic an uninformative label; CE does.
"""

from __future__ import annotations

import enum

import numpy as np

from .errors import DIVERGENT, DataError, DivergentPointError, LOG_CLAMP
from .simplex import Distribution


class XentKind(enum.Enum):
    CE = "ce"
    RCE = "rce"
    CCE = "cce"
    QUAD = "quad"

    @classmethod
    def parse(cls, name: str) -> "XentKind":
        try:
            return cls(name.strip().lower())
        except ValueError:
            raise DataError(f"unknown cross-entropy kind {name!r}") from None


def _pair_arrays(y, sigma):
    a = np.atleast_2d(np.asarray(y, dtype=np.float64))
    b = np.atleast_2d(np.asarray(sigma, dtype=np.float64))
    if a.shape != b.shape or a.shape[1] < 2:
        raise DataError(f"distribution pair shape mismatch: {a.shape} vs {b.shape}")
    return a, b


def row_values(kind: XentKind, y: np.ndarray, sigma: np.ndarray):
    """Vectorized values over (N, K) pairs; returns (values, divergent mask).

    Log arguments are clamped at LOG_CLAMP so the returned values stay finite;
    the mask records rows where the clamp was active.
    """
    if kind is XentKind.CE:
        div = np.any((y > 0.0) & (sigma <= LOG_CLAMP), axis=1)
        logs = np.log(np.maximum(sigma, LOG_CLAMP))
        return -np.sum(y * logs, axis=1), div
    if kind is XentKind.RCE:
        div = np.any((sigma > 0.0) & (y <= LOG_CLAMP), axis=1)
        logs = np.log(np.maximum(y, LOG_CLAMP))
        return -np.sum(sigma * logs, axis=1), div
    if kind is XentKind.CCE:
        s = np.einsum("nk,nk->n", sigma, y)
        div = s <= LOG_CLAMP
        return -np.log(np.maximum(s, LOG_CLAMP)), div
    if kind is XentKind.QUAD:
        d = y - sigma
        return np.einsum("nk,nk->n", d, d), np.zeros(d.shape[0], dtype=bool)
    raise DataError(f"unknown cross-entropy kind {kind!r}")


def row_grads(kind: XentKind, y: np.ndarray, sigma: np.ndarray):
    """Vectorized (d/dy, d/dsigma, divergent) over (N, K) pairs.

    The gradients are those of the log-clamped loss reported by row_values:
    finite everywhere, and zero along any coordinate sitting in the flat
    clamped region. The mask flags rows where the clamp is active so callers
    can refuse or count them.
    """
    if kind is XentKind.CE:
        div = np.any((y > 0.0) & (sigma <= LOG_CLAMP), axis=1)
        gy = -np.log(np.maximum(sigma, LOG_CLAMP))
        gs = np.where(sigma > LOG_CLAMP, -y / np.maximum(sigma, LOG_CLAMP), 0.0)
        return gy, gs, div
    if kind is XentKind.RCE:
        div = np.any((sigma > 0.0) & (y <= LOG_CLAMP), axis=1)
        gy = np.where(y > LOG_CLAMP, -sigma / np.maximum(y, LOG_CLAMP), 0.0)
        gs = -np.log(np.maximum(y, LOG_CLAMP))
        return gy, gs, div
    if kind is XentKind.CCE:
        s = np.einsum("nk,nk->n", sigma, y)
        div = s <= LOG_CLAMP
        ss = np.maximum(s, LOG_CLAMP)[:, None]
        gy = np.where(div[:, None], 0.0, -sigma / ss)
        gs = np.where(div[:, None], 0.0, -y / ss)
        return gy, gs, div
    if kind is XentKind.QUAD:
        d = y - sigma
        return 2.0 * d, -2.0 * d, np.zeros(d.shape[0], dtype=bool)
    raise DataError(f"unknown cross-entropy kind {kind!r}")


def xent_value(kind: XentKind, y, sigma):
    """Coupling value for one (target, estimate) pair; DIVERGENT on clamped logs."""
    a, b = _pair_arrays(y, sigma)
    v, div = row_values(kind, a, b)
    if div[0]:
        return DIVERGENT
    return float(v[0])


def xent_grad(kind: XentKind, y, sigma):
    """(d/dy, d/dsigma) for one pair; refuses divergent points."""
    a, b = _pair_arrays(y, sigma)
    gy, gs, div = row_grads(kind, a, b)
    if div[0]:
        raise DivergentPointError(f"{kind.name} gradient requested at a divergent pair")
    return gy[0], gs[0]


def corrupted_target(y, eta: float) -> Distribution:
    """Mix a one-hot label with the uniform distribution: eta*u + (1-eta)*y."""
    p = np.asarray(y, dtype=np.float64)
    if not 0.0 <= eta <= 1.0:
        raise DataError(f"mixing weight {eta} outside [0, 1]")
    if p.ndim != 1 or not (np.count_nonzero(p == 1.0) == 1 and np.count_nonzero(p) == 1):
        raise DataError("corrupted_target expects a one-hot distribution")
    k = p.size
    return Distribution(eta / k + (1.0 - eta) * p)
