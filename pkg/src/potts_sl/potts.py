"""Pairwise relaxations of the Potts smoothness penalty, with gradients.

Six interaction potentials P(p, q) on pairs of simplex points:

  BL   1 - p.q                    bilinear; tight w.r.t. the discrete model
  Q    ||p - q||^2 / 2            quadratic; the random-walker energy
  NQ   1 - p.q / (|p| |q|)        normalized quadratic (cosine dissimilarity)
  CCE  -ln p.q                    collision cross-entropy
  CD   -ln ( p.q / (|p| |q|) )    collision divergence = -ln(1 - NQ)
  LQ   -ln (1 - ||p - q||^2 / 2)  log-quadratic

All six vanish on equal one-hot pairs; BL/Q/NQ equal 1 on differing one-hots
while the log-based three diverge there. Divergence is surfaced as the
DIVERGENT sentinel for values and as DivergentPointError for gradients.

Values extend smoothly to positive vectors slightly off the simplex, which
the finite-difference gradient checks rely on.
"""

from __future__ import annotations

import enum

import numpy as np

from .affinity import AffinityGraph
from .errors import DIVERGENT, DataError, DivergentPointError, LOG_CLAMP
from .simplex import ProbField


class PottsKind(enum.Enum):
    BL = "bl"
    Q = "q"
    NQ = "nq"
    CCE = "cce"
    CD = "cd"
    LQ = "lq"

    @classmethod
    def parse(cls, name: str) -> "PottsKind":
        try:
            return cls(name.strip().lower())
        except ValueError:
            raise DataError(f"unknown Potts relaxation {name!r}") from None


LOG_KINDS = frozenset({PottsKind.CCE, PottsKind.CD, PottsKind.LQ})


def _pair_arrays(p, q):
    a = np.atleast_2d(np.asarray(p, dtype=np.float64))
    b = np.atleast_2d(np.asarray(q, dtype=np.float64))
    if a.shape != b.shape or a.shape[1] < 2:
        raise DataError(f"distribution pair shape mismatch: {a.shape} vs {b.shape}")
    return a, b


def edge_values(kind: PottsKind, p: np.ndarray, q: np.ndarray):
    """Vectorized P over (E, K) pairs.

    Returns (values, divergent) where values are exact for non-divergent rows
    and log-clamped (-ln LOG_CLAMP) on divergent ones, and divergent flags
    rows whose ln argument fell at/below the clamp.
    """
    s = np.einsum("ek,ek->e", p, q)
    if kind is PottsKind.BL:
        return 1.0 - s, np.zeros(s.shape, dtype=bool)
    if kind is PottsKind.Q:
        d = p - q
        return 0.5 * np.einsum("ek,ek->e", d, d), np.zeros(s.shape, dtype=bool)
    if kind is PottsKind.NQ:
        na = np.sqrt(np.einsum("ek,ek->e", p, p))
        nb = np.sqrt(np.einsum("ek,ek->e", q, q))
        return 1.0 - s / (na * nb), np.zeros(s.shape, dtype=bool)
    if kind is PottsKind.CCE:
        div = s <= LOG_CLAMP
        return -np.log(np.maximum(s, LOG_CLAMP)), div
    if kind is PottsKind.CD:
        na = np.sqrt(np.einsum("ek,ek->e", p, p))
        nb = np.sqrt(np.einsum("ek,ek->e", q, q))
        c = s / (na * nb)
        div = c <= LOG_CLAMP
        return -np.log(np.maximum(c, LOG_CLAMP)), div
    if kind is PottsKind.LQ:
        d = p - q
        u = 1.0 - 0.5 * np.einsum("ek,ek->e", d, d)
        div = u <= LOG_CLAMP
        return -np.log(np.maximum(u, LOG_CLAMP)), div
    raise DataError(f"unknown Potts kind {kind!r}")


def edge_grads(kind: PottsKind, p: np.ndarray, q: np.ndarray):
    """Vectorized (dP/dp, dP/dq, divergent) over (E, K) pairs.

    Gradient rows flagged divergent are zeroed; callers decide whether to
    refuse (potts_grad) or skip and count (the pseudo-label solver).
    """
    s = np.einsum("ek,ek->e", p, q)
    if kind is PottsKind.BL:
        return -q, -p, np.zeros(s.shape, dtype=bool)
    if kind is PottsKind.Q:
        d = p - q
        return d, -d, np.zeros(s.shape, dtype=bool)
    if kind is PottsKind.NQ:
        a2 = np.einsum("ek,ek->e", p, p)
        b2 = np.einsum("ek,ek->e", q, q)
        ab = np.sqrt(a2 * b2)
        gp = (s / a2)[:, None] * p / ab[:, None] - q / ab[:, None]
        gq = (s / b2)[:, None] * q / ab[:, None] - p / ab[:, None]
        return gp, gq, np.zeros(s.shape, dtype=bool)
    if kind is PottsKind.CCE:
        div = s <= LOG_CLAMP
        ss = np.maximum(s, LOG_CLAMP)[:, None]
        gp = -q / ss
        gq = -p / ss
        gp[div] = 0.0
        gq[div] = 0.0
        return gp, gq, div
    if kind is PottsKind.CD:
        a2 = np.einsum("ek,ek->e", p, p)
        b2 = np.einsum("ek,ek->e", q, q)
        c = s / np.sqrt(a2 * b2)
        div = c <= LOG_CLAMP
        ss = np.maximum(s, LOG_CLAMP)[:, None]
        gp = -q / ss + p / a2[:, None]
        gq = -p / ss + q / b2[:, None]
        gp[div] = 0.0
        gq[div] = 0.0
        return gp, gq, div
    if kind is PottsKind.LQ:
        d = p - q
        u = 1.0 - 0.5 * np.einsum("ek,ek->e", d, d)
        div = u <= LOG_CLAMP
        uu = np.maximum(u, LOG_CLAMP)[:, None]
        gp = d / uu
        gq = -d / uu
        gp[div] = 0.0
        gq[div] = 0.0
        return gp, gq, div
    raise DataError(f"unknown Potts kind {kind!r}")


def potts_value(kind: PottsKind, p, q):
    """P(p, q) for one pair; DIVERGENT if a log argument hits the clamp."""
    a, b = _pair_arrays(p, q)
    v, div = edge_values(kind, a, b)
    if div[0]:
        return DIVERGENT
    return float(v[0])


def potts_grad(kind: PottsKind, p, q):
    """(dP/dp, dP/dq) for one pair; refuses divergent points."""
    a, b = _pair_arrays(p, q)
    gp, gq, div = edge_grads(kind, a, b)
    if div[0]:
        raise DivergentPointError(f"{kind.name} gradient requested at a divergent pair")
    return gp[0], gq[0]


def _check_field_graph(field: ProbField, graph: AffinityGraph):
    if field.npixels != graph.npixels:
        raise DataError(
            f"field has {field.npixels} pixels but graph has {graph.npixels}"
        )


def potts_sum(kind: PottsKind, field: ProbField, graph: AffinityGraph):
    """Weighted sum of P over all graph edges.

    Returns DIVERGENT if any positively weighted edge diverges.
    """
    _check_field_graph(field, graph)
    y = field.flat()
    v, div = edge_values(kind, y[graph.ei], y[graph.ej])
    if np.any(div & (graph.w > 0)):
        return DIVERGENT
    return float(np.dot(graph.w, v))


def potts_sum_grad(kind: PottsKind, field: ProbField, graph: AffinityGraph):
    """(value, gradient) of the weighted edge sum; gradient is (H, W, K).

    Raises DivergentPointError if any positively weighted edge diverges.
    """
    _check_field_graph(field, graph)
    y = field.flat()
    p, q = y[graph.ei], y[graph.ej]
    v, div = edge_values(kind, p, q)
    if np.any(div & (graph.w > 0)):
        raise DivergentPointError(f"{kind.name} edge sum has a divergent edge")
    gp, gq, _ = edge_grads(kind, p, q)
    grad = np.zeros_like(y)
    np.add.at(grad, graph.ei, graph.w[:, None] * gp)
    np.add.at(grad, graph.ej, graph.w[:, None] * gq)
    value = float(np.dot(graph.w, v))
    return value, grad.reshape(field.data.shape)
