"""Pseudo-label sub-problem solver: gradient descent on per-pixel logits.

The sub-problem fixes the predictions sigma and minimizes

    eta * sum_{i not in S} xent(y_i, sigma_i) + lambda * sum_N w_ij P(y_i, y_j)

over pseudo-labels y constrained to the simplex and pinned to the ground
truth on scribbles S. Instead of projected descent, each y_i is parameterized
as softmax(l_i) of free logits, which keeps iterates strictly interior. The
scribble constraint is enforced by overriding the softmax output on S with
the one-hot ground truth at the start of every step; the softmax Jacobian at
a vertex is zero, so pinned pixels receive no logit update while their edges
still pull on unlabeled neighbors.

Per step: (1) override scribble pixels, (2) evaluate objective and gradient,
(3) take a fixed-size step l <- l - lr * grad. Divergent log-based edges
contribute the clamped value to the objective, are counted in the report, and
have their gradient skipped for that step.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .affinity import AffinityGraph
from .data_terms import row_grads, row_values
from .errors import DataError, LOG_CLAMP
from .losses import LossConfig
from .potts import edge_grads, edge_values
from .simplex import (
    LogitField,
    ProbField,
    ScribbleField,
    one_hot_rows,
    softmax_rows,
)


class InitKind(enum.Enum):
    FROM_LOGITS = "from_logits"
    UNIFORM = "uniform"
    ONE_HOT_ARGMAX = "one_hot_argmax"


# Logit magnitude for ONE_HOT_ARGMAX inits: softmax puts ~99.5% mass on the
# argmax class at K = 3.
_CONFIDENT_LOGIT = 6.0


@dataclass
class SolverConfig:
    steps: int = 200
    learning_rate: float = 0.075
    init: InitKind = InitKind.FROM_LOGITS

    def __post_init__(self):
        if int(self.steps) != self.steps or self.steps < 1:
            raise DataError("steps must be an integer >= 1")
        self.steps = int(self.steps)
        if not (np.isfinite(self.learning_rate) and self.learning_rate > 0):
            raise DataError("learning_rate must be positive")
        if not isinstance(self.init, InitKind):
            raise DataError(f"bad init kind {self.init!r}")


@dataclass
class SolveReport:
    """Objective trace (length steps + 1) and divergence bookkeeping."""

    trace: list[float] = field(default_factory=list)
    final_objective: float = float("nan")
    divergence_events: int = 0


def _check_dims(sigma: ProbField, scribbles: ScribbleField, graph: AffinityGraph):
    if (sigma.height, sigma.width) != (scribbles.height, scribbles.width):
        raise DataError("prediction field and scribbles disagree on dimensions")
    if sigma.npixels != graph.npixels:
        raise DataError("graph pixel count differs from the field")
    if scribbles.max_class() > sigma.classes:
        raise DataError(f"scribble class exceeds K={sigma.classes}")


def _objective(y, s, unlabeled, graph, cfg):
    """(value, divergence count) of the sub-problem objective at y."""
    vals, vdiv = row_values(cfg.xent, y[unlabeled], s[unlabeled])
    value = cfg.eta * float(np.sum(vals))
    ev, ediv = edge_values(cfg.potts, y[graph.ei], y[graph.ej])
    value += cfg.lam * float(np.dot(graph.w, ev))
    return value, int(np.count_nonzero(vdiv)) + int(np.count_nonzero(ediv))


def _objective_grad(y, s, unlabeled, graph, cfg):
    """(value, dist-space gradient, divergence count); divergent parts skipped."""
    n, k = y.shape
    grad = np.zeros((n, k))

    vals, vdiv = row_values(cfg.xent, y[unlabeled], s[unlabeled])
    value = cfg.eta * float(np.sum(vals))
    gy, _, _ = row_grads(cfg.xent, y[unlabeled], s[unlabeled])
    grad[unlabeled] = cfg.eta * gy

    p, q = y[graph.ei], y[graph.ej]
    ev, ediv = edge_values(cfg.potts, p, q)
    value += cfg.lam * float(np.dot(graph.w, ev))
    gp, gq, _ = edge_grads(cfg.potts, p, q)
    scale = (cfg.lam * graph.w)[:, None]
    np.add.at(grad, graph.ei, scale * gp)
    np.add.at(grad, graph.ej, scale * gq)

    events = int(np.count_nonzero(vdiv)) + int(np.count_nonzero(ediv))
    return value, grad, events


def pseudo_label_objective(
    sigma: ProbField,
    y: ProbField,
    scribbles: ScribbleField,
    graph: AffinityGraph,
    cfg: LossConfig,
) -> float:
    """Sub-problem objective of a candidate y at fixed sigma (clamped logs)."""
    _check_dims(sigma, scribbles, graph)
    unlabeled = ~scribbles.labeled_mask().ravel()
    value, _ = _objective(y.flat(), sigma.flat(), unlabeled, graph, cfg)
    return value


def _initial_logits(sigma, init_logits, cfg):
    if cfg.init is InitKind.UNIFORM:
        return np.zeros_like(sigma.flat())
    if cfg.init is InitKind.ONE_HOT_ARGMAX:
        s = sigma.flat()
        l = np.zeros_like(s)
        l[np.arange(s.shape[0]), np.argmax(s, axis=1)] = _CONFIDENT_LOGIT
        return l
    if init_logits is not None:
        if init_logits.data.shape != sigma.data.shape:
            raise DataError("initial logits shape differs from the prediction field")
        return init_logits.flat().copy()
    return np.log(np.maximum(sigma.flat(), LOG_CLAMP))


def solve_pseudo_labels(
    sigma: ProbField,
    init_logits: LogitField | None,
    scribbles: ScribbleField,
    graph: AffinityGraph,
    loss_cfg: LossConfig,
    solver_cfg: SolverConfig,
):
    """Minimize the pseudo-label objective; returns (y, SolveReport).

    The returned field satisfies the scribble constraint exactly (pinned
    one-hots), and report.trace[t] is the objective at iterate t, so the
    trace has steps + 1 entries ending at the final objective.
    """
    _check_dims(sigma, scribbles, graph)
    s = sigma.flat()
    lab = scribbles.data.ravel()
    labeled = lab > 0
    unlabeled = ~labeled
    pinned = one_hot_rows(lab[labeled], sigma.classes)

    logits = _initial_logits(sigma, init_logits, solver_cfg)
    lr = solver_cfg.learning_rate
    report = SolveReport()

    y = softmax_rows(logits)
    y[labeled] = pinned
    for _ in range(solver_cfg.steps):
        value, grad, events = _objective_grad(y, s, unlabeled, graph, loss_cfg)
        report.trace.append(value)
        report.divergence_events += events
        # chain through softmax: J = diag(y) - y y^T; zero at pinned vertices
        glogit = y * (grad - np.sum(y * grad, axis=1, keepdims=True))
        logits -= lr * glogit
        y = softmax_rows(logits)
        y[labeled] = pinned

    value, events = _objective(y, s, unlabeled, graph, loss_cfg)
    report.trace.append(value)
    report.divergence_events += events
    report.final_objective = value

    shape = sigma.data.shape
    return ProbField(y.reshape(shape)), report


def soft_jaccard(a: ProbField, b: ProbField) -> float:
    """Class-averaged sum-min over sum-max overlap of two soft label fields.

    1.0 iff the fields are identical; a class with zero mass in both fields
    counts as perfectly matched.
    """
    if a.data.shape != b.data.shape:
        raise DataError("soft_jaccard fields differ in shape")
    fa, fb = a.flat(), b.flat()
    num = np.minimum(fa, fb).sum(axis=0)
    den = np.maximum(fa, fb).sum(axis=0)
    ratios = np.where(den > 0.0, num / np.where(den > 0.0, den, 1.0), 1.0)
    return float(np.mean(ratios))
