"""Line-oriented run configuration files.

Format: one `key = value` per line, `#` starts a comment, blank lines are
ignored, unknown keys are rejected. Keys:

    eta              data/entropy weight, float >= 0
    lambda           pairwise weight, float >= 0
    potts            bl | q | nq | cce | cd | lq
    xent             ce | rce | cce | quad
    neighborhood     nn4 | sparse:R | dense:R:GAMMA
    color_bandwidth  float > 0
    steps            solver gradient steps, int >= 1
    lr               solver learning rate, float > 0
    rounds           alternation rounds, int >= 1
    seed             integer
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .affinity import AffinityConfig, NeighborhoodKind
from .data_terms import XentKind
from .errors import DataError
from .losses import LossConfig
from .potts import PottsKind
from .solver import SolverConfig
from .trainer import TrainConfig


@dataclass
class RunConfig:
    """Everything a CLI run needs, assembled from a config file."""

    loss: LossConfig = field(default_factory=LossConfig)
    affinity: AffinityConfig = field(default_factory=AffinityConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    rounds: int = 10
    seed: int = 0

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            rounds=self.rounds,
            loss_cfg=self.loss,
            solver_cfg=self.solver,
            seed=self.seed,
        )


def _parse_float(key, raw, minimum=None, strict=False):
    try:
        v = float(raw)
    except ValueError:
        raise DataError(f"config key {key}: {raw!r} is not a number") from None
    if minimum is not None and (v < minimum or (strict and v <= minimum)):
        op = ">" if strict else ">="
        raise DataError(f"config key {key}: must be {op} {minimum}, got {raw}")
    return v


def _parse_int(key, raw, minimum=None):
    try:
        v = int(raw)
    except ValueError:
        raise DataError(f"config key {key}: {raw!r} is not an integer") from None
    if minimum is not None and v < minimum:
        raise DataError(f"config key {key}: must be >= {minimum}, got {raw}")
    return v


def _parse_neighborhood(raw: str):
    parts = raw.strip().lower().split(":")
    if parts[0] == "nn4" and len(parts) == 1:
        return NeighborhoodKind.NN4, 1, None
    if parts[0] == "sparse" and len(parts) == 2:
        return NeighborhoodKind.SPARSE_WINDOW, _parse_int("neighborhood", parts[1], 1), None
    if parts[0] == "dense" and len(parts) == 3:
        radius = _parse_int("neighborhood", parts[1], 1)
        gamma = _parse_float("neighborhood", parts[2], 0.0, strict=True)
        return NeighborhoodKind.DENSE_TRUNCATED, radius, gamma
    raise DataError(
        f"config key neighborhood: {raw!r} is not nn4 | sparse:R | dense:R:GAMMA"
    )


def parse_config_text(text: str, source="<config>") -> RunConfig:
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise DataError(f"{source}:{lineno}: expected 'key = value'")
        key, raw = (part.strip() for part in body.split("=", 1))
        if key in values:
            raise DataError(f"{source}:{lineno}: duplicate key {key!r}")
        values[key] = raw

    known = {
        "eta", "lambda", "potts", "xent", "neighborhood",
        "color_bandwidth", "steps", "lr", "rounds", "seed",
    }
    unknown = sorted(set(values) - known)
    if unknown:
        raise DataError(f"{source}: unknown config keys: {', '.join(unknown)}")

    loss = LossConfig(
        eta=_parse_float("eta", values["eta"], 0.0) if "eta" in values else 0.3,
        lam=_parse_float("lambda", values["lambda"], 0.0) if "lambda" in values else 6.0,
        potts=PottsKind.parse(values["potts"]) if "potts" in values else PottsKind.CD,
        xent=XentKind.parse(values["xent"]) if "xent" in values else XentKind.CCE,
    )
    kind, radius, gamma = (
        _parse_neighborhood(values["neighborhood"])
        if "neighborhood" in values
        else (NeighborhoodKind.NN4, 1, None)
    )
    affinity = AffinityConfig(
        kind=kind,
        color_bandwidth=(
            _parse_float("color_bandwidth", values["color_bandwidth"], 0.0, strict=True)
            if "color_bandwidth" in values
            else 9.0
        ),
        radius=radius,
        spatial_bandwidth=gamma,
    )
    solver = SolverConfig(
        steps=_parse_int("steps", values["steps"], 1) if "steps" in values else 200,
        learning_rate=_parse_float("lr", values["lr"], 0.0, strict=True) if "lr" in values else 0.075,
    )
    return RunConfig(
        loss=loss,
        affinity=affinity,
        solver=solver,
        rounds=_parse_int("rounds", values["rounds"], 1) if "rounds" in values else 10,
        seed=_parse_int("seed", values["seed"]) if "seed" in values else 0,
    )


def read_config(path) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise DataError(f"cannot read config {path}: {exc}") from None
    return parse_config_text(text, source=str(path))
