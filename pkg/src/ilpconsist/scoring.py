"""Map raw per-group probabilities to globally comparable ILP weights.

Every factor is a positive per-group constant (output size, size over
entropy, model accuracy) so the weights of a group are a rescaling of its
probabilities. Empirical priors are the exception: they divide per label.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .model import DecisionGroup, Instance, ModelMeta

FACTORS = ("prior", "entropy", "accuracy")
_ALIASES = {"acc": "accuracy", "ent": "entropy", "prior": "prior", "entropy": "entropy", "accuracy": "accuracy"}


class ScoringError(ValueError):
    pass


@dataclass(frozen=True)
class ScoringConfig:
    factors: frozenset[str] = frozenset()
    prior_mode: str = "uniform"
    log_base: float = math.e
    epsilon: float = 1e-6
    entropy_variant: str = "literal"

    def __post_init__(self):
        object.__setattr__(self, "factors", frozenset(self.factors))
        unknown = self.factors - set(FACTORS)
        if unknown:
            raise ScoringError(f"unknown scoring factors: {sorted(unknown)}")
        if self.prior_mode not in ("uniform", "empirical"):
            raise ScoringError(f"prior mode must be 'uniform' or 'empirical', got {self.prior_mode!r}")
        if self.entropy_variant not in ("literal", "inverse-normalized"):
            raise ScoringError(f"unknown entropy variant {self.entropy_variant!r}")
        if not self.epsilon > 0:
            raise ScoringError("entropy floor must be positive")
        if not self.log_base > 1:
            raise ScoringError("log base must exceed 1")

    @classmethod
    def parse(cls, spec: str | Iterable[str] | None, **kwargs) -> "ScoringConfig":
        """Build a config from ``"prior,entropy"``, ``"ent+acc"``, ``"all"`` or ``""``."""
        if spec is None:
            names: list[str] = []
        elif isinstance(spec, str):
            names = [t for t in spec.replace("+", ",").split(",") if t.strip()]
        else:
            names = list(spec)
        factors = set()
        for name in names:
            name = name.strip().lower()
            if name in ("all",):
                factors.update(FACTORS)
            elif name in ("none", "raw"):
                continue
            elif name in _ALIASES:
                factors.add(_ALIASES[name])
            else:
                raise ScoringError(f"unknown scoring factor {name!r}")
        return cls(factors=frozenset(factors), **kwargs)

    @property
    def tag(self) -> str:
        """Stable short name, e.g. ``raw`` or ``prior+entropy``."""
        if not self.factors:
            return "raw"
        return "+".join(f for f in FACTORS if f in self.factors)


@dataclass(frozen=True)
class WeightVector:
    group: str
    weights: tuple[float, ...]
    gamma: float


def entropy(probs: Sequence[float], base: float = math.e) -> float:
    """Shannon entropy with 0 log 0 taken as 0."""
    p = np.asarray(probs, dtype=float)
    p = p[p > 0]
    return float(-(p * np.log(p)).sum() / math.log(base))


def group_factor(kind: str, group: DecisionGroup, meta: ModelMeta, config: ScoringConfig) -> float:
    if kind == "prior":
        if config.prior_mode == "empirical":
            if meta.priors is None:
                raise ScoringError(f"empirical priors requested but model {meta.id!r} has none")
            return 1.0
        return float(group.size)
    if kind == "entropy":
        h = entropy(group.probs, config.log_base)
        if config.entropy_variant == "inverse-normalized":
            h_norm = h / (math.log(group.size) / math.log(config.log_base))
            return 1.0 / max(h_norm, config.epsilon)
        return group.size / max(h, config.epsilon)
    if kind == "accuracy":
        return float(meta.accuracy)
    raise ScoringError(f"unknown factor kind {kind!r}")


def score(group: DecisionGroup, config: ScoringConfig, meta: ModelMeta) -> WeightVector:
    gamma = 1.0
    for kind in FACTORS:
        if kind in config.factors:
            gamma *= group_factor(kind, group, meta, config)
    probs = np.asarray(group.probs, dtype=float)
    if "prior" in config.factors and config.prior_mode == "empirical":
        try:
            probs = probs / meta.prior_vector(group)
        except KeyError as exc:
            raise ScoringError(str(exc.args[0])) from None
    weights = probs * gamma
    return WeightVector(group=group.id, weights=tuple(float(w) for w in weights), gamma=gamma)


def score_instance(
    instance: Instance, config: ScoringConfig, models: Mapping[str, ModelMeta]
) -> dict[str, WeightVector]:
    return {g.id: score(g, config, models[g.model]) for g in instance.groups}
