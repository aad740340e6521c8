"""Shared data model: decision groups, models, instances and assignments."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

PROB_TOLERANCE = 1e-6


class ValidationError(ValueError):
    """Raised when a problem violates one or more type invariants.

    ``errors`` holds every violation found, not only the first.
    """

    def __init__(self, errors: Sequence[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True)
class DecisionGroup:
    """One multi-class decision produced by a single model.

    ``level`` tags hierarchy groups (1 = root level); ``sequence`` and ``step``
    place the group inside a sequence so constraint templates such as
    ``action[i]`` can find it.
    """

    id: str
    labels: tuple[str, ...]
    probs: tuple[float, ...]
    model: str
    level: int | None = None
    sequence: str | None = None
    step: int | None = None
    none_label: str | None = None
    role: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "probs", tuple(float(p) for p in self.probs))

    @property
    def size(self) -> int:
        return len(self.labels)

    @property
    def none_index(self) -> int | None:
        if self.none_label is None:
            return None
        return self.labels.index(self.none_label)

    @property
    def group_role(self) -> str:
        """Name under which metrics aggregate this group across instances."""
        if self.role:
            return self.role
        if self.level is not None:
            return f"level{self.level}"
        if self.sequence is not None:
            return self.sequence
        return self.id

    def index(self, label: str) -> int:
        return self.labels.index(label)

    def problems(self) -> list[str]:
        errs = []
        where = f"group {self.id!r}"
        if len(self.labels) < 2:
            errs.append(f"{where}: needs at least 2 labels, got {len(self.labels)}")
        if len(self.labels) != len(self.probs):
            errs.append(
                f"{where}: {len(self.labels)} labels but {len(self.probs)} probabilities"
            )
        if any(not lab for lab in self.labels):
            errs.append(f"{where}: empty label")
        if len(set(self.labels)) != len(self.labels):
            errs.append(f"{where}: duplicate labels")
        if any(not (0.0 <= p <= 1.0) or np.isnan(p) for p in self.probs):
            errs.append(f"{where}: probabilities must lie in [0, 1]")
        total = sum(self.probs)
        if abs(total - 1.0) > PROB_TOLERANCE:
            verb = "exceeds" if total > 1 else "falls short of"
            errs.append(f"{where}: probability sum {total:.6g} {verb} tolerance")
        if self.none_label is not None and self.none_label not in self.labels:
            errs.append(f"{where}: none label {self.none_label!r} not in label list")
        return errs

    def normalized(self) -> "DecisionGroup":
        probs = _renormalize(self.probs)
        if probs == self.probs:
            return self
        return replace(self, probs=probs)


@dataclass(frozen=True)
class ModelMeta:
    """Expected accuracy of a model and, optionally, empirical label priors."""

    id: str
    accuracy: float = 1.0
    priors: Mapping[str, float] | None = None

    def __post_init__(self):
        if self.priors is not None:
            object.__setattr__(
                self, "priors", {k: float(v) for k, v in self.priors.items()}
            )

    def prior_vector(self, group: DecisionGroup) -> np.ndarray:
        if self.priors is None:
            raise KeyError(f"model {self.id!r} has no priors")
        missing = [lab for lab in group.labels if lab not in self.priors]
        if missing:
            raise KeyError(f"model {self.id!r} has no prior for labels {missing}")
        return np.array([self.priors[lab] for lab in group.labels])


@dataclass(frozen=True)
class TransitionMatrix:
    """Validity of moving from label ``labels[a]`` at step t to ``labels[b]`` at t+1."""

    labels: tuple[str, ...]
    valid: tuple[tuple[bool, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "valid", tuple(tuple(bool(v) for v in row) for row in self.valid))

    def allows(self, prev: str, nxt: str) -> bool:
        return self.valid[self.labels.index(prev)][self.labels.index(nxt)]

    def invalid_pairs(self) -> list[tuple[str, str]]:
        return [
            (a, b)
            for i, a in enumerate(self.labels)
            for j, b in enumerate(self.labels)
            if not self.valid[i][j]
        ]

    def problems(self) -> list[str]:
        n = len(self.labels)
        if len(self.valid) != n or any(len(row) != n for row in self.valid):
            return ["transition matrix is not square over its labels"]
        return [
            f"transition matrix: label {lab!r} has no valid successor"
            for lab, row in zip(self.labels, self.valid)
            if not any(row)
        ]


@dataclass(frozen=True)
class Assignment:
    """One chosen label index per group, tagged with where it came from."""

    choices: Mapping[str, int]
    provenance: str = "baseline"
    instance_id: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "choices", dict(self.choices))

    def __getitem__(self, group_id: str) -> int:
        return self.choices[group_id]

    def __eq__(self, other):
        if not isinstance(other, Assignment):
            return NotImplemented
        return dict(self.choices) == dict(other.choices)

    def __hash__(self):
        return hash(tuple(sorted(self.choices.items())))

    def labels(self, instance: "Instance") -> dict[str, str]:
        return {g: instance.group(g).labels[i] for g, i in self.choices.items()}


@dataclass(frozen=True)
class Instance:
    """One example: its interrelated decision groups plus optional metadata.

    ``parents`` maps a child group id to ``{child label: parent label}``; the
    parent group is the group one level up. ``transitions`` maps a sequence
    name to the validity matrix over its labels.
    """

    id: str
    groups: tuple[DecisionGroup, ...]
    gold: Assignment | None = None
    parents: Mapping[str, Mapping[str, str]] = field(default_factory=dict)
    transitions: Mapping[str, TransitionMatrix] = field(default_factory=dict)
    constraints: str = ""

    def __post_init__(self):
        object.__setattr__(self, "groups", tuple(self.groups))
        object.__setattr__(self, "parents", {k: dict(v) for k, v in self.parents.items()})
        object.__setattr__(self, "transitions", dict(self.transitions))
        object.__setattr__(self, "_by_id", {g.id: g for g in self.groups})

    def group(self, group_id: str) -> DecisionGroup:
        return self._by_id[group_id]

    @property
    def group_ids(self) -> tuple[str, ...]:
        return tuple(g.id for g in self.groups)

    def levels(self) -> list[DecisionGroup]:
        """Hierarchy groups ordered from level 1 downwards."""
        return sorted((g for g in self.groups if g.level is not None), key=lambda g: g.level)

    def sequence(self, name: str) -> list[DecisionGroup]:
        return sorted((g for g in self.groups if g.sequence == name), key=lambda g: g.step)

    def parent_group(self, group: DecisionGroup) -> DecisionGroup | None:
        if group.level is None or group.level <= 1:
            return None
        for g in self.groups:
            if g.level == group.level - 1:
                return g
        return None

    def children_of(self, child_group: DecisionGroup, parent_label: str) -> list[int]:
        """Indices of labels in ``child_group`` whose parent is ``parent_label``."""
        pmap = self.parents.get(child_group.id, {})
        return [i for i, lab in enumerate(child_group.labels) if pmap.get(lab) == parent_label]

    def problems(self, models: Mapping[str, ModelMeta]) -> list[str]:
        errs = []
        where = f"instance {self.id!r}"
        ids = [g.id for g in self.groups]
        for gid in sorted({i for i in ids if ids.count(i) > 1}):
            errs.append(f"{where}: duplicate group id {gid!r}")
        for g in self.groups:
            errs.extend(f"{where}: {e}" for e in g.problems())
            if g.model not in models:
                errs.append(f"{where}: group {g.id!r} references unknown model id {g.model!r}")
        by_id = {g.id: g for g in self.groups}
        levels = [g.level for g in self.groups if g.level is not None]
        for lv in sorted({lv for lv in levels if levels.count(lv) > 1}):
            errs.append(f"{where}: more than one group at hierarchy level {lv}")
        if self.gold is not None:
            for gid in ids:
                if gid not in self.gold.choices:
                    errs.append(f"{where}: gold assignment missing group {gid!r}")
            for gid, idx in self.gold.choices.items():
                if gid not in by_id:
                    errs.append(f"{where}: gold names unknown group {gid!r}")
                elif not 0 <= idx < by_id[gid].size:
                    errs.append(f"{where}: gold index {idx} out of range for group {gid!r}")
        errs.extend(self._hierarchy_problems(by_id))
        for name, matrix in self.transitions.items():
            errs.extend(f"{where}: sequence {name!r}: {e}" for e in matrix.problems())
            for g in self.sequence(name):
                if set(g.labels) != set(matrix.labels):
                    errs.append(
                        f"{where}: group {g.id!r} labels differ from transition labels of {name!r}"
                    )
        return errs

    def _hierarchy_problems(self, by_id: Mapping[str, DecisionGroup]) -> list[str]:
        errs = []
        where = f"instance {self.id!r}"
        for child_id, pmap in self.parents.items():
            child = by_id.get(child_id)
            if child is None:
                errs.append(f"{where}: parent map names unknown group {child_id!r}")
                continue
            parent = self.parent_group(child)
            if parent is None:
                errs.append(f"{where}: group {child_id!r} has a parent map but no parent level")
                continue
            for lab, plab in pmap.items():
                if lab not in child.labels:
                    errs.append(f"{where}: parent map names unknown label {lab!r} in {child_id!r}")
                if plab not in parent.labels or plab == parent.none_label:
                    errs.append(
                        f"{where}: dangling parent {plab!r} for label {lab!r} "
                        f"(not a label of {parent.id!r})"
                    )
        for g in self.groups:
            if g.level is None or g.level <= 1 or self.parent_group(g) is None:
                continue
            pmap = self.parents.get(g.id, {})
            for lab in g.labels:
                if lab != g.none_label and lab not in pmap:
                    errs.append(f"{where}: label {lab!r} of {g.id!r} has no parent")
        return errs


@dataclass(frozen=True)
class Problem:
    """A validated collection of instances together with the model registry."""

    instances: tuple[Instance, ...]
    models: Mapping[str, ModelMeta]

    def __post_init__(self):
        object.__setattr__(self, "instances", tuple(self.instances))
        object.__setattr__(self, "models", dict(self.models))

    def roles(self) -> dict[str, str]:
        return {g.id: g.group_role for inst in self.instances for g in inst.groups}


def _model_problems(models: Mapping[str, ModelMeta]) -> list[str]:
    errs = []
    for m in models.values():
        if not (0.0 < m.accuracy <= 1.0):
            errs.append(f"model {m.id!r}: accuracy {m.accuracy} outside (0, 1]")
        if m.priors is not None and any(v <= 0.0 or v > 1.0 for v in m.priors.values()):
            errs.append(f"model {m.id!r}: priors must lie in (0, 1]")
    return errs


def _prior_coverage_problems(instances: Iterable[Instance], models: Mapping[str, ModelMeta]) -> list[str]:
    errs = []
    seen = set()
    for inst in instances:
        for g in inst.groups:
            meta = models.get(g.model)
            if meta is None or meta.priors is None:
                continue
            key = (g.model, g.labels)
            if key in seen:
                continue
            seen.add(key)
            covered = [meta.priors[lab] for lab in g.labels if lab in meta.priors]
            if len(covered) == g.size and abs(sum(covered) - 1.0) > PROB_TOLERANCE:
                errs.append(
                    f"model {g.model!r}: priors over group {g.id!r} sum to {sum(covered):.6g}"
                )
    return errs


def validate_problem(
    instances: Iterable[Instance], models: Mapping[str, ModelMeta] | Iterable[ModelMeta]
) -> Problem:
    """Check every invariant and return a normalized, immutable problem.

    Raises ValidationError listing all violations found. Groups whose
    probabilities sum to 1 within tolerance are renormalized exactly.
    """
    if not isinstance(models, Mapping):
        models = {m.id: m for m in models}
    instances = list(instances)
    errs = _model_problems(models)
    inst_ids = [inst.id for inst in instances]
    for iid in sorted({i for i in inst_ids if inst_ids.count(i) > 1}):
        errs.append(f"duplicate instance id {iid!r}")
    for inst in instances:
        errs.extend(inst.problems(models))
    errs.extend(_prior_coverage_problems(instances, models))
    if errs:
        raise ValidationError(errs)
    normalized = [replace(inst, groups=tuple(g.normalized() for g in inst.groups)) for inst in instances]
    return Problem(instances=tuple(normalized), models=models)


def _renormalize(probs: tuple[float, ...]) -> tuple[float, ...]:
    # Exact fsum == 1 is the fixed point, which keeps validation idempotent.
    if math.fsum(probs) == 1.0:
        return probs
    total = math.fsum(probs)
    out = [p / total for p in probs]
    top = argmax(out)
    for _ in range(4):
        if math.fsum(out) == 1.0:
            break
        out[top] = 1.0 - math.fsum(out[:top] + out[top + 1:])
    return tuple(out)


def argmax(values: Sequence[float]) -> int:
    """Index of the largest value, lowest index on ties."""
    best = 0
    for i, v in enumerate(values):
        if v > values[best]:
            best = i
    return best


def baseline_argmax(instance: Instance) -> Assignment:
    """Pick each group's most probable label independently."""
    return Assignment(
        {g.id: argmax(g.probs) for g in instance.groups},
        provenance="baseline",
        instance_id=instance.id,
    )
