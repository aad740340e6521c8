"""Change counts, satisfaction, set correctness and per-role accuracy/F1."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .constraints.grounding import GroundConstraint
from .constraints.linear import check_satisfaction
from .model import Assignment


class MetricsError(ValueError):
    pass


@dataclass(frozen=True)
class ChangeCounts:
    changed: int = 0
    wrong_to_right: int = 0
    right_to_wrong: int = 0
    scored: bool = True

    @property
    def plus_pct(self) -> float | None:
        if not self.scored:
            return None
        return 100.0 * self.wrong_to_right / self.changed if self.changed else 0.0

    @property
    def minus_pct(self) -> float | None:
        if not self.scored:
            return None
        return 100.0 * self.right_to_wrong / self.changed if self.changed else 0.0

    def __add__(self, other: "ChangeCounts") -> "ChangeCounts":
        return ChangeCounts(
            self.changed + other.changed,
            self.wrong_to_right + other.wrong_to_right,
            self.right_to_wrong + other.right_to_wrong,
            self.scored and other.scored,
        )


@dataclass(frozen=True)
class ChangeReport:
    """Total change count C with the +C / -C percentages over changed decisions."""

    total: ChangeCounts
    by_role: Mapping[str, ChangeCounts] = field(default_factory=dict)

    @property
    def changes(self) -> int:
        return self.total.changed

    @property
    def plus_pct(self) -> float | None:
        return self.total.plus_pct

    @property
    def minus_pct(self) -> float | None:
        return self.total.minus_pct


def _as_list(x):
    if x is None:
        return None
    return [x] if isinstance(x, Assignment) else list(x)


def evaluate_changes(
    before: Assignment | Sequence[Assignment],
    after: Assignment | Sequence[Assignment],
    gold: Assignment | Sequence[Assignment] | None = None,
    roles: Mapping[str, str] | None = None,
) -> ChangeReport:
    """Count decisions that differ between ``before`` and ``after``.

    Accepts single assignments or aligned lists of them. Without gold the
    percentages are reported as None.
    """
    before, after, gold = _as_list(before), _as_list(after), _as_list(gold)
    if len(before) != len(after) or (gold is not None and len(gold) != len(before)):
        raise MetricsError("assignment lists differ in length")
    roles = roles or {}
    per_role: dict[str, ChangeCounts] = defaultdict(lambda: ChangeCounts(scored=gold is not None))
    for n, (b, a) in enumerate(zip(before, after)):
        if set(b.choices) != set(a.choices):
            raise MetricsError(f"assignment {n}: group sets differ")
        g = gold[n] if gold is not None else None
        if g is not None and not set(b.choices) <= set(g.choices):
            raise MetricsError(f"assignment {n}: gold is missing groups")
        for gid in b.choices:
            role = roles.get(gid, gid)
            if b[gid] == a[gid]:
                per_role[role] += ChangeCounts(0, 0, 0, g is not None)
                continue
            w2r = int(g is not None and b[gid] != g[gid] and a[gid] == g[gid])
            r2w = int(g is not None and b[gid] == g[gid] and a[gid] != g[gid])
            per_role[role] += ChangeCounts(1, w2r, r2w, g is not None)
    total = ChangeCounts(scored=gold is not None)
    for counts in per_role.values():
        total += counts
    return ChangeReport(total=total, by_role=dict(sorted(per_role.items())))


def satisfaction_rate(assignment: Assignment, constraints: Sequence[GroundConstraint]) -> float:
    return check_satisfaction(assignment, constraints).rate


def set_correctness(assignments: Sequence[Assignment], golds: Sequence[Assignment | None]) -> float:
    """Percent of instances whose every decision matches gold."""
    if len(assignments) != len(golds):
        raise MetricsError("assignment and gold lists differ in length")
    if any(g is None for g in golds):
        raise MetricsError("set correctness needs gold for every instance")
    if not assignments:
        return 0.0
    correct = sum(all(g[gid] == idx for gid, idx in a.choices.items()) for a, g in zip(assignments, golds))
    return 100.0 * correct / len(assignments)


@dataclass(frozen=True)
class RoleScore:
    accuracy: float
    macro_f1: float
    count: int


def _macro_f1(pairs: Sequence[tuple[str, str]]) -> float:
    # Labels that never occur in either column are simply absent here, so
    # they drop out of the average.
    tp: dict[str, int] = defaultdict(int)
    fp: dict[str, int] = defaultdict(int)
    fn: dict[str, int] = defaultdict(int)
    for pred, true in pairs:
        if pred == true:
            tp[pred] += 1
        else:
            fp[pred] += 1
            fn[true] += 1
    labels = sorted(set(tp) | set(fp) | set(fn))
    if not labels:
        return 0.0
    f1s = []
    for lab in labels:
        denom = 2 * tp[lab] + fp[lab] + fn[lab]
        f1s.append(2 * tp[lab] / denom if denom else 0.0)
    return 100.0 * sum(f1s) / len(f1s)


def per_group_scores(
    assignments: Sequence[Assignment],
    golds: Sequence[Assignment | None],
    roles: Mapping[str, str] | None = None,
    label_names: Sequence[Mapping[str, Sequence[str]]] | None = None,
) -> dict[str, RoleScore]:
    """Accuracy and macro-F1 per group role, both in percent.

    ``label_names`` is aligned with ``assignments`` and maps each group id to
    its label list, so F1 pools classes by name across instances; without it
    label indices are used.
    """
    if len(assignments) != len(golds):
        raise MetricsError("assignment and gold lists differ in length")
    if any(g is None for g in golds):
        raise MetricsError("per-group scores need gold for every instance")
    roles = roles or {}
    pairs: dict[str, list[tuple[str, str]]] = defaultdict(list)
    for n, (a, g) in enumerate(zip(assignments, golds)):
        for gid, idx in a.choices.items():
            names = label_names[n].get(gid) if label_names else None
            pred = names[idx] if names else str(idx)
            true = names[g[gid]] if names else str(g[gid])
            pairs[roles.get(gid, gid)].append((pred, true))
    out = {}
    for role in sorted(pairs):
        ps = pairs[role]
        acc = 100.0 * sum(p == t for p, t in ps) / len(ps)
        out[role] = RoleScore(accuracy=acc, macro_f1=_macro_f1(ps), count=len(ps))
    return out
