"""Ingestion -> scoring -> inference -> metrics, one instance at a time."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any, Mapping, Sequence

from .constraints import GroundConstraint, LinearConstraint
from .constraints.linear import check_satisfaction
from .decoders import DECODERS, DecodingError
from .io import LoadedInputs
from .metrics import evaluate_changes, per_group_scores, set_correctness
from .model import Assignment, Instance, ModelMeta, baseline_argmax
from .scoring import ScoringConfig, score_instance
from .solver import DEFAULT_NODE_LIMIT, IlpProblem, SolverConfig, solve


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    method: str = "ilp"
    scoring: ScoringConfig = field(default_factory=ScoringConfig)
    node_limit: int = DEFAULT_NODE_LIMIT
    jobs: int = 1

    def __post_init__(self):
        if self.method == "sequential":
            raise ConfigError("sequential method needs a strategy, e.g. sequential:top_down")
        if self.method.startswith("sequential:"):
            if self.strategy not in DECODERS:
                raise ConfigError(f"unknown sequential strategy {self.strategy!r}")
        elif self.method not in ("baseline", "ilp"):
            raise ConfigError(f"unknown method {self.method!r}")
        if self.node_limit < 1:
            raise ConfigError("node limit must be positive")

    @property
    def strategy(self) -> str | None:
        return self.method.split(":", 1)[1] if self.method.startswith("sequential:") else None

    @property
    def label(self) -> str:
        if self.method == "ilp":
            return f"ilp:{self.scoring.tag}"
        return self.method

    def check_metadata(self, instances: Sequence[Instance]) -> None:
        strategy = self.strategy
        if strategy is None:
            return
        for inst in instances:
            if strategy == "stepwise" and not inst.transitions:
                raise ConfigError(f"{self.method} needs transition metadata (instance {inst.id!r})")
            if strategy != "stepwise" and not inst.levels():
                raise ConfigError(f"{self.method} needs hierarchy metadata (instance {inst.id!r})")


@dataclass(frozen=True)
class InstanceOutcome:
    assignment: Assignment
    status: str
    nodes: int = 0


def infer_instance(
    instance: Instance,
    grounded: Sequence[GroundConstraint],
    linear: Sequence[LinearConstraint],
    models: Mapping[str, ModelMeta],
    config: RunConfig,
) -> InstanceOutcome:
    """Run one method on one instance.

    Infeasible or failed instances fall back to the baseline assignment and
    carry a non-``ok`` status.
    """
    base = baseline_argmax(instance)
    if config.method == "baseline":
        return InstanceOutcome(base, "ok")
    if config.strategy is not None:
        decoder = DECODERS[config.strategy]
        try:
            if config.strategy == "stepwise":
                a = decoder(instance, constraints=grounded)
            else:
                a = decoder(instance)
        except DecodingError:
            return InstanceOutcome(base, "decoding-error")
        return InstanceOutcome(a, "ok")
    weights = score_instance(instance, config.scoring, models)
    problem = IlpProblem.from_weights([weights[g.id] for g in instance.groups], linear)
    result = solve(
        problem, SolverConfig(config.node_limit), provenance=config.label, instance_id=instance.id
    )
    if result.status == "optimal":
        return InstanceOutcome(result.assignment, "optimal", result.nodes)
    return InstanceOutcome(base, result.status, result.nodes)


def _infer_star(args):
    return infer_instance(*args)


@dataclass(frozen=True)
class RoleReport:
    accuracy: float | None
    macro_f1: float | None
    count: int
    changes: int
    plus_pct: float | None
    minus_pct: float | None


@dataclass(frozen=True)
class EvalReport:
    method: str
    instances: int
    roles: Mapping[str, RoleReport]
    satisfaction: float
    satisfied: int
    constraints: int
    set_correctness: float | None
    changes: int
    plus_pct: float | None
    minus_pct: float | None
    average_accuracy: float | None
    weighted_accuracy: float | None
    average_f1: float | None
    status: Mapping[str, int]
    failed: tuple[str, ...] = ()

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["failed"] = list(self.failed)
        d["roles"] = {k: asdict(v) for k, v in self.roles.items()}
        d["status"] = dict(self.status)
        return d

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "EvalReport":
        d = dict(d)
        d["roles"] = {k: RoleReport(**v) for k, v in d["roles"].items()}
        d["failed"] = tuple(d.get("failed", ()))
        return cls(**d)


@dataclass(frozen=True)
class RunResult:
    config: RunConfig
    assignments: tuple[Assignment, ...]
    baseline: tuple[Assignment, ...]
    status: Mapping[str, str]
    nodes: int
    report: EvalReport

    @property
    def failed(self) -> list[str]:
        return [iid for iid, s in self.status.items() if s not in ("ok", "optimal")]


def evaluate(
    inputs: LoadedInputs,
    assignments: Sequence[Assignment],
    method: str,
    status: Mapping[str, str] | None = None,
) -> EvalReport:
    """Score ``assignments`` against gold (if present) and the baseline."""
    problem = inputs.problem
    instances = problem.instances
    roles = problem.roles()
    baseline = [baseline_argmax(inst) for inst in instances]
    golds = [inst.gold for inst in instances]
    has_gold = all(g is not None for g in golds) and bool(instances)

    satisfied = total = 0
    for inst, a in zip(instances, assignments):
        relational = [gc for gc in inputs.grounded[inst.id] if not gc.structural]
        rep = check_satisfaction(a, relational)
        satisfied += rep.satisfied
        total += rep.total
    satisfaction = 100.0 * satisfied / total if total else 100.0

    changes = evaluate_changes(baseline, list(assignments), golds if has_gold else None, roles)
    scores = {}
    if has_gold:
        names = [{g.id: g.labels for g in inst.groups} for inst in instances]
        scores = per_group_scores(list(assignments), golds, roles, names)

    role_names = sorted(set(roles.values()))
    role_reports = {}
    for role in role_names:
        ch = changes.by_role.get(role)
        sc = scores.get(role)
        role_reports[role] = RoleReport(
            accuracy=sc.accuracy if sc else None,
            macro_f1=sc.macro_f1 if sc else None,
            count=sc.count if sc else sum(1 for inst in instances for g in inst.groups if g.group_role == role),
            changes=ch.changed if ch else 0,
            plus_pct=ch.plus_pct if ch else None,
            minus_pct=ch.minus_pct if ch else None,
        )

    avg = wavg = avg_f1 = None
    if scores:
        accs = [s.accuracy for s in scores.values()]
        avg = sum(accs) / len(accs)
        wavg = sum(s.accuracy * s.count for s in scores.values()) / sum(s.count for s in scores.values())
        avg_f1 = sum(s.macro_f1 for s in scores.values()) / len(scores)

    status = dict(status or {})
    counts: dict[str, int] = {}
    for s in status.values():
        counts[s] = counts.get(s, 0) + 1
    return EvalReport(
        method=method,
        instances=len(instances),
        roles=role_reports,
        satisfaction=satisfaction,
        satisfied=satisfied,
        constraints=total,
        set_correctness=set_correctness(list(assignments), golds) if has_gold else None,
        changes=changes.changes,
        plus_pct=changes.plus_pct,
        minus_pct=changes.minus_pct,
        average_accuracy=avg,
        weighted_accuracy=wavg,
        average_f1=avg_f1,
        status=dict(sorted(counts.items())),
        failed=tuple(sorted(iid for iid, s in status.items() if s not in ("ok", "optimal"))),
    )


def run_pipeline(inputs: LoadedInputs, config: RunConfig) -> RunResult:
    problem = inputs.problem
    config.check_metadata(problem.instances)
    tasks = [
        (inst, inputs.grounded[inst.id], inputs.linear[inst.id], problem.models, config)
        for inst in problem.instances
    ]
    if config.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            outcomes = list(pool.map(_infer_star, tasks, chunksize=max(1, len(tasks) // (4 * config.jobs))))
    else:
        outcomes = [_infer_star(t) for t in tasks]
    # pool.map preserves input order
    assignments = tuple(o.assignment for o in outcomes)
    status = {inst.id: o.status for inst, o in zip(problem.instances, outcomes)}
    report = evaluate(inputs, assignments, config.label, status)
    return RunResult(
        config=config,
        assignments=assignments,
        baseline=tuple(baseline_argmax(inst) for inst in problem.instances),
        status=status,
        nodes=sum(o.nodes for o in outcomes),
        report=report,
    )


STANDARD_ROWS = ("", "accuracy", "prior", "entropy+accuracy", "prior+entropy", "all")


def standard_configs(sequential: str | None = None, **kwargs) -> list[RunConfig]:
    """Baseline, optional sequential decoder, and the six ILP scoring variants."""
    configs = [RunConfig(method="baseline", **kwargs)]
    if sequential:
        configs.append(RunConfig(method=f"sequential:{sequential}", **kwargs))
    for row in STANDARD_ROWS:
        configs.append(RunConfig(method="ilp", scoring=ScoringConfig.parse(row), **kwargs))
    return configs
