"""JSON document formats and the input loader.

Every document carries ``schema_version``; readers reject versions they do
not know. Writers use sorted keys and fixed indentation so identical data
always serializes to identical bytes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping, Sequence

from .constraints import (
    ConstraintAst,
    ConstraintSyntaxError,
    GroundConstraint,
    GroundingError,
    LinearConstraint,
    compile_linear,
    default_action_transitions,
    ground_instance,
    parse_constraints,
)
from .model import (
    Assignment,
    DecisionGroup,
    Instance,
    ModelMeta,
    Problem,
    TransitionMatrix,
    ValidationError,
    validate_problem,
)

SCHEMA_VERSION = 1


class InputError(ValueError):
    """Consolidated list of everything wrong with a set of input files."""

    def __init__(self, errors: Sequence[str]):
        self.errors = list(errors)
        super().__init__("\n".join(self.errors))


def dumps(doc: Mapping[str, Any]) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def write_json(path: str | Path, doc: Mapping[str, Any]) -> None:
    Path(path).write_text(dumps(doc), encoding="utf-8")


def read_json(path: str | Path, kind: str) -> dict:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise InputError([f"{kind}: file not found: {path}"]) from None
    except json.JSONDecodeError as exc:
        raise InputError([f"{kind}: malformed JSON in {path}: {exc}"]) from None
    if not isinstance(doc, dict):
        raise InputError([f"{kind}: top level of {path} must be an object"])
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise InputError([f"{kind}: schema_version {version!r} in {path}, expected {SCHEMA_VERSION}"])
    return doc


# -- predictions -------------------------------------------------------------


def _group_from_doc(d: Mapping[str, Any]) -> DecisionGroup:
    return DecisionGroup(
        id=d["id"],
        labels=tuple(d["labels"]),
        probs=tuple(d["probs"]),
        model=d["model"],
        level=d.get("level"),
        sequence=d.get("sequence"),
        step=d.get("step"),
        none_label=d.get("none_label"),
        role=d.get("role"),
    )


def _group_to_doc(g: DecisionGroup) -> dict:
    d = {"id": g.id, "labels": list(g.labels), "probs": list(g.probs), "model": g.model}
    for key in ("level", "sequence", "step", "none_label", "role"):
        value = getattr(g, key)
        if value is not None:
            d[key] = value
    return d


def _transitions_from_doc(d: Mapping[str, Any]) -> dict[str, TransitionMatrix]:
    out = {}
    for name, spec in d.items():
        if spec == "default":
            out[name] = default_action_transitions()
        else:
            out[name] = TransitionMatrix(tuple(spec["labels"]), tuple(tuple(r) for r in spec["valid"]))
    return out


def gold_from_labels(instance_groups: Sequence[DecisionGroup], labels: Mapping[str, str], iid: str) -> Assignment:
    by_id = {g.id: g for g in instance_groups}
    choices = {}
    errs = []
    for gid, lab in labels.items():
        g = by_id.get(gid)
        if g is None:
            errs.append(f"instance {iid!r}: gold names unknown group {gid!r}")
        elif lab not in g.labels:
            errs.append(f"instance {iid!r}: gold label {lab!r} is not a label of {gid!r}")
        else:
            choices[gid] = g.labels.index(lab)
    if errs:
        raise InputError(errs)
    return Assignment(choices, provenance="gold", instance_id=iid)


def _instance_from_doc(d: Mapping[str, Any], gold: Mapping[str, str] | None) -> Instance:
    groups = tuple(_group_from_doc(g) for g in d["groups"])
    labels = gold if gold is not None else d.get("gold")
    return Instance(
        id=d["id"],
        groups=groups,
        gold=gold_from_labels(groups, labels, d["id"]) if labels is not None else None,
        parents=d.get("parents", {}),
        transitions=_transitions_from_doc(d.get("transitions", {})),
        constraints=d.get("constraints", ""),
    )


def _instance_to_doc(inst: Instance) -> dict:
    d: dict[str, Any] = {"id": inst.id, "groups": [_group_to_doc(g) for g in inst.groups]}
    if inst.gold is not None:
        d["gold"] = inst.gold.labels(inst)
    if inst.parents:
        d["parents"] = {k: dict(v) for k, v in inst.parents.items()}
    if inst.transitions:
        d["transitions"] = {
            name: {"labels": list(m.labels), "valid": [list(r) for r in m.valid]}
            for name, m in inst.transitions.items()
        }
    if inst.constraints:
        d["constraints"] = inst.constraints
    return d


def _model_to_doc(m: ModelMeta) -> dict:
    d: dict[str, Any] = {"id": m.id, "accuracy": m.accuracy}
    if m.priors is not None:
        d["priors"] = dict(m.priors)
    return d


def problem_to_doc(problem: Problem) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "models": [_model_to_doc(m) for m in problem.models.values()],
        "instances": [_instance_to_doc(i) for i in problem.instances],
    }


def problem_from_doc(doc: Mapping[str, Any], gold: Mapping[str, Mapping[str, str]] | None = None) -> Problem:
    errs = []
    try:
        models = [ModelMeta(m["id"], float(m.get("accuracy", 1.0)), m.get("priors")) for m in doc["models"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError([f"predictions: malformed model registry ({exc!r})"]) from None
    instances = []
    for n, d in enumerate(doc.get("instances", [])):
        try:
            g = gold.get(d["id"]) if gold is not None else None
            instances.append(_instance_from_doc(d, g))
        except InputError as exc:
            errs.extend(exc.errors)
        except (KeyError, TypeError, ValueError) as exc:
            errs.append(f"predictions: malformed instance #{n} ({exc!r})")
    if errs:
        raise InputError(errs)
    try:
        return validate_problem(instances, models)
    except ValidationError as exc:
        raise InputError(exc.errors) from None


def load_predictions(path: str | Path, gold_path: str | Path | None = None) -> Problem:
    doc = read_json(path, "predictions")
    gold = None
    if gold_path is not None:
        gold = read_json(gold_path, "gold").get("gold", {})
    return problem_from_doc(doc, gold)


def write_predictions(path: str | Path, problem: Problem) -> None:
    write_json(path, problem_to_doc(problem))


# -- assignments -------------------------------------------------------------


def assignments_to_doc(
    problem: Problem, assignments: Sequence[Assignment], method: str, status: Mapping[str, str] | None = None
) -> dict:
    doc: dict[str, Any] = {
        "schema_version": SCHEMA_VERSION,
        "method": method,
        "assignments": {
            inst.id: a.labels(inst) for inst, a in zip(problem.instances, assignments)
        },
    }
    if status:
        doc["status"] = dict(status)
    return doc


def load_assignments(path: str | Path, problem: Problem) -> list[Assignment]:
    doc = read_json(path, "assignments")
    table = doc.get("assignments", {})
    out = []
    errs = []
    for inst in problem.instances:
        if inst.id not in table:
            errs.append(f"assignments: no entry for instance {inst.id!r}")
            continue
        try:
            a = gold_from_labels(inst.groups, table[inst.id], inst.id)
        except InputError as exc:
            errs.extend(exc.errors)
            continue
        missing = set(inst.group_ids) - set(a.choices)
        if missing:
            errs.append(f"assignments: instance {inst.id!r} misses groups {sorted(missing)}")
        out.append(Assignment(a.choices, provenance=doc.get("method", "file"), instance_id=inst.id))
    if errs:
        raise InputError(errs)
    return out


# -- loader ------------------------------------------------------------------


@dataclass(frozen=True)
class LoadedInputs:
    problem: Problem
    program: ConstraintAst
    grounded: Mapping[str, tuple[GroundConstraint, ...]]
    linear: Mapping[str, tuple[LinearConstraint, ...]]


def load_constraints(path: str | Path | None) -> ConstraintAst:
    if path is None:
        return ConstraintAst(())
    try:
        text = Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise InputError([f"constraints: file not found: {path}"]) from None
    try:
        return parse_constraints(text)
    except ConstraintSyntaxError as exc:
        raise InputError([f"constraints: {exc}"]) from None


def prepare(problem: Problem, program: ConstraintAst) -> LoadedInputs:
    """Ground and compile ``program`` against every instance."""
    grounded = {}
    linear = {}
    errs = []
    for inst in problem.instances:
        try:
            gcs = ground_instance(program, inst)
        except (GroundingError, ConstraintSyntaxError) as exc:
            errs.append(f"instance {inst.id!r}: {exc}")
            continue
        grounded[inst.id] = tuple(gcs)
        linear[inst.id] = tuple(compile_linear(gcs))
    if errs:
        raise InputError(errs)
    return LoadedInputs(problem, program, grounded, linear)


def load_inputs(
    predictions: str | Path,
    constraints: str | Path | None = None,
    gold: str | Path | None = None,
) -> LoadedInputs:
    errs = []
    problem = program = None
    try:
        problem = load_predictions(predictions, gold)
    except InputError as exc:
        errs.extend(exc.errors)
    try:
        program = load_constraints(constraints)
    except InputError as exc:
        errs.extend(exc.errors)
    if errs:
        raise InputError(errs)
    return prepare(problem, program)
