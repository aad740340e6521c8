"""Synthetic problems shaped like hierarchical and procedural tasks.

Noise model: the gold label gets a logit margin ``m`` and every label gets
independent Gumbel noise. The perturbed argmax is then a draw from
softmax(m * onehot), so baseline accuracy equals
``e^m / (e^m + N - 1)`` exactly in expectation; ``m`` is solved from the
accuracy target. A temperature controls how peaked the reported
probabilities are without moving the argmax.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Sequence

import numpy as np

from .constraints.transitions import ACTIONS, default_action_transitions
from .io import problem_from_doc, problem_to_doc
from .model import Assignment, DecisionGroup, Instance, ModelMeta, Problem, validate_problem

NONE = "None"
NOWHERE = "-"

ANIMAL_FLOWER_FOOD = {
    "animal": ("cat", "dog", "monkey", "squirrel"),
    "flower": ("daisy", "dandelion", "rose", "sunflower", "tulip"),
    "food": ("donuts", "lasagna", "pancakes", "pizza", "risotto", "salad"),
}


@dataclass(frozen=True)
class GeneratorSpec:
    """What to generate.

    ``profile`` lists output sizes: hierarchy level sizes (a 'None' label is
    counted in levels >= 2 when ``with_none``), flat group sizes, or for
    ``sequence`` the (min, max) number of real location candidates.
    """

    instances: int = 100
    profile: tuple[int, ...] = (3, 15)
    kind: str = "hierarchy"
    accuracy: tuple[float, ...] = ()
    temperature: float = 1.0
    with_none: bool = False
    steps: int = 8
    seed: int = 42

    def __post_init__(self):
        object.__setattr__(self, "profile", tuple(self.profile))
        object.__setattr__(self, "accuracy", tuple(self.accuracy))
        if self.kind not in ("flat", "hierarchy", "sequence"):
            raise ValueError(f"unknown fixture kind {self.kind!r}")
        if any(s < 2 for s in self.profile):
            raise ValueError("every output size must be at least 2")
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")
        if any(not 0 < a < 1 for a in self.accuracy):
            raise ValueError("accuracy targets must lie in (0, 1)")

    def target(self, k: int, default: float = 0.7) -> float:
        if not self.accuracy:
            return default
        return self.accuracy[min(k, len(self.accuracy) - 1)]


PRESETS = {
    "animal": GeneratorSpec(profile=(3, 15), accuracy=(0.86, 0.55)),
    "news": GeneratorSpec(profile=(16, 8), accuracy=(0.74, 0.75), with_none=True),
    "vqa": GeneratorSpec(profile=(274, 158, 63, 8), accuracy=(0.57, 0.54, 0.43, 0.3), with_none=True),
    "propara": GeneratorSpec(kind="sequence", profile=(3, 8), accuracy=(0.73, 0.68), instances=50),
}


@dataclass(frozen=True)
class GeneratedData:
    problem: Problem
    constraints: str = ""
    notes: dict = field(default_factory=dict)

    def write(self, predictions_path, constraints_path=None) -> None:
        from .io import write_predictions

        write_predictions(predictions_path, self.problem)
        if constraints_path is not None:
            with open(constraints_path, "w", encoding="utf-8") as fh:
                fh.write(self.constraints)


def margin_for(accuracy: float, size: int) -> float:
    return math.log(accuracy * (size - 1) / (1.0 - accuracy))


def noisy_probs(rng: np.random.Generator, gold: int, size: int, accuracy: float, temperature: float) -> tuple[float, ...]:
    logits = rng.gumbel(size=size)
    logits[gold] += margin_for(accuracy, size)
    z = logits / temperature
    z -= z.max()
    p = np.exp(z)
    p /= p.sum()
    return tuple(float(x) for x in p)


def _group(gid, labels, rng, gold, accuracy, temperature, **tags) -> DecisionGroup:
    return DecisionGroup(
        id=gid,
        labels=tuple(labels),
        probs=noisy_probs(rng, gold, len(labels), accuracy, temperature),
        model=tags.pop("model", f"{gid}_model"),
        **tags,
    )


def _taxonomy(spec: GeneratorSpec, rng: np.random.Generator):
    """Level label lists and child -> parent maps, fixed for the whole dataset."""
    if spec.profile == (3, 15) and not spec.with_none:
        level1 = list(ANIMAL_FLOWER_FOOD)
        level2 = [c for cs in ANIMAL_FLOWER_FOOD.values() for c in cs]
        parents = {"level2": {c: p for p, cs in ANIMAL_FLOWER_FOOD.items() for c in cs}}
        return [level1, level2], parents
    levels = []
    parents = {}
    for k, size in enumerate(spec.profile):
        real = size - 1 if spec.with_none and k > 0 else size
        labels = [f"L{k + 1}_{j}" for j in range(real)]
        if k > 0:
            above = levels[-1]
            above_real = [lab for lab in above if lab != NONE]
            picks = list(rng.permutation(len(above_real)))[: len(labels)]
            picks += list(rng.integers(0, len(above_real), size=len(labels) - len(picks)))
            parents[f"level{k + 1}"] = {lab: above_real[int(p)] for lab, p in zip(labels, picks)}
            if spec.with_none:
                labels.append(NONE)
        levels.append(labels)
    return levels, parents


def _sample_gold_path(levels, parents, with_none, rng) -> list[str]:
    children: list[dict[str, list[str]]] = []
    for k in range(1, len(levels)):
        cmap: dict[str, list[str]] = {}
        for c, p in parents[f"level{k + 1}"].items():
            cmap.setdefault(p, []).append(c)
        children.append(cmap)

    def complete(k: int, label: str) -> bool:
        # without 'None' labels every path must reach the deepest level
        if with_none or k == len(levels) - 1:
            return True
        return any(complete(k + 1, c) for c in children[k].get(label, []))

    roots = [lab for lab in levels[0] if complete(0, lab)]
    path = [roots[int(rng.integers(len(roots)))]]
    for k in range(1, len(levels)):
        prev = path[-1]
        options = [] if prev == NONE else [c for c in children[k - 1].get(prev, []) if complete(k, c)]
        if with_none:
            options.append(NONE)
        path.append(options[int(rng.integers(len(options)))])
    return path


def _hierarchy(spec: GeneratorSpec) -> GeneratedData:
    master = np.random.default_rng(spec.seed)
    levels, parents = _taxonomy(spec, master)
    seeds = np.random.SeedSequence(spec.seed).spawn(spec.instances)
    models = {f"level{k + 1}_model": ModelMeta(f"level{k + 1}_model", spec.target(k)) for k in range(len(levels))}
    instances = []
    for n, ss in enumerate(seeds):
        rng = np.random.default_rng(ss)
        path = _sample_gold_path(levels, parents, spec.with_none, rng)
        groups = []
        for k, labels in enumerate(levels):
            groups.append(_group(
                f"level{k + 1}", labels, rng, labels.index(path[k]), spec.target(k), spec.temperature,
                model=f"level{k + 1}_model", level=k + 1,
                none_label=NONE if spec.with_none and k > 0 else None,
            ))
        gold = Assignment({g.id: g.labels.index(path[k]) for k, g in enumerate(groups)}, "gold", f"h{n:05d}")
        instances.append(Instance(f"h{n:05d}", tuple(groups), gold=gold, parents=parents))
    text = "# hierarchy rows are generated from each instance's parent map\n"
    return GeneratedData(validate_problem(instances, models), text)


def _flat(spec: GeneratorSpec) -> GeneratedData:
    seeds = np.random.SeedSequence(spec.seed).spawn(spec.instances)
    models = {f"g{k}_model": ModelMeta(f"g{k}_model", spec.target(k)) for k in range(len(spec.profile))}
    instances = []
    for n, ss in enumerate(seeds):
        rng = np.random.default_rng(ss)
        groups = []
        gold = {}
        for k, size in enumerate(spec.profile):
            y = int(rng.integers(size))
            groups.append(_group(f"g{k}", [f"c{j}" for j in range(size)], rng, y, spec.target(k), spec.temperature))
            gold[f"g{k}"] = y
        instances.append(Instance(f"f{n:05d}", tuple(groups), gold=Assignment(gold, "gold", f"f{n:05d}")))
    return GeneratedData(validate_problem(instances, models))


def _gold_actions(rng: np.random.Generator, steps: int) -> list[str]:
    matrix = default_action_transitions()
    seq = [("Prior", "Create", "Exist")[int(rng.integers(3))]]
    while len(seq) < steps:
        options = [b for b in ACTIONS if matrix.allows(seq[-1], b)]
        seq.append(options[int(rng.integers(len(options)))])
    return seq


def _gold_locations(rng: np.random.Generator, actions: Sequence[str], real: Sequence[str]) -> list[str]:
    out = []
    for a in actions:
        prev = out[-1] if out else None
        if a in ("Prior", "Destroy", "Post"):
            out.append(NOWHERE)
        elif a == "Exist" and prev not in (None, NOWHERE):
            out.append(prev)
        else:
            options = [r for r in real if r != prev]
            out.append(options[int(rng.integers(len(options)))])
    return out


def coupling_constraints(locations: Sequence[str]) -> str:
    """Action/location rules for one entity, templated over steps."""
    lines = [
        "# location '-' means the entity does not exist at that step",
        *(f'imply action[i].{a} -> location[i]."{NOWHERE}"' for a in ("Prior", "Destroy", "Post")),
        *(f'nand action[i].{a} location[i]."{NOWHERE}"' for a in ("Create", "Move", "Exist")),
    ]
    for loc in locations:
        if loc == NOWHERE:
            continue
        lines.append(f'imply action[i+1].Move & location[i]."{loc}" -> !location[i+1]."{loc}"')
        lines.append(f'imply action[i+1].Exist & location[i]."{loc}" -> location[i+1]."{loc}"')
    return "\n".join(lines) + "\n"


def _sequence(spec: GeneratorSpec) -> GeneratedData:
    low, high = (spec.profile + (spec.profile[0],))[:2]
    seeds = np.random.SeedSequence(spec.seed).spawn(spec.instances)
    models = {
        "action_model": ModelMeta("action_model", spec.target(0)),
        "location_model": ModelMeta("location_model", spec.target(1)),
    }
    matrix = default_action_transitions()
    instances = []
    for n, ss in enumerate(seeds):
        rng = np.random.default_rng(ss)
        k = int(rng.integers(low, high + 1))
        locations = [NOWHERE] + [f"loc{j}" for j in range(k)]
        actions = _gold_actions(rng, spec.steps)
        places = _gold_locations(rng, actions, locations[1:])
        groups = []
        gold = {}
        for t in range(spec.steps):
            groups.append(_group(
                f"action_{t}", ACTIONS, rng, ACTIONS.index(actions[t]), spec.target(0), spec.temperature,
                model="action_model", sequence="action", step=t,
            ))
            groups.append(_group(
                f"location_{t}", locations, rng, locations.index(places[t]), spec.target(1), spec.temperature,
                model="location_model", sequence="location", step=t,
            ))
            gold[f"action_{t}"] = ACTIONS.index(actions[t])
            gold[f"location_{t}"] = locations.index(places[t])
        iid = f"p{n:05d}"
        instances.append(Instance(
            iid, tuple(groups), gold=Assignment(gold, "gold", iid),
            transitions={"action": matrix}, constraints=coupling_constraints(locations),
        ))
    text = "# action transitions come from each instance's transition matrix;\n# action/location coupling is inlined per instance\n"
    return GeneratedData(validate_problem(instances, models), text)


def generate(spec: GeneratorSpec) -> GeneratedData:
    """Deterministic synthetic data: the same spec always gives the same output."""
    if spec.kind == "flat":
        return _flat(spec)
    if spec.kind == "sequence":
        return _sequence(spec)
    return _hierarchy(spec)


def _load_data(name: str) -> dict:
    return json.loads(resources.files("ilpconsist").joinpath("data", name).read_text(encoding="utf-8"))


def heterogeneity_fixture(constrained: bool = True) -> GeneratedData:
    """Two groups (sizes 2 and 10) whose top labels are linked by a NAND.

    Raw-probability ILP keeps the small group's argmax and overrides the large
    one; the output-size prior flips that.
    """
    doc = _load_data("heterogeneity.json")
    if not constrained:
        for inst in doc["instances"]:
            inst.pop("constraints", None)
    return GeneratedData(problem_from_doc(doc))


def toy_hierarchy() -> GeneratedData:
    """Small two-level document bundled with the package."""
    doc = _load_data("toy_hierarchy.json")
    text = resources.files("ilpconsist").joinpath("data", "toy_hierarchy.constraints").read_text(encoding="utf-8")
    return GeneratedData(problem_from_doc(doc), text)


def inconsistent_fixture() -> GeneratedData:
    """Baseline breaks exactly one of four hierarchy rows (rose under animal)."""
    groups = (
        DecisionGroup("level1", ("animal", "plant"), (0.6, 0.4), "l1", level=1),
        DecisionGroup("level2", ("cat", "dog", "rose", "tulip"), (0.2, 0.1, 0.5, 0.2), "l2", level=2),
    )
    parents = {"level2": {"cat": "animal", "dog": "animal", "rose": "plant", "tulip": "plant"}}
    gold = Assignment({"level1": 1, "level2": 2}, "gold", "mixed")
    inst = Instance("mixed", groups, gold=gold, parents=parents)
    models = [ModelMeta("l1", 0.9), ModelMeta("l2", 0.6)]
    return GeneratedData(validate_problem([inst], models))


def to_document(data: GeneratedData) -> dict:
    return problem_to_doc(data.problem)
