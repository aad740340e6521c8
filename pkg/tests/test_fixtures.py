import dataclasses
import math

import pytest

from ilpconsist.fixtures import (
    PRESETS,
    GeneratorSpec,
    generate,
    heterogeneity_fixture,
    margin_for,
    to_document,
)
from ilpconsist.io import prepare
from ilpconsist.constraints import check_satisfaction, parse_constraints
from ilpconsist.model import baseline_argmax
from ilpconsist.scoring import ScoringConfig, score_instance
from ilpconsist.solver import IlpProblem, brute_force, solve


def _spec(name, **kw):
    return dataclasses.replace(PRESETS[name], **kw)


def test_generation_is_deterministic():
    a = generate(GeneratorSpec(instances=100, profile=(3, 15), seed=42))
    b = generate(GeneratorSpec(instances=100, profile=(3, 15), seed=42))
    assert to_document(a) == to_document(b)
    c = generate(GeneratorSpec(instances=100, profile=(3, 15), seed=43))
    assert to_document(a) != to_document(c)


def test_prefix_stability():
    # per-instance seeds are spawned from the master seed
    small = generate(_spec("news", instances=5))
    large = generate(_spec("news", instances=50))
    assert small.problem.instances == large.problem.instances[:5]


def test_margin_hits_accuracy():
    m = margin_for(0.86, 3)
    assert math.exp(m) / (math.exp(m) + 2) == pytest.approx(0.86)


@pytest.mark.slow
def test_level1_accuracy_over_many_instances():
    data = generate(_spec("animal", instances=10_000))
    insts = data.problem.instances
    acc = sum(baseline_argmax(i)["level1"] == i.gold["level1"] for i in insts) / len(insts)
    assert abs(acc - 0.86) <= 0.02


def test_hierarchy_presets_have_none_labels():
    data = generate(_spec("vqa", instances=3))
    inst = data.problem.instances[0]
    assert [g.size for g in inst.levels()] == [274, 158, 63, 8]
    assert [g.none_label for g in inst.levels()] == [None, "None", "None", "None"]


def test_sequence_location_sizes_vary():
    data = generate(PRESETS["propara"])
    assert len(data.problem.instances) == 50
    sizes = {i.group("location_0").size for i in data.problem.instances}
    assert len(sizes) > 1
    inst = data.problem.instances[0]
    assert len(inst.sequence("action")) == 8
    assert inst.group("action_0").labels == ("Create", "Move", "Exist", "Destroy", "Prior", "Post")


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_generated_problems_are_feasible(name):
    data = generate(_spec(name, instances=10, seed=3))
    inputs = prepare(data.problem, parse_constraints(data.constraints))
    for inst in data.problem.instances:
        w = score_instance(inst, ScoringConfig(), data.problem.models)
        assert solve(IlpProblem.from_weights([w[g.id] for g in inst.groups], inputs.linear[inst.id])).optimal
        # gold is always consistent
        assert check_satisfaction(inst.gold, inputs.grounded[inst.id]).rate == 100.0


def _hetero_outcome(data, factors):
    inputs = prepare(data.problem, parse_constraints(""))
    inst = data.problem.instances[0]
    w = score_instance(inst, ScoringConfig.parse(factors), data.problem.models)
    p = IlpProblem.from_weights([w[g.id] for g in inst.groups], inputs.linear[inst.id])
    ref, got = brute_force(p), solve(p)
    assert ref.assignment == got.assignment
    base = baseline_argmax(inst)
    return {g: got.assignment[g] != base[g] for g in ("small", "large")}


def test_heterogeneity_fixture():
    data = heterogeneity_fixture()
    sizes = {g.id: g.size for g in data.problem.instances[0].groups}
    assert sizes == {"small": 2, "large": 10}
    assert _hetero_outcome(data, "") == {"small": False, "large": True}
    assert _hetero_outcome(data, "prior") == {"small": True, "large": False}
    assert _hetero_outcome(data, "prior,entropy") == {"small": True, "large": False}
    free = heterogeneity_fixture(constrained=False)
    for factors in ("", "prior", "all"):
        assert _hetero_outcome(free, factors) == {"small": False, "large": False}


def test_bad_spec():
    with pytest.raises(ValueError):
        GeneratorSpec(kind="tree")
    with pytest.raises(ValueError):
        GeneratorSpec(accuracy=(1.2,))
