import itertools
import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import random_problem
from ilpconsist.constraints import GroundConstraint, Literal, check_satisfaction, compile_linear
from ilpconsist.constraints.linear import LinearConstraint
from ilpconsist.solver import (
    IlpGroup,
    IlpProblem,
    SearchSpaceError,
    SolverConfig,
    brute_force,
    solve,
    upper_bound,
)


def _same(a, b):
    if a.status != b.status:
        return False
    if a.status != "optimal":
        return True
    return abs(a.objective - b.objective) <= 1e-9 and a.assignment == b.assignment


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=300, deadline=None)
def test_matches_brute_force(seed):
    problem, ground = random_problem(random.Random(seed))
    got, ref = solve(problem), brute_force(problem)
    assert _same(got, ref), (got, ref)
    if got.optimal:
        assert check_satisfaction(got.assignment, ground).rate == 100.0
        chosen = [g.weights[got.assignment[g.id]] for g in problem.groups]
        assert got.objective == pytest.approx(math.fsum(chosen), abs=1e-9)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=150, deadline=None)
def test_upper_bound_is_admissible(seed):
    rng = random.Random(seed)
    problem, _ = random_problem(rng)
    fixed = rng.sample(problem.groups, rng.randint(0, len(problem.groups)))
    partial = {g.id: rng.randrange(len(g.weights)) for g in fixed}
    bound = upper_bound(problem, partial)
    ids = [g.id for g in problem.groups]
    best = None
    for choice in itertools.product(*(range(len(g.weights)) for g in problem.groups)):
        chosen = dict(zip(ids, choice))
        if any(chosen[g] != i for g, i in partial.items()):
            continue
        if not all(r.holds(lambda v: int(chosen[v[0]] == v[1])) for r in problem.constraints):
            continue
        obj = sum(problem.groups[k].weights[i] for k, i in enumerate(choice))
        best = obj if best is None else max(best, obj)
    if bound is None:
        assert best is None
    elif best is not None:
        assert bound >= best - 1e-12


@given(st.integers(0, 2**32 - 1), st.sampled_from([0.001, 0.5, 3.0, 1000.0]))
@settings(max_examples=100, deadline=None)
def test_positive_scaling_keeps_optimum(seed, factor):
    problem, _ = random_problem(random.Random(seed))
    scaled = IlpProblem(
        tuple(IlpGroup(g.id, tuple(w * factor for w in g.weights)) for g in problem.groups),
        problem.constraints,
    )
    a, b = solve(problem), solve(scaled)
    assert a.status == b.status
    if a.optimal:
        assert a.assignment == b.assignment


def test_unconstrained_is_argmax():
    p = IlpProblem((IlpGroup("a", (0.9, 0.1)), IlpGroup("b", (0.1, 0.2, 0.7))))
    r = solve(p)
    assert r.optimal and dict(r.assignment.choices) == {"a": 0, "b": 2}
    assert r.objective == pytest.approx(1.6)


def test_tie_break_is_lexicographic():
    p = IlpProblem((IlpGroup("a", (0.5, 0.5)), IlpGroup("b", (0.3, 0.3, 0.3))))
    assert dict(solve(p).assignment.choices) == {"a": 0, "b": 0}
    # forbid the first choice of a: (1, 0) is the smallest remaining tuple
    rows = compile_linear([GroundConstraint("nand", (Literal("a", 0), Literal("a", 0)))])
    p = IlpProblem(p.groups, rows)
    assert dict(solve(p).assignment.choices) == {"a": 1, "b": 0}


def test_infeasible():
    gcs = [
        GroundConstraint("imply", (Literal("a", 0), Literal("b", 0))),
        GroundConstraint("imply", (Literal("a", 1), Literal("b", 0))),
        GroundConstraint("nand", (Literal("b", 0), Literal("b", 0))),
    ]
    p = IlpProblem((IlpGroup("a", (0.5, 0.5)), IlpGroup("b", (0.5, 0.5))), compile_linear(gcs))
    r = solve(p)
    assert r.status == "infeasible" and r.assignment is None
    assert brute_force(p).status == "infeasible"


def test_node_limit():
    groups = tuple(IlpGroup(f"g{k}", (0.5, 0.5)) for k in range(12))
    p = IlpProblem(groups, [LinearConstraint(tuple(((f"g{k}", 0), 1) for k in range(12)), "=", 6)])
    r = solve(p, SolverConfig(node_limit=5))
    assert r.status == "node-limit" and r.nodes == 6
    assert solve(p).optimal


def test_empty_problem():
    r = solve(IlpProblem(()))
    assert r.optimal and r.objective == 0.0


def test_brute_force_guard():
    p = IlpProblem(tuple(IlpGroup(f"g{k}", (0.1,) * 10) for k in range(7)))
    with pytest.raises(SearchSpaceError):
        brute_force(p)


@pytest.mark.parametrize(
    "groups, rows",
    [
        ((IlpGroup("a", (0.5,)), IlpGroup("a", (0.5,))), ()),
        ((IlpGroup("a", ()),), ()),
        ((IlpGroup("a", (math.inf,)),), ()),
        ((IlpGroup("a", (0.5,)),), (LinearConstraint(((("a", 3), 1),), "<=", 1),)),
    ],
)
def test_problem_validation(groups, rows):
    with pytest.raises(ValueError):
        IlpProblem(groups, rows)


def test_result_metadata():
    p = IlpProblem((IlpGroup("a", (0.2, 0.8)),))
    r = solve(p, provenance="ilp:raw", instance_id="i1")
    assert r.assignment.provenance == "ilp:raw" and r.assignment.instance_id == "i1"
    assert r.nodes >= 1 and r.wall_time >= 0
