"""Random problem builders shared by the unit and acceptance tests."""

from __future__ import annotations

import random

from ilpconsist.constraints import GroundConstraint, Literal, compile_linear
from ilpconsist.solver import IlpGroup, IlpProblem


def random_ground(rng: random.Random, sizes: dict[str, int], count: int) -> list[GroundConstraint]:
    """NAND and IMPLY rows over random literals, some of them negated."""
    ids = list(sizes)
    out = []
    for _ in range(count):
        kind = rng.choice(["nand", "imply", "imply"])
        arity = 2 if kind == "nand" else rng.choice([2, 2, 3])
        lits = []
        for _ in range(arity):
            g = rng.choice(ids)
            lits.append(Literal(g, rng.randrange(sizes[g]), rng.random() < 0.2))
        out.append(GroundConstraint(kind, tuple(lits), origin="random"))
    return out


def random_problem(rng: random.Random, max_groups: int = 4, max_labels: int = 5, max_rows: int = 6):
    """A small ILP plus the ground constraints it was compiled from.

    Weights are drawn from a coarse grid half of the time so that ties,
    and with them the tie-break rule, are exercised regularly.
    """
    n = rng.randint(1, max_groups)
    coarse = rng.random() < 0.5
    groups = []
    for k in range(n):
        size = rng.randint(2, max_labels)
        if coarse:
            weights = [rng.randint(0, 4) / 4 for _ in range(size)]
        else:
            weights = [rng.random() for _ in range(size)]
        groups.append(IlpGroup(f"g{k}", tuple(weights)))
    sizes = {g.id: len(g.weights) for g in groups}
    ground = random_ground(rng, sizes, rng.randint(0, max_rows))
    exactly_one = [
        GroundConstraint("exactly_one", tuple(Literal(g, i) for i in range(s))) for g, s in sizes.items()
    ]
    return IlpProblem(tuple(groups), tuple(compile_linear(exactly_one + ground))), ground
