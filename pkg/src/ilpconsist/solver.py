"""Exact 0/1 maximization over exactly-one groups.

The search branches on whole groups instead of single variables. Every
linear row is kept as ``sum <= rhs`` and, for each group it touches, as a
map from label index to coefficient. Since exactly one label per group is
on, a group's contribution to a row is the coefficient of its chosen label
(0 when the label is absent from the row), so the minimum contribution over a
label domain gives a sound lower bound on the row's left-hand side.
"""

from __future__ import annotations

import itertools
import math
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .constraints.linear import LinearConstraint
from .model import Assignment

DEFAULT_NODE_LIMIT = 10**7
BRUTE_FORCE_LIMIT = 10**6
TIE_EPS = 1e-12


class SearchSpaceError(ValueError):
    """Raised when brute force would enumerate more than its guard allows."""


@dataclass(frozen=True)
class IlpGroup:
    id: str
    weights: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))


@dataclass(frozen=True)
class IlpProblem:
    groups: tuple[IlpGroup, ...]
    constraints: tuple[LinearConstraint, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "groups", tuple(self.groups))
        object.__setattr__(self, "constraints", tuple(self.constraints))
        sizes = {}
        for g in self.groups:
            if g.id in sizes:
                raise ValueError(f"duplicate group {g.id!r}")
            if not g.weights:
                raise ValueError(f"group {g.id!r} has no variables")
            if not all(math.isfinite(w) for w in g.weights):
                raise ValueError(f"group {g.id!r} has non-finite weights")
            sizes[g.id] = len(g.weights)
        for row in self.constraints:
            for (gid, idx), _ in row.terms:
                if gid not in sizes or not 0 <= idx < sizes[gid]:
                    raise ValueError(f"constraint references unknown variable {gid}.{idx}")

    @classmethod
    def from_weights(cls, weights, constraints: Iterable[LinearConstraint] = ()) -> "IlpProblem":
        """Build from ``{group id: WeightVector}`` or an iterable of weight vectors."""
        vectors = weights.values() if isinstance(weights, Mapping) else weights
        return cls(tuple(IlpGroup(w.group, w.weights) for w in vectors), tuple(constraints))

    @property
    def search_space(self) -> int:
        return math.prod(len(g.weights) for g in self.groups)


@dataclass(frozen=True)
class SolverConfig:
    node_limit: int = DEFAULT_NODE_LIMIT


@dataclass(frozen=True)
class SolveResult:
    status: str
    assignment: Assignment | None
    objective: float | None
    nodes: int
    wall_time: float = field(default=0.0, compare=False)

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def _is_structural(row: LinearConstraint, sizes: Mapping[str, int]) -> bool:
    # sum over one whole group == 1 duplicates the built-in exactly-one rule
    if row.comparator != "=" or row.rhs != 1:
        return False
    gids = {gid for (gid, _), _ in row.terms}
    if len(gids) != 1:
        return False
    (gid,) = gids
    return len(row.terms) == sizes[gid] and all(c == 1 for _, c in row.terms)


class _Compiled:
    def __init__(self, problem: IlpProblem):
        self.ids = [g.id for g in problem.groups]
        self.weights = [g.weights for g in problem.groups]
        self.n = len(self.ids)
        index = {gid: k for k, gid in enumerate(self.ids)}
        sizes = {g.id: len(g.weights) for g in problem.groups}
        self.rows: list[tuple[dict[int, dict[int, int]], int]] = []
        for row in problem.constraints:
            if _is_structural(row, sizes):
                continue
            if row.comparator in ("<=", "="):
                self.rows.append(self._row(row.terms, 1, row.rhs, index))
            if row.comparator in (">=", "="):
                self.rows.append(self._row(row.terms, -1, -row.rhs, index))
        self.group_rows: list[list[int]] = [[] for _ in range(self.n)]
        # rows to revisit when a label leaves a domain
        self.label_rows: list[dict[int, list[int]]] = [{} for _ in range(self.n)]
        # (labels covered, row), widest first: a row whose labels cover the
        # whole domain loses its zero contribution and must be revisited
        self.cover_rows: list[list[tuple[int, int]]] = [[] for _ in range(self.n)]
        for r, (cmap, _) in enumerate(self.rows):
            for k, coefs in cmap.items():
                self.group_rows[k].append(r)
                self.cover_rows[k].append((len(coefs), r))
                for lab in coefs:
                    self.label_rows[k].setdefault(lab, []).append(r)
        for cover in self.cover_rows:
            cover.sort(key=lambda t: -t[0])
        # labels by descending weight, lowest index first on ties
        self.by_weight = [
            sorted(range(len(w)), key=lambda i, w=w: (-w[i], i)) for w in self.weights
        ]
        self.order = sorted(range(self.n), key=lambda k: (-self._spread(k), k))

    @staticmethod
    def _row(terms, sign, rhs, index):
        cmap: dict[int, dict[int, int]] = {}
        for (gid, idx), c in terms:
            labels = cmap.setdefault(index[gid], {})
            labels[idx] = labels.get(idx, 0) + sign * c
        return cmap, rhs

    def _spread(self, k: int) -> float:
        top = [self.weights[k][i] for i in self.by_weight[k][:2]]
        return top[0] - top[1] if len(top) > 1 else top[0]

    def full_domains(self) -> list[frozenset[int]]:
        return [frozenset(range(len(w))) for w in self.weights]

    def propagate(self, domains: list[frozenset[int]], rows: Iterable[int]) -> bool:
        """Shrink domains in place until every row is bound-consistent.

        Returns False when some row cannot be satisfied or a domain empties.
        """
        pending = deque(rows)
        queued = set(pending)
        while pending:
            r = pending.popleft()
            queued.discard(r)
            cmap, rhs = self.rows[r]
            mins = {}
            total = 0
            for k, coefs in cmap.items():
                dom = domains[k]
                low = None
                seen = 0
                for lab, c in coefs.items():
                    if lab in dom:
                        seen += 1
                        if low is None or c < low:
                            low = c
                if seen < len(dom):
                    low = 0 if low is None else min(low, 0)
                mins[k] = low
                total += low
            if total > rhs:
                return False
            for k, coefs in cmap.items():
                slack = rhs - (total - mins[k])
                dom = domains[k]
                if slack >= 0:
                    drop = [lab for lab, c in coefs.items() if c > slack and lab in dom]
                    if not drop:
                        continue
                    new = dom.difference(drop)
                else:
                    new = frozenset(lab for lab, c in coefs.items() if c <= slack and lab in dom)
                    if len(new) == len(dom):
                        continue
                if not new:
                    return False
                for r2 in self.triggered(k, dom, new):
                    if r2 not in queued:
                        queued.add(r2)
                        pending.append(r2)
                domains[k] = new
        return True

    def triggered(self, k: int, old: frozenset[int], new: frozenset[int]) -> list[int]:
        """Rows whose bound may change when group ``k`` shrinks from ``old`` to ``new``."""
        out = []
        by_label = self.label_rows[k]
        for lab in old.difference(new):
            out.extend(by_label.get(lab, ()))
        size = len(new)
        for covered, r in self.cover_rows[k]:
            if covered < size:
                break
            out.append(r)
        return out

    def best_in(self, k: int, dom: frozenset[int]) -> float:
        for lab in self.by_weight[k]:
            if lab in dom:
                return self.weights[k][lab]
        raise AssertionError("empty domain")

    def satisfied(self, choice: Sequence[int]) -> bool:
        for cmap, rhs in self.rows:
            lhs = 0
            for k, coefs in cmap.items():
                lhs += coefs.get(choice[k], 0)
            if lhs > rhs:
                return False
        return True

    def objective(self, choice: Sequence[int]) -> float:
        return math.fsum(self.weights[k][choice[k]] for k in range(self.n))

    def assignment(self, choice: Sequence[int], provenance: str, instance_id: str | None) -> Assignment:
        return Assignment(dict(zip(self.ids, choice)), provenance=provenance, instance_id=instance_id)


def _tol(value: float) -> float:
    return TIE_EPS * max(1.0, abs(value))


def _better(obj: float, choice: tuple[int, ...], best_obj: float | None, best: tuple[int, ...] | None) -> bool:
    """Strictly larger objective, or a tie broken toward the smaller index tuple."""
    if best is None:
        return True
    if obj > best_obj + _tol(best_obj):
        return True
    return abs(obj - best_obj) <= _tol(best_obj) and choice < best


class _NodeLimit(Exception):
    pass


class _Search:
    def __init__(self, comp: _Compiled, node_limit: int):
        self.c = comp
        self.node_limit = node_limit
        self.nodes = 0
        self.best: tuple[int, ...] | None = None
        self.best_obj: float | None = None
        self.chosen = [-1] * comp.n

    def lex_worse(self, domains: list[frozenset[int]]) -> bool:
        # True when every completion is lexicographically after the incumbent
        for k in range(self.c.n):
            dom = domains[k]
            if len(dom) != 1:
                return False
            (lab,) = dom
            if lab != self.best[k]:
                return lab > self.best[k]
        return True

    def run(self, domains: list[frozenset[int]], depth: int, acc: float):
        self.nodes += 1
        if self.nodes > self.node_limit:
            raise _NodeLimit
        c = self.c
        if depth == c.n:
            choice = tuple(self.chosen)
            if c.satisfied(choice):
                obj = c.objective(choice)
                if _better(obj, choice, self.best_obj, self.best):
                    self.best, self.best_obj = choice, obj
            return
        if self.best is not None:
            bound = acc + sum(c.best_in(k, domains[k]) for k in c.order[depth:])
            tol = _tol(self.best_obj)
            if bound < self.best_obj - tol:
                return
            if bound <= self.best_obj + tol and self.lex_worse(domains):
                return
        k = c.order[depth]
        dom = domains[k]
        rest = acc + sum(c.best_in(j, domains[j]) for j in c.order[depth + 1 :])
        for lab in c.by_weight[k]:
            if lab not in dom:
                continue
            # labels come by descending weight, so no later sibling can do better
            if self.best is not None and rest + c.weights[k][lab] < self.best_obj - _tol(self.best_obj):
                break
            child = list(domains)
            child[k] = frozenset((lab,))
            if not c.propagate(child, c.triggered(k, dom, child[k])):
                continue
            self.chosen[k] = lab
            self.run(child, depth + 1, acc + c.weights[k][lab])
        self.chosen[k] = -1


def solve(
    problem: IlpProblem,
    config: SolverConfig | None = None,
    *,
    provenance: str = "ilp",
    instance_id: str | None = None,
) -> SolveResult:
    """Maximize the total weight of one chosen label per group.

    Among equal-objective optima the lexicographically smallest tuple of
    label indices (in group order) is returned. Status is ``optimal``,
    ``infeasible`` or ``node-limit``; in the last case the assignment is the
    best one found so far, if any.
    """
    config = config or SolverConfig()
    start = time.perf_counter()
    comp = _Compiled(problem)
    search = _Search(comp, config.node_limit)
    domains = comp.full_domains()
    status = "optimal"
    if comp.n and comp.propagate(domains, range(len(comp.rows))):
        try:
            search.run(domains, 0, 0.0)
        except _NodeLimit:
            status = "node-limit"
    elif not comp.n:
        search.best, search.best_obj = (), 0.0
    if search.best is None and status == "optimal":
        status = "infeasible"
    assignment = None
    if search.best is not None:
        assignment = comp.assignment(search.best, provenance, instance_id)
    return SolveResult(
        status=status,
        assignment=assignment,
        objective=search.best_obj,
        nodes=search.nodes,
        wall_time=time.perf_counter() - start,
    )


def brute_force(
    problem: IlpProblem,
    *,
    limit: int = BRUTE_FORCE_LIMIT,
    provenance: str = "brute-force",
    instance_id: str | None = None,
) -> SolveResult:
    """Enumerate every joint assignment; the verification oracle for solve()."""
    space = problem.search_space
    if space > limit:
        raise SearchSpaceError(f"search space {space} exceeds brute-force limit {limit}")
    start = time.perf_counter()
    ids = [g.id for g in problem.groups]
    weights = [g.weights for g in problem.groups]
    rows = problem.constraints
    best = best_obj = None
    count = 0
    # product() yields tuples in lexicographic order, so on ties the first wins
    for choice in itertools.product(*(range(len(w)) for w in weights)):
        count += 1
        chosen = dict(zip(ids, choice))
        value = lambda var: int(chosen[var[0]] == var[1])  # noqa: E731
        if not all(row.holds(value) for row in rows):
            continue
        obj = math.fsum(w[i] for w, i in zip(weights, choice))
        if best is None or obj > best_obj + _tol(best_obj):
            best, best_obj = choice, obj
    return SolveResult(
        status="optimal" if best is not None else "infeasible",
        assignment=None if best is None else Assignment(dict(zip(ids, best)), provenance, instance_id),
        objective=best_obj,
        nodes=count,
        wall_time=time.perf_counter() - start,
    )


def upper_bound(problem: IlpProblem, partial: Mapping[str, int]) -> float | None:
    """Bound the search uses at a node with the groups in ``partial`` fixed.

    Returns None when propagation proves the node infeasible.
    """
    comp = _Compiled(problem)
    domains = comp.full_domains()
    index = {gid: k for k, gid in enumerate(comp.ids)}
    for gid, lab in partial.items():
        domains[index[gid]] = frozenset((lab,))
    if not comp.propagate(domains, range(len(comp.rows))):
        return None
    return sum(comp.best_in(k, domains[k]) for k in range(comp.n))
