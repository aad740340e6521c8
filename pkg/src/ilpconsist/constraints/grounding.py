"""Expand parsed statements into concrete constraints over one instance."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

from ..model import DecisionGroup, Instance
from .parser import ConstraintAst, GroupRef, LiteralRef, Statement, parse_constraints


class GroundingError(ValueError):
    """A statement names a group or label the instance does not have."""

    def __init__(self, code: str, message: str, line: int | None = None, origin: str = "constraints"):
        self.code = code
        self.line = line
        self.origin = origin
        self.message = message
        where = f"{origin} line {line}: " if line is not None else ""
        super().__init__(f"{code} {where}{message}")


@dataclass(frozen=True, order=True)
class Literal:
    group: str
    index: int
    negated: bool = False

    def holds(self, value: bool) -> bool:
        return value != self.negated


@dataclass(frozen=True)
class GroundConstraint:
    """A statement bound to concrete variables.

    For ``imply`` the last literal is the consequent; for ``exactly_one`` the
    literals are every label of one group.
    """

    kind: str
    literals: tuple[Literal, ...]
    origin: str = "implicit"
    line: int | None = None

    @property
    def groups(self) -> frozenset[str]:
        return frozenset(lit.group for lit in self.literals)

    @property
    def structural(self) -> bool:
        """True for the per-group mutual exclusivity rows."""
        return self.kind == "exactly_one"

    def describe(self, instance: Instance | None = None) -> str:
        def name(lit: Literal) -> str:
            lab = instance.group(lit.group).labels[lit.index] if instance else str(lit.index)
            return f"{'!' if lit.negated else ''}{lit.group}.{lab}"

        if self.kind == "exactly_one":
            return f"exactly_one {self.literals[0].group}"
        if self.kind == "imply":
            ante = " & ".join(name(lit) for lit in self.literals[:-1])
            return f"imply {ante} -> {name(self.literals[-1])}"
        return f"{self.kind} " + " ".join(name(lit) for lit in self.literals)


def _exactly_one(group: DecisionGroup) -> GroundConstraint:
    return GroundConstraint(
        "exactly_one", tuple(Literal(group.id, i) for i in range(group.size)), origin="implicit"
    )


class _Grounder:
    def __init__(self, instance: Instance, origin: str):
        self.instance = instance
        self.origin = origin
        self.by_id = {g.id: g for g in instance.groups}
        self.by_step: dict[str, dict[int, DecisionGroup]] = {}
        for g in instance.groups:
            if g.sequence is not None:
                self.by_step.setdefault(g.sequence, {})[g.step] = g

    def fail(self, code: str, msg: str, stmt: Statement):
        raise GroundingError(code, msg, stmt.line, self.origin)

    def steps(self, name: str, stmt: Statement) -> dict[int, DecisionGroup]:
        if name not in self.by_step:
            self.fail("E200", f"unknown sequence {name!r}", stmt)
        return self.by_step[name]

    def resolve(self, ref: GroupRef, binding: int | None, stmt: Statement) -> DecisionGroup:
        if ref.templated:
            step = binding + ref.offset
            return self.steps(ref.name, stmt)[step]
        if ref.index is not None:
            steps = self.steps(ref.name, stmt)
            if ref.index not in steps:
                self.fail("E202", f"sequence {ref.name!r} has no step {ref.index}", stmt)
            return steps[ref.index]
        if ref.name not in self.by_id:
            self.fail("E200", f"unknown group {ref.name!r}", stmt)
        return self.by_id[ref.name]

    def literal(self, lit: LiteralRef, binding: int | None, stmt: Statement) -> Literal:
        group = self.resolve(lit.ref, binding, stmt)
        if lit.label not in group.labels:
            self.fail("E201", f"unknown label {lit.label!r} in group {group.id!r}", stmt)
        return Literal(group.id, group.labels.index(lit.label), lit.negated)

    def bindings(self, stmt: Statement) -> list[int | None]:
        refs = [lit.ref for lit in stmt.literals if lit.ref.templated]
        if stmt.kind == "forbid_seq":
            refs = [GroupRef(stmt.ref.name, 0, True), GroupRef(stmt.ref.name, 1, True)]
        if not refs:
            return [None]
        first = refs[0]
        candidates = sorted(s - first.offset for s in self.steps(first.name, stmt))
        return [
            i for i in candidates
            if all(i + r.offset in self.steps(r.name, stmt) for r in refs)
        ]

    def statement(self, stmt: Statement) -> Iterator[GroundConstraint]:
        for i in self.bindings(stmt):
            if stmt.kind == "forbid_seq":
                a, b = stmt.labels
                lits = (
                    self.literal(LiteralRef(GroupRef(stmt.ref.name, 0, True), a), i, stmt),
                    self.literal(LiteralRef(GroupRef(stmt.ref.name, 1, True), b), i, stmt),
                )
            else:
                lits = tuple(self.literal(lit, i, stmt) for lit in stmt.literals)
            yield GroundConstraint(stmt.kind, lits, origin=self.origin, line=stmt.line)

    def groups_of(self, ref: GroupRef, stmt: Statement) -> list[DecisionGroup]:
        if ref.templated:
            return [g for _, g in sorted(self.steps(ref.name, stmt).items())]
        return [self.resolve(ref, None, stmt)]


def hierarchy_constraints(instance: Instance) -> list[GroundConstraint]:
    """Child-implies-parent rows plus downward propagation of 'None' labels."""
    out = []
    for g in instance.levels():
        parent = instance.parent_group(g)
        if parent is None:
            continue
        pmap = instance.parents.get(g.id, {})
        for i, lab in enumerate(g.labels):
            if lab == g.none_label or lab not in pmap:
                continue
            out.append(GroundConstraint(
                "imply", (Literal(g.id, i), Literal(parent.id, parent.index(pmap[lab]))), origin="hierarchy"
            ))
        if g.none_index is not None and parent.none_index is not None:
            out.append(GroundConstraint(
                "imply", (Literal(parent.id, parent.none_index), Literal(g.id, g.none_index)), origin="hierarchy"
            ))
    return out


def transition_constraints(instance: Instance) -> list[GroundConstraint]:
    out = []
    for name in sorted(instance.transitions):
        matrix = instance.transitions[name]
        seq = instance.sequence(name)
        by_step = {g.step: g for g in seq}
        pairs = matrix.invalid_pairs()
        for g in seq:
            nxt = by_step.get(g.step + 1)
            if nxt is None:
                continue
            for a, b in pairs:
                out.append(GroundConstraint(
                    "forbid_seq", (Literal(g.id, g.index(a)), Literal(nxt.id, nxt.index(b))), origin="transition"
                ))
    return out


def ground(
    ast: ConstraintAst,
    instance: Instance,
    *,
    origin: str = "constraints",
    extra: ConstraintAst | None = None,
    structure: bool = True,
) -> list[GroundConstraint]:
    """Ground ``ast`` (and the instance's own statements in ``extra``).

    Order: implicit exactly-one rows in group order, file statements, instance
    statements, then hierarchy and transition rows when ``structure`` is set.
    """
    grounder = _Grounder(instance, origin)
    extra_grounder = _Grounder(instance, "instance")
    sources = [(ast, grounder)]
    if extra is not None:
        sources.append((extra, extra_grounder))

    free: set[str] = set()
    forced: set[str] = set()
    for tree, gr in sources:
        for stmt in tree.statements:
            if stmt.kind in ("free", "exactly_one"):
                ids = {g.id for g in gr.groups_of(stmt.ref, stmt)}
                (free if stmt.kind == "free" else forced).update(ids)

    out = [_exactly_one(g) for g in instance.groups if g.id not in free or g.id in forced]
    for tree, gr in sources:
        for stmt in tree.statements:
            if stmt.kind in ("free", "exactly_one"):
                continue
            out.extend(gr.statement(stmt))
    if structure:
        out.extend(hierarchy_constraints(instance))
        out.extend(transition_constraints(instance))
    return out


def ground_instance(ast: ConstraintAst, instance: Instance, *, structure: bool = True) -> list[GroundConstraint]:
    """Ground a shared program together with the instance's inline statements."""
    extra = parse_constraints(instance.constraints) if instance.constraints.strip() else None
    return ground(ast, instance, extra=extra, structure=structure)
