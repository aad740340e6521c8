"""Compile ground constraints to linear rows over 0/1 variables and check them."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

from ..model import Assignment
from .grounding import GroundConstraint, Literal

VarRef = tuple[str, int]


@dataclass(frozen=True)
class LinearConstraint:
    """``sum(coef * y[var]) <comparator> rhs`` with integer coefficients."""

    terms: tuple[tuple[VarRef, int], ...]
    comparator: str
    rhs: int

    def __post_init__(self):
        if self.comparator not in ("<=", "=", ">="):
            raise ValueError(f"bad comparator {self.comparator!r}")
        if not self.terms or any(c == 0 for _, c in self.terms):
            raise ValueError("linear constraint needs at least one non-zero term")

    def lhs(self, value: Callable[[VarRef], int]) -> int:
        return sum(c * value(v) for v, c in self.terms)

    def holds(self, value: Callable[[VarRef], int]) -> bool:
        lhs = self.lhs(value)
        if self.comparator == "<=":
            return lhs <= self.rhs
        if self.comparator == ">=":
            return lhs >= self.rhs
        return lhs == self.rhs

    def __str__(self):
        parts = []
        for (g, i), c in self.terms:
            sign = "-" if c < 0 else "+"
            mag = "" if abs(c) == 1 else f"{abs(c)}*"
            parts.append(f"{sign} {mag}y[{g}.{i}]")
        text = " ".join(parts)
        text = text[2:] if text.startswith("+ ") else "-" + text[2:]
        return f"{text} {self.comparator} {self.rhs}"


def _linear_sum(literals: Iterable[Literal], sign: int = 1) -> tuple[dict[VarRef, int], int]:
    """Expand literals; a negated literal contributes ``1 - y``."""
    coefs: dict[VarRef, int] = {}
    const = 0
    for lit in literals:
        var = (lit.group, lit.index)
        if lit.negated:
            const += sign
            coefs[var] = coefs.get(var, 0) - sign
        else:
            coefs[var] = coefs.get(var, 0) + sign
    return coefs, const


def _merge(*parts: tuple[dict[VarRef, int], int]) -> tuple[dict[VarRef, int], int]:
    coefs: dict[VarRef, int] = {}
    const = 0
    for c, k in parts:
        const += k
        for v, x in c.items():
            coefs[v] = coefs.get(v, 0) + x
    return coefs, const


def compile_constraint(gc: GroundConstraint) -> LinearConstraint | None:
    """Linear form of one ground constraint; None when it is a tautology."""
    lits = gc.literals
    if gc.kind == "exactly_one":
        (coefs, const), cmp, bound = _linear_sum(lits), "=", 1
    elif gc.kind == "at_most_one":
        (coefs, const), cmp, bound = _linear_sum(lits), "<=", 1
    elif gc.kind == "or":
        (coefs, const), cmp, bound = _linear_sum(lits), ">=", 1
    elif gc.kind in ("nand", "forbid_seq"):
        (coefs, const), cmp, bound = _linear_sum(lits), "<=", 1
    elif gc.kind == "imply":
        ante, cons = lits[:-1], lits[-1]
        coefs, const = _merge(_linear_sum(ante), _linear_sum([cons], -1))
        cmp, bound = "<=", len(ante) - 1
    elif gc.kind == "iff":
        coefs, const = _merge(_linear_sum(lits[:1]), _linear_sum(lits[1:], -1))
        cmp, bound = "=", 0
    else:
        raise ValueError(f"unknown constraint kind {gc.kind!r}")

    rhs = bound - const
    terms = tuple((v, c) for v, c in coefs.items() if c != 0)
    if terms:
        return LinearConstraint(terms, cmp, rhs)
    satisfied = {"<=": 0 <= rhs, ">=": 0 >= rhs, "=": rhs == 0}[cmp]
    if satisfied:
        return None
    # Every variable cancelled and the row is contradictory: keep an
    # equivalent infeasible row on one of the variables.
    var = (lits[0].group, lits[0].index)
    return LinearConstraint(((var, 1),), "<=", -1)


def compile_linear(constraints: Iterable[GroundConstraint]) -> list[LinearConstraint]:
    out = []
    for gc in constraints:
        row = compile_constraint(gc)
        if row is not None:
            out.append(row)
    return out


def evaluate_logic(gc: GroundConstraint, value: Callable[[VarRef], int]) -> bool:
    """Truth of ``gc`` under an arbitrary 0/1 valuation of its variables."""
    truth = [lit.holds(bool(value((lit.group, lit.index)))) for lit in gc.literals]
    if gc.kind == "exactly_one":
        return sum(truth) == 1
    if gc.kind == "at_most_one":
        return sum(truth) <= 1
    if gc.kind == "or":
        return any(truth)
    if gc.kind in ("nand", "forbid_seq"):
        return not all(truth)
    if gc.kind == "imply":
        return (not all(truth[:-1])) or truth[-1]
    if gc.kind == "iff":
        return truth[0] == truth[1]
    raise ValueError(f"unknown constraint kind {gc.kind!r}")


def evaluate_linear(gc: GroundConstraint, value: Callable[[VarRef], int]) -> bool:
    row = compile_constraint(gc)
    return True if row is None else row.holds(value)


@dataclass(frozen=True)
class SatisfactionReport:
    results: tuple[bool, ...]

    @property
    def total(self) -> int:
        return len(self.results)

    @property
    def satisfied(self) -> int:
        return sum(self.results)

    @property
    def rate(self) -> float:
        """Percent satisfied; an empty list counts as fully satisfied."""
        if not self.results:
            return 100.0
        return 100.0 * self.satisfied / self.total


def assignment_value(assignment: Assignment | Mapping[str, int]) -> Callable[[VarRef], int]:
    choices = assignment.choices if isinstance(assignment, Assignment) else assignment

    def value(var: VarRef) -> int:
        group, index = var
        if group not in choices:
            raise KeyError(f"assignment is missing group {group!r}")
        return int(choices[group] == index)

    return value


def check_satisfaction(
    assignment: Assignment | Mapping[str, int], constraints: Sequence[GroundConstraint]
) -> SatisfactionReport:
    value = assignment_value(assignment)
    return SatisfactionReport(tuple(evaluate_logic(gc, value) for gc in constraints))
