from .grounding import (
    GroundConstraint,
    GroundingError,
    Literal,
    ground,
    ground_instance,
    hierarchy_constraints,
    transition_constraints,
)
from .linear import (
    LinearConstraint,
    SatisfactionReport,
    check_satisfaction,
    compile_constraint,
    compile_linear,
    evaluate_linear,
    evaluate_logic,
)
from .parser import ConstraintAst, ConstraintSyntaxError, Statement, parse_constraints
from .transitions import ACTIONS, default_action_transitions

__all__ = [
    "ACTIONS",
    "ConstraintAst",
    "ConstraintSyntaxError",
    "GroundConstraint",
    "GroundingError",
    "LinearConstraint",
    "Literal",
    "SatisfactionReport",
    "Statement",
    "check_satisfaction",
    "compile_constraint",
    "compile_linear",
    "default_action_transitions",
    "evaluate_linear",
    "evaluate_logic",
    "ground",
    "ground_instance",
    "hierarchy_constraints",
    "parse_constraints",
    "transition_constraints",
]
