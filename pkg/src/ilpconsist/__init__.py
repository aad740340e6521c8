"""Consistent joint decisions over heterogeneous model outputs via 0/1 ILP."""

from .model import (
    Assignment,
    DecisionGroup,
    Instance,
    ModelMeta,
    Problem,
    TransitionMatrix,
    ValidationError,
    baseline_argmax,
    validate_problem,
)
from .scoring import ScoringConfig, WeightVector, entropy, group_factor, score
from .solver import IlpGroup, IlpProblem, SolveResult, SolverConfig, brute_force, solve

__version__ = "0.1.0"

__all__ = [
    "Assignment",
    "DecisionGroup",
    "IlpGroup",
    "IlpProblem",
    "Instance",
    "ModelMeta",
    "Problem",
    "ScoringConfig",
    "SolveResult",
    "SolverConfig",
    "TransitionMatrix",
    "ValidationError",
    "WeightVector",
    "baseline_argmax",
    "brute_force",
    "entropy",
    "group_factor",
    "score",
    "solve",
    "validate_problem",
]
