"""Default action-transition table for procedural entity tracking.

Destroy -> Move is the canonical invalid pair. The other forbidden pairs
follow from what Prior (not yet created) and Post (already destroyed) mean.
This table is a default; instances can supply their own matrix.
"""

from __future__ import annotations

from ..model import TransitionMatrix

ACTIONS = ("Create", "Move", "Exist", "Destroy", "Prior", "Post")

# successor sets; everything else is forbidden
_ALLOWED = {
    "Create": {"Move", "Exist", "Destroy"},
    "Move": {"Move", "Exist", "Destroy"},
    "Exist": {"Move", "Exist", "Destroy"},
    "Destroy": {"Post"},
    "Prior": {"Prior", "Create"},
    "Post": {"Post"},
}


def default_action_transitions(labels: tuple[str, ...] = ACTIONS) -> TransitionMatrix:
    return TransitionMatrix(
        labels=labels,
        valid=tuple(tuple(b in _ALLOWED[a] for b in labels) for a in labels),
    )
