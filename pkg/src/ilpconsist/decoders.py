"""Rule-based sequential decoding baselines.

Each decoder fixes one decision and propagates it to the others rather than
optimizing globally. Hierarchy decoders read the parent map stored on the
instance; the stepwise decoder reads a transition matrix.
"""

from __future__ import annotations

from typing import Sequence

from .constraints.grounding import GroundConstraint
from .constraints.linear import assignment_value, evaluate_logic
from .model import Assignment, DecisionGroup, Instance, TransitionMatrix, argmax


class DecodingError(ValueError):
    pass


def _best_of(group: DecisionGroup, candidates: Sequence[int]) -> int:
    return max(candidates, key=lambda i: (group.probs[i], -i))


def _levels(instance: Instance) -> list[DecisionGroup]:
    levels = instance.levels()
    if not levels:
        raise DecodingError(f"instance {instance.id!r} has no hierarchy levels")
    return levels


def _parent_index(instance: Instance, child: DecisionGroup, label_idx: int) -> int:
    parent = instance.parent_group(child)
    plab = instance.parents[child.id][child.labels[label_idx]]
    return parent.index(plab)


def _finish(instance: Instance, choices: dict[str, int], tag: str) -> Assignment:
    for g in instance.groups:
        choices.setdefault(g.id, argmax(g.probs))
    return Assignment(choices, provenance=f"sequential:{tag}", instance_id=instance.id)


def decode_top_down(instance: Instance) -> Assignment:
    """Level 1 by argmax, then the most probable child of each chosen parent."""
    levels = _levels(instance)
    choices = {levels[0].id: argmax(levels[0].probs)}
    for parent, child in zip(levels, levels[1:]):
        plab = parent.labels[choices[parent.id]]
        candidates = []
        if plab != parent.none_label:
            candidates = instance.children_of(child, plab)
        if child.none_index is not None:
            candidates.append(child.none_index)
        if not candidates:
            raise DecodingError(
                f"instance {instance.id!r}: no label of {child.id!r} is consistent with {plab!r}"
            )
        choices[child.id] = _best_of(child, candidates)
    return _finish(instance, choices, "top_down")


def _propagate_up(instance: Instance, levels: list[DecisionGroup], choices: dict[str, int], start: int):
    """Fill levels ``start-1 .. 0`` from ``levels[start]`` upwards.

    A real label forces its unique parent. Above a 'None' choice there is no
    parent chain, so the level falls back to its own argmax.
    """
    for k in range(start, 0, -1):
        child, parent = levels[k], levels[k - 1]
        idx = choices[child.id]
        if idx == child.none_index:
            choices[parent.id] = argmax(parent.probs)
        else:
            choices[parent.id] = _parent_index(instance, child, idx)


def decode_bottom_up(instance: Instance) -> Assignment:
    """Deepest level by argmax; ancestors follow its parent chain."""
    levels = _levels(instance)
    deepest = levels[-1]
    choices = {deepest.id: argmax(deepest.probs)}
    _propagate_up(instance, levels, choices, len(levels) - 1)
    return _finish(instance, choices, "bottom_up")


def decode_two_stage(instance: Instance) -> Assignment:
    """Push 'None' down from the shallowest 'None' argmax, then propagate up.

    Stage 1 finds the shallowest level whose argmax is its 'None' label and
    forces every deeper level to 'None'. Stage 2 takes the argmax of the
    deepest level above it and propagates that label up the parent chain.
    """
    levels = _levels(instance)
    raw = [argmax(g.probs) for g in levels]
    cut = len(levels)
    for k, g in enumerate(levels):
        if g.none_index is not None and raw[k] == g.none_index:
            cut = k
            break
    choices: dict[str, int] = {}
    for g in levels[cut:]:
        if g.none_index is None:
            raise DecodingError(f"instance {instance.id!r}: level {g.level} has no 'None' label")
        choices[g.id] = g.none_index
    if cut == 0:
        return _finish(instance, choices, "two_stage")
    top = levels[cut - 1]
    choices[top.id] = raw[cut - 1]
    _propagate_up(instance, levels, choices, cut - 1)
    return _finish(instance, choices, "two_stage")


def _violates(gc: GroundConstraint, choices: dict[str, int]) -> bool:
    return not evaluate_logic(gc, assignment_value(choices))


def decode_stepwise(
    instance: Instance,
    transitions: TransitionMatrix | None = None,
    sequence: str | None = None,
    constraints: Sequence[GroundConstraint] = (),
) -> Assignment:
    """Repair the action sequence first to last, then pick locations.

    Step 1 keeps its argmax; every later step takes its most probable label
    that may follow the previous choice. The remaining groups are then
    visited in step order and each takes its most probable label that breaks
    none of ``constraints`` whose groups are all decided by then.
    """
    if sequence is None:
        if len(instance.transitions) != 1:
            raise DecodingError("stepwise decoding needs exactly one sequence with transitions")
        (sequence,) = instance.transitions
    if transitions is None:
        transitions = instance.transitions[sequence]
    steps = instance.sequence(sequence)
    choices: dict[str, int] = {}
    prev = None
    for g in steps:
        if prev is None:
            idx = argmax(g.probs)
        else:
            candidates = [i for i, lab in enumerate(g.labels) if transitions.allows(prev, lab)]
            if not candidates:
                raise DecodingError(f"no valid successor of {prev!r} at {g.id!r}")
            idx = _best_of(g, candidates)
        choices[g.id] = idx
        prev = g.labels[idx]

    rest = sorted(
        (g for g in instance.groups if g.id not in choices),
        key=lambda g: (g.step if g.step is not None else -1, instance.group_ids.index(g.id)),
    )
    relevant = [gc for gc in constraints if not gc.structural]
    for g in rest:
        ordered = sorted(range(g.size), key=lambda i: (-g.probs[i], i))
        for idx in ordered:
            trial = {**choices, g.id: idx}
            if not any(gc.groups <= trial.keys() and _violates(gc, trial) for gc in relevant):
                choices[g.id] = idx
                break
        else:
            raise DecodingError(f"instance {instance.id!r}: no consistent label for {g.id!r}")
    return Assignment(choices, provenance="sequential:stepwise", instance_id=instance.id)


DECODERS = {
    "top_down": decode_top_down,
    "bottom_up": decode_bottom_up,
    "two_stage": decode_two_stage,
    "stepwise": decode_stepwise,
}
