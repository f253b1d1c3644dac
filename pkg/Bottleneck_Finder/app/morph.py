"""
Morphological design engine.

A composite solution picks one design alternative (DA) per slot. Its
quality is the vector (w; eta_1..eta_k): w is the weakest
pairwise compatibility among the picks and eta_r counts picks at priority r.

Solutions are compared best-first (max eta, max w). Composite bottlenecks
are subsystems compared worst-first (min eta, max w): low-quality DAs
that are tightly bound together.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations, product
import logging
from typing import Iterable, Sequence

import numpy as np

from app.errors import BudgetExceededError, InputError
from app.model import (
    CompositeSolution,
    CriterionSpec,
    EstimateTable,
    MorphSystem,
    QualityVector,
    validate_system,
)
from app.utils import natural_key

logger = logging.getLogger("BottleneckFinder.morph")

SOLUTION = "solution"
BOTTLENECK = "bottleneck"
MODES = (SOLUTION, BOTTLENECK)

DA_UPGRADE = "DA-upgrade"
IC_UPGRADE = "IC-upgrade"

DEFAULT_BUDGET = 1_000_000


@dataclass(frozen=True)
class ImprovementAction:
    """Raise one picked DA to priority 1 or one picked pair to compatibility nu."""

    kind: str
    target: tuple[str, ...]
    from_level: int
    to_level: int

    @property
    def label(self) -> str:
        if self.kind == DA_UPGRADE:
            return self.target[0]
        return f"({','.join(self.target)})"

    def __str__(self) -> str:
        return f"{self.kind} {self.label}: {self.from_level} => {self.to_level}"


@dataclass(frozen=True)
class Subsystem:
    """Picks of a solution restricted to a subset of its slots."""

    parent: CompositeSolution = field(repr=False, compare=False)
    slots: tuple[str, ...]
    picks: tuple[str, ...]
    quality: QualityVector

    @property
    def label(self) -> str:
        return subsystem_label(self)


@dataclass(frozen=True)
class ActionEffect:
    action: ImprovementAction
    before: QualityVector
    after: QualityVector
    w_gain: int
    improves: bool


def subsystem_label(subsystem: Subsystem) -> str:
    return "".join(subsystem.picks)


# ----------------------------------------------------------------------------
# Quality and dominance
# ----------------------------------------------------------------------------

def _quality(system: MorphSystem, picks: Sequence[str]) -> QualityVector:
    """w over all pick pairs (nu when there is no pair) and the priority counts."""
    w = system.compat_max
    for a, b in combinations(picks, 2):
        w = min(w, system.compat_of(a, b))
    eta = [0] * system.quality_levels
    for da_id in picks:
        priority = system.da(da_id).priority
        if not 1 <= priority <= system.quality_levels:
            raise InputError(f"priority {priority} of {da_id} outside [1..{system.quality_levels}]")
        eta[priority - 1] += 1
    return QualityVector(w, tuple(eta))


def compose(system: MorphSystem, picks: Iterable[str]) -> CompositeSolution:
    """Evaluate one DA per slot.

    Args:
        system: Morphological system
        picks: DA ids in any order, exactly one per slot

    Returns:
        CompositeSolution with picks in slot order
    """
    by_slot: dict[str, str] = {}
    for da_id in picks:
        slot = system.da(da_id).slot_id
        if slot in by_slot:
            raise InputError(f"slot {slot} picked twice ({by_slot[slot]}, {da_id})")
        by_slot[slot] = da_id
    missing = [s for s in system.slots if s not in by_slot]
    if missing:
        raise InputError(f"missing pick for slot(s) {missing}")

    ordered = tuple(by_slot[s] for s in system.slots)
    return CompositeSolution(system, ordered, _quality(system, ordered))


def dominates_eta(a: Sequence[int], b: Sequence[int]) -> bool:
    """True iff every best-first prefix sum of a is >= that of b."""
    if len(a) != len(b):
        raise InputError(f"eta vectors differ in length: {len(a)} vs {len(b)}")
    if sum(a) != sum(b):
        raise InputError(f"eta vectors differ in total: {sum(a)} vs {sum(b)}")
    return bool(np.all(np.cumsum(a) >= np.cumsum(b)))


def dominates_quality(a: QualityVector, b: QualityVector, mode: str = SOLUTION) -> bool:
    """Poset dominance of quality vectors.

    Args:
        a, b: Quality vectors of equal shape
        mode: "solution" (max eta, max w) or "bottleneck" (min eta, max w)

    Returns:
        True iff a is at least as good as b under the mode
    """
    if mode not in MODES:
        raise InputError(f"unknown dominance mode {mode!r}")
    if len(a.eta) != len(b.eta) or a.total != b.total:
        raise InputError(f"quality vectors differ in shape: {a} vs {b}")
    if a.w < b.w:
        return False
    if mode == SOLUTION:
        return dominates_eta(a.eta, b.eta)
    return dominates_eta(b.eta, a.eta)


def _strictly(a: QualityVector, b: QualityVector, mode: str) -> bool:
    return a != b and dominates_quality(a, b, mode)


def _maximal(qualities: Iterable[QualityVector], mode: str) -> set[QualityVector]:
    distinct = set(qualities)
    return {q for q in distinct if not any(_strictly(o, q, mode) for o in distinct)}


# ----------------------------------------------------------------------------
# Enumeration
# ----------------------------------------------------------------------------

def enumerate_solutions(system: MorphSystem, budget: int = DEFAULT_BUDGET) -> list[CompositeSolution]:
    """Every slot-wise combination in canonical order (slot order, natural DA order)."""
    validate_system(system).raise_if_invalid("morph system")
    count = system.combination_count()
    if count > budget:
        raise BudgetExceededError(count, budget)
    choices = [sorted((a.id for a in system.alternatives_of(s)), key=natural_key) for s in system.slots]
    return [CompositeSolution(system, picks, _quality(system, picks)) for picks in product(*choices)]


def pareto_solutions(system: MorphSystem, budget: int = DEFAULT_BUDGET) -> list[CompositeSolution]:
    """Pareto-efficient compositions under (max eta, max w).

    Compositions containing an incompatible pair (w = 0) are discarded.

    Args:
        system: Morphological system
        budget: Maximum number of combinations to enumerate

    Returns:
        Efficient solutions in canonical enumeration order
    """
    candidates = enumerate_solutions(system, budget)
    feasible = [s for s in candidates if s.quality.w > 0]
    best = _maximal((s.quality for s in feasible), SOLUTION)
    result = [s for s in feasible if s.quality in best]
    logger.info(f"pareto_solutions: {len(candidates)} combinations, {len(feasible)} feasible, "
                f"{len(result)} efficient")
    return result


def improvement_actions(solution: CompositeSolution) -> list[ImprovementAction]:
    """Upgrades that would remove each weak spot of a solution.

    DA upgrades (priority -> 1) come first, then IC upgrades (w -> nu),
    both in slot order.
    """
    system = solution.system
    actions: list[ImprovementAction] = []
    for da_id in solution.picks:
        priority = system.da(da_id).priority
        if priority > 1:
            actions.append(ImprovementAction(DA_UPGRADE, (da_id,), priority, 1))
    for a, b in combinations(solution.picks, 2):
        w = system.compat_of(a, b)
        if w < system.compat_max:
            actions.append(ImprovementAction(IC_UPGRADE, (a, b), w, system.compat_max))
    logger.debug(f"improvement_actions({solution.label}): {len(actions)} actions")
    return actions


def apply_action(system: MorphSystem, action: ImprovementAction) -> MorphSystem:
    """Return a copy of the system with the action carried out."""
    if action.kind == DA_UPGRADE:
        return system.with_priority(action.target[0], action.to_level)
    if action.kind == IC_UPGRADE:
        a, b = action.target
        return system.with_compat(a, b, action.to_level)
    raise InputError(f"unknown action kind {action.kind!r}")


def action_effects(solution: CompositeSolution,
                   actions: Sequence[ImprovementAction] | None = None) -> list[ActionEffect]:
    """What-if table: quality of the solution after each single action."""
    if actions is None:
        actions = improvement_actions(solution)
    effects = []
    for action in actions:
        upgraded = compose(apply_action(solution.system, action), solution.picks)
        effects.append(ActionEffect(
            action=action,
            before=solution.quality,
            after=upgraded.quality,
            w_gain=upgraded.quality.w - solution.quality.w,
            improves=_strictly(upgraded.quality, solution.quality, SOLUTION),
        ))
    return effects


def all_subsystem_qualities(solution: CompositeSolution, subsystem_size: int) -> list[Subsystem]:
    """Every subsystem of the given size, slot subsets in lexicographic order."""
    m = len(solution.system.slots)
    if not 2 <= subsystem_size < m:
        raise InputError(f"subsystem size must satisfy 2 <= size < {m}, got {subsystem_size}")
    system = solution.system
    subsystems = []
    for indices in combinations(range(m), subsystem_size):
        slots = tuple(system.slots[i] for i in indices)
        picks = tuple(solution.picks[i] for i in indices)
        subsystems.append(Subsystem(solution, slots, picks, _quality(system, picks)))
    return subsystems


def composite_bottlenecks(solution: CompositeSolution, subsystem_size: int) -> list[Subsystem]:
    """Subsystems that are Pareto-efficient under (min eta, max w).

    Args:
        solution: Composed solution
        subsystem_size: Number of slots per subsystem, 2 <= size < slot count

    Returns:
        Maximal subsystems in slot-subset order
    """
    subsystems = all_subsystem_qualities(solution, subsystem_size)
    best = _maximal((s.quality for s in subsystems), BOTTLENECK)
    result = [s for s in subsystems if s.quality in best]
    logger.info(f"composite_bottlenecks({solution.label}, {subsystem_size}): "
                f"{[f'{s.label}{s.quality}' for s in result]}")
    return result


# ----------------------------------------------------------------------------
# Screening tables for DAs and interconnections
# ----------------------------------------------------------------------------

def _deficit_criteria(system: MorphSystem) -> tuple[CriterionSpec, ...]:
    return (
        CriterionSpec("priority_deficit", 1.0, 0.0, float(max(system.quality_levels - 1, 1)), integral=True),
        CriterionSpec("compat_deficit", 1.0, 0.0, float(system.compat_max), integral=True),
        CriterionSpec("kind", 0.0, 0.0, 1.0, integral=True),
    )


def _da_rows(solution: CompositeSolution) -> list[tuple[str, tuple[int, int, int]]]:
    system = solution.system
    rows = []
    for da_id in solution.picks:
        others = [system.compat_of(da_id, o) for o in solution.picks if o != da_id]
        weakest = min(others) if others else system.compat_max
        rows.append((da_id, (system.da(da_id).priority - 1, system.compat_max - weakest, 0)))
    return rows


def _ic_rows(solution: CompositeSolution) -> list[tuple[str, tuple[int, int, int]]]:
    system = solution.system
    rows = []
    for a, b in combinations(solution.picks, 2):
        worse = max(system.da(a).priority, system.da(b).priority)
        rows.append((f"{a}-{b}", (worse - 1, system.compat_max - system.compat_of(a, b), 1)))
    return rows


def _table(rows: list[tuple[str, tuple[int, int, int]]], system: MorphSystem) -> EstimateTable:
    return EstimateTable.build([r[0] for r in rows], _deficit_criteria(system), [r[1] for r in rows])


def da_estimates(solution: CompositeSolution) -> EstimateTable:
    """Deficit estimates of the picked DAs (larger = weaker)."""
    return _table(_da_rows(solution), solution.system)


def ic_estimates(solution: CompositeSolution) -> EstimateTable:
    """Deficit estimates of the picked interconnections."""
    return _table(_ic_rows(solution), solution.system)


def joint_estimates(solution: CompositeSolution) -> EstimateTable:
    """DA rows followed by interconnection rows in one table."""
    return _table(_da_rows(solution) + _ic_rows(solution), solution.system)
