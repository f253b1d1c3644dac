"""
Domain types shared by all detectors, plus structural validation.

Every value is immutable after construction. Mutating helpers
(`MorphSystem.with_priority`, `MorphSystem.with_compat`, ...) return
new instances.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from itertools import combinations
import logging
from typing import Iterable, Iterator, Mapping, Sequence

import networkx as nx
import numpy as np

from app.errors import InputError
from app.utils import natural_key, natural_sorted

logger = logging.getLogger("BottleneckFinder.model")

ASCENDING = "ascending"
DESCENDING = "descending"
DIRECTIONS = (ASCENDING, DESCENDING)


# ----------------------------------------------------------------------------
# Validation report
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    """One broken invariant. `subject` names the offending slot/DA/pair/cell."""

    code: str
    subject: str
    message: str

    def __str__(self) -> str:
        return f"[{self.code}] {self.subject}: {self.message}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __len__(self) -> int:
        return len(self.violations)

    def __iter__(self) -> Iterator[Violation]:
        return iter(self.violations)

    def subjects(self) -> list[str]:
        return [v.subject for v in self.violations]

    def raise_if_invalid(self, context: str) -> None:
        """Raise InputError carrying this report when it is not empty."""
        if self.violations:
            details = "; ".join(str(v) for v in self.violations)
            raise InputError(f"invalid {context}: {details}", report=self)


# ----------------------------------------------------------------------------
# Components and estimates
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class ComponentRecord:
    """A part of the examined system; parent_id links build the hierarchy."""

    id: str
    label: str = ""
    parent_id: str | None = None


@dataclass(frozen=True)
class CriterionSpec:
    """Criticality criterion. Higher values mean more critical unless
    `direction` is "descending"."""

    id: str
    weight: float = 1.0
    scale_min: float | None = None
    scale_max: float | None = None
    direction: str = ASCENDING
    integral: bool = False

    @property
    def sign(self) -> int:
        return 1 if self.direction == ASCENDING else -1


@dataclass(frozen=True)
class EstimateTable:
    """Dense component x criterion matrix of criticality estimates.

    `values[i][j]` is the estimate of `components[i]` on `criteria[j]`;
    a None cell is a missing estimate (reported by validate_estimates).
    """

    components: tuple[str, ...]
    criteria: tuple[CriterionSpec, ...]
    values: tuple[tuple[float | None, ...], ...]
    records: tuple[ComponentRecord, ...] = ()

    @classmethod
    def build(cls, components: Sequence[str], criteria: Sequence[CriterionSpec],
              values: Iterable[Sequence[float | None]],
              records: Iterable[ComponentRecord] = ()) -> "EstimateTable":
        return cls(
            components=tuple(str(c) for c in components),
            criteria=tuple(criteria),
            values=tuple(tuple(None if v is None else float(v) for v in row) for row in values),
            records=tuple(records),
        )

    @property
    def criterion_ids(self) -> tuple[str, ...]:
        return tuple(c.id for c in self.criteria)

    def criterion(self, criterion_id: str) -> CriterionSpec:
        for spec in self.criteria:
            if spec.id == criterion_id:
                return spec
        raise InputError(f"unknown criterion {criterion_id!r}; table has {list(self.criterion_ids)}")

    def criterion_index(self, criterion_id: str) -> int:
        self.criterion(criterion_id)
        return self.criterion_ids.index(criterion_id)

    def component_index(self, component_id: str) -> int:
        try:
            return self.components.index(component_id)
        except ValueError:
            raise InputError(f"unknown component {component_id!r}") from None

    def value(self, component_id: str, criterion_id: str) -> float:
        cell = self.values[self.component_index(component_id)][self.criterion_index(criterion_id)]
        if cell is None:
            raise InputError(f"missing estimate for {component_id}/{criterion_id}")
        return cell

    def column(self, criterion_id: str) -> dict[str, float]:
        j = self.criterion_index(criterion_id)
        return {c: row[j] for c, row in zip(self.components, self.values)}

    def row(self, component_id: str) -> tuple[float | None, ...]:
        return self.values[self.component_index(component_id)]

    def matrix(self) -> np.ndarray:
        """Values as a float array (missing cells become NaN)."""
        if not self.components:
            return np.zeros((0, len(self.criteria)))
        return np.array([[np.nan if v is None else v for v in row] for row in self.values], dtype=float)

    def label(self, component_id: str) -> str:
        for record in self.records:
            if record.id == component_id:
                return record.label
        return ""

    def with_values(self, values: Iterable[Sequence[float | None]]) -> "EstimateTable":
        return EstimateTable.build(self.components, self.criteria, values, self.records)

    def with_criteria(self, criteria: Sequence[CriterionSpec]) -> "EstimateTable":
        return replace(self, criteria=tuple(criteria))


# ----------------------------------------------------------------------------
# Morphological systems
# ----------------------------------------------------------------------------

def pair_key(a: str, b: str) -> frozenset[str]:
    return frozenset((a, b))


@dataclass(frozen=True)
class DesignAlternative:
    """Candidate for one slot; priority 1 is the best level."""

    id: str
    slot_id: str
    priority: int


@dataclass(frozen=True)
class QualityVector:
    """Poset point (w; eta_1..eta_k) of a solution or subsystem."""

    w: int
    eta: tuple[int, ...]

    @property
    def total(self) -> int:
        return sum(self.eta)

    def as_list(self) -> list[int]:
        return [self.w, *self.eta]

    @classmethod
    def from_list(cls, values: Sequence[int]) -> "QualityVector":
        return cls(int(values[0]), tuple(int(v) for v in values[1:]))

    def __str__(self) -> str:
        return f"({self.w};{','.join(str(e) for e in self.eta)})"


@dataclass(frozen=True)
class MorphSystem:
    """Ordered slots, design alternatives and their pairwise compatibility.

    `compat` maps unordered DA pairs to an ordinal in [0, compat_max].
    """

    slots: tuple[str, ...]
    alternatives: tuple[DesignAlternative, ...]
    compat: Mapping[frozenset[str], int]
    quality_levels: int = 3
    compat_max: int = 3
    name: str = ""

    @classmethod
    def build(cls, slots: Sequence[str], alternatives: Iterable[DesignAlternative],
              compat: Iterable[tuple[str, str, int]], quality_levels: int = 3,
              compat_max: int = 3, name: str = "") -> "MorphSystem":
        """Build from (a, b, w) triples. A pair listed twice with different
        values is rejected."""
        table: dict[frozenset[str], int] = {}
        for a, b, w in compat:
            key = pair_key(a, b)
            if key in table and table[key] != int(w):
                raise InputError(f"conflicting compatibility for pair ({a},{b}): {table[key]} vs {w}")
            table[key] = int(w)
        return cls(tuple(slots), tuple(alternatives), table, quality_levels, compat_max, name)

    @property
    def priority_scale(self) -> int:
        return self.quality_levels

    def da(self, da_id: str) -> DesignAlternative:
        for alt in self.alternatives:
            if alt.id == da_id:
                return alt
        raise InputError(f"unknown design alternative {da_id!r}")

    def alternatives_of(self, slot_id: str) -> tuple[DesignAlternative, ...]:
        return tuple(a for a in self.alternatives if a.slot_id == slot_id)

    def slot_index(self, slot_id: str) -> int:
        try:
            return self.slots.index(slot_id)
        except ValueError:
            raise InputError(f"unknown slot {slot_id!r}") from None

    def compat_of(self, a: str, b: str) -> int:
        try:
            return self.compat[pair_key(a, b)]
        except KeyError:
            raise InputError(f"missing compatibility for pair ({a},{b})") from None

    def combination_count(self) -> int:
        count = 1
        for slot in self.slots:
            count *= len(self.alternatives_of(slot))
        return count

    def compat_triples(self) -> list[tuple[str, str, int]]:
        """Compat entries as (a, b, w), ordered by slot then DA position."""
        order = {alt.id: i for i, alt in enumerate(self._ordered_alternatives())}
        triples = []
        for key, w in self.compat.items():
            a, b = sorted(key, key=lambda d: (order.get(d, len(order)), natural_key(d)))
            triples.append((a, b, w))
        triples.sort(key=lambda t: (order.get(t[0], len(order)), order.get(t[1], len(order))))
        return triples

    def _ordered_alternatives(self) -> list[DesignAlternative]:
        rank = {s: i for i, s in enumerate(self.slots)}
        return sorted(self.alternatives, key=lambda a: (rank.get(a.slot_id, len(rank)), natural_key(a.id)))

    def with_priority(self, da_id: str, priority: int) -> "MorphSystem":
        self.da(da_id)
        alts = tuple(replace(a, priority=priority) if a.id == da_id else a for a in self.alternatives)
        return replace(self, alternatives=alts)

    def with_compat(self, a: str, b: str, w: int) -> "MorphSystem":
        table = dict(self.compat)
        table[pair_key(a, b)] = int(w)
        return replace(self, compat=table)

    def skeleton(self) -> tuple:
        """Structure without the ordinal estimates."""
        return (self.slots,
                tuple(sorted((a.id, a.slot_id) for a in self.alternatives)),
                frozenset(self.compat.keys()),
                self.quality_levels, self.compat_max)


@dataclass(frozen=True)
class CompositeSolution:
    """One DA per slot (in slot order) and the resulting quality."""

    system: MorphSystem = field(repr=False, compare=False)
    picks: tuple[str, ...]
    quality: QualityVector

    @property
    def label(self) -> str:
        return "".join(self.picks)

    def pick_for(self, slot_id: str) -> str:
        return self.picks[self.system.slot_index(slot_id)]


# ----------------------------------------------------------------------------
# Graphs
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class Graph:
    """Undirected graph with optional (primary, secondary) edge costs."""

    nodes: tuple[str, ...]
    edges: tuple[tuple[str, str], ...]
    costs: Mapping[frozenset[str], tuple[float, float]] = field(default_factory=dict)

    @classmethod
    def build(cls, nodes: Iterable, edges: Iterable[Sequence],
              costs: Mapping[tuple, tuple[float, float]] | None = None) -> "Graph":
        """Edges may be (u, v) or (u, v, primary, secondary)."""
        node_ids = natural_sorted({str(n) for n in nodes})
        edge_list: list[tuple[str, str]] = []
        cost_map: dict[frozenset[str], tuple[float, float]] = {}
        for edge in edges:
            u, v = str(edge[0]), str(edge[1])
            ordered = tuple(natural_sorted((u, v)))
            edge_list.append(ordered)
            if len(edge) >= 4:
                cost_map[pair_key(u, v)] = (float(edge[2]), float(edge[3]))
        for (u, v), pair in (costs or {}).items():
            cost_map[pair_key(str(u), str(v))] = (float(pair[0]), float(pair[1]))
        edge_list.sort(key=lambda e: (natural_key(e[0]), natural_key(e[1])))
        return cls(tuple(node_ids), tuple(edge_list), cost_map)

    def cost(self, u: str, v: str) -> tuple[float, float]:
        try:
            return self.costs[pair_key(u, v)]
        except KeyError:
            raise InputError(f"edge ({u},{v}) has no costs") from None

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(self.nodes)
        for u, v in self.edges:
            attrs = {}
            if pair_key(u, v) in self.costs:
                primary, secondary = self.costs[pair_key(u, v)]
                attrs = {"primary": primary, "secondary": secondary}
            g.add_edge(u, v, **attrs)
        return g

    @classmethod
    def from_networkx(cls, g: nx.Graph) -> "Graph":
        edges = []
        for u, v, data in g.edges(data=True):
            if "primary" in data and "secondary" in data:
                edges.append((u, v, data["primary"], data["secondary"]))
            else:
                edges.append((u, v))
        return cls.build(g.nodes, edges)


# ----------------------------------------------------------------------------
# Validation
# ----------------------------------------------------------------------------

def validate_system(system: MorphSystem) -> ValidationReport:
    """Check MorphSystem invariants; violations are returned, never raised."""
    found: list[Violation] = []

    if system.quality_levels < 1:
        found.append(Violation("levels", "quality_levels", f"must be >= 1, got {system.quality_levels}"))
    if system.compat_max < 1:
        found.append(Violation("levels", "compat_max", f"must be >= 1, got {system.compat_max}"))

    seen_slots: set[str] = set()
    for slot in system.slots:
        if slot in seen_slots:
            found.append(Violation("duplicate-slot", slot, "slot listed more than once"))
        seen_slots.add(slot)

    slot_of: dict[str, str] = {}
    for alt in system.alternatives:
        if alt.id in slot_of:
            found.append(Violation("duplicate-da", alt.id, "design alternative listed more than once"))
            continue
        slot_of[alt.id] = alt.slot_id
        if alt.slot_id not in seen_slots:
            found.append(Violation("unknown-slot", alt.id, f"refers to unknown slot {alt.slot_id!r}"))
        if not 1 <= alt.priority <= system.priority_scale:
            found.append(Violation("priority-range", alt.id,
                                   f"priority {alt.priority} outside [1..{system.priority_scale}]"))

    for slot in system.slots:
        if not system.alternatives_of(slot):
            found.append(Violation("empty-slot", slot, "slot has no design alternatives"))

    for key, w in system.compat.items():
        members = natural_sorted(key)
        label = f"({','.join(members)})"
        if len(members) != 2:
            found.append(Violation("self-pair", label, "compatibility of a DA with itself"))
            continue
        a, b = members
        unknown = [d for d in (a, b) if d not in slot_of]
        if unknown:
            found.append(Violation("unknown-da", label, f"unknown design alternative(s) {unknown}"))
            continue
        if slot_of[a] == slot_of[b]:
            found.append(Violation("same-slot-pair", label, f"both DAs belong to slot {slot_of[a]}"))
        if not 0 <= w <= system.compat_max:
            found.append(Violation("compat-range", label, f"compatibility {w} outside [0..{system.compat_max}]"))

    ordered = system._ordered_alternatives()
    for a, b in combinations(ordered, 2):
        if a.slot_id == b.slot_id or a.slot_id not in seen_slots or b.slot_id not in seen_slots:
            continue
        if pair_key(a.id, b.id) not in system.compat:
            found.append(Violation("missing-pair", f"({a.id},{b.id})", "missing compatibility estimate"))

    report = ValidationReport(tuple(found))
    logger.debug(f"validate_system: {len(report)} violation(s)")
    return report


def _validate_records(records: Sequence[ComponentRecord]) -> list[Violation]:
    found: list[Violation] = []
    parents: dict[str, str | None] = {}
    for record in records:
        if record.id in parents:
            found.append(Violation("duplicate-record", record.id, "component record listed more than once"))
        parents[record.id] = record.parent_id
    for record_id, parent in parents.items():
        if parent is not None and parent not in parents:
            found.append(Violation("unknown-parent", record_id, f"parent {parent!r} does not exist"))
    # walk up from each record; revisiting a node means a cycle
    for start in parents:
        seen = {start}
        node = parents[start]
        while node is not None and node in parents:
            if node in seen:
                found.append(Violation("parent-cycle", start, "parent links form a cycle"))
                break
            seen.add(node)
            node = parents[node]
    return found


def validate_estimates(table: EstimateTable,
                       criteria: Sequence[CriterionSpec] | None = None) -> ValidationReport:
    """Check that every cell is present and inside its criterion's bounds.

    Args:
        table: Estimate table to check
        criteria: Criterion specs to check against; defaults to the table's own

    Returns:
        ValidationReport naming each offending cell as "<component>/<criterion>"
    """
    specs = tuple(criteria) if criteria is not None else table.criteria
    found: list[Violation] = []

    seen: set[str] = set()
    for spec in specs:
        if spec.id in seen:
            found.append(Violation("duplicate-criterion", spec.id, "criterion listed more than once"))
        seen.add(spec.id)
        if spec.weight < 0:
            found.append(Violation("weight", spec.id, f"weight {spec.weight} is negative"))
        if spec.scale_min is not None and spec.scale_max is not None and not spec.scale_min < spec.scale_max:
            found.append(Violation("scale", spec.id, f"scale [{spec.scale_min},{spec.scale_max}] is empty"))
        if spec.direction not in DIRECTIONS:
            found.append(Violation("direction", spec.id, f"unknown direction {spec.direction!r}"))

    seen_components: set[str] = set()
    for component in table.components:
        if component in seen_components:
            found.append(Violation("duplicate-component", component, "component listed more than once"))
        seen_components.add(component)

    if len(table.values) != len(table.components):
        found.append(Violation("shape", "values",
                               f"{len(table.values)} rows for {len(table.components)} components"))

    for component, row in zip(table.components, table.values):
        if len(row) != len(specs):
            found.append(Violation("shape", component, f"{len(row)} cells for {len(specs)} criteria"))
        for spec, cell in zip(specs, row):
            subject = f"{component}/{spec.id}"
            if cell is None or (isinstance(cell, float) and np.isnan(cell)):
                found.append(Violation("missing-cell", subject, "estimate missing"))
                continue
            if spec.scale_min is not None and cell < spec.scale_min:
                found.append(Violation("cell-range", subject, f"value {cell} below scale minimum {spec.scale_min}"))
            if spec.scale_max is not None and cell > spec.scale_max:
                found.append(Violation("cell-range", subject, f"value {cell} above scale maximum {spec.scale_max}"))

    found.extend(_validate_records(table.records))

    report = ValidationReport(tuple(found))
    logger.debug(f"validate_estimates: {len(table.components)} components, {len(report)} violation(s)")
    return report


def validate_graph(graph: Graph) -> ValidationReport:
    """Check graph invariants (no self-loops, known endpoints, ordered costs)."""
    found: list[Violation] = []
    nodes = set(graph.nodes)
    seen: set[frozenset[str]] = set()
    for u, v in graph.edges:
        label = f"({u},{v})"
        if u == v:
            found.append(Violation("self-loop", label, "self-loops are not allowed"))
            continue
        missing = [n for n in (u, v) if n not in nodes]
        if missing:
            found.append(Violation("unknown-node", label, f"endpoint(s) {missing} not in node set"))
        if pair_key(u, v) in seen:
            found.append(Violation("duplicate-edge", label, "edge listed more than once"))
        seen.add(pair_key(u, v))
    for key, (primary, secondary) in graph.costs.items():
        label = f"({','.join(natural_sorted(key))})"
        if key not in seen:
            found.append(Violation("cost-without-edge", label, "costs given for a non-edge"))
        if primary < 0 or secondary < 0:
            found.append(Violation("cost-sign", label, "costs must be nonnegative"))
        elif secondary > primary:
            found.append(Violation("cost-order", label, f"secondary cost {secondary} exceeds primary {primary}"))
    return ValidationReport(tuple(found))
