"""
JSON document formats.

Every document is a UTF-8 JSON object with a top-level "kind":
estimate-table, morph-system, graph or snapshot-series. Field names
follow the domain types. Parsed values are validated before they are
returned.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import json
import logging
from pathlib import Path
from typing import Any, Mapping

from app.errors import InputError, ParseError
from app.model import (
    ComponentRecord,
    CriterionSpec,
    DesignAlternative,
    EstimateTable,
    Graph,
    MorphSystem,
    QualityVector,
    validate_estimates,
    validate_graph,
    validate_system,
)
from app.predict import SnapshotSeries
from app.utils import natural_sorted

logger = logging.getLogger("BottleneckFinder.io")

ESTIMATE_TABLE = "estimate-table"
MORPH_SYSTEM = "morph-system"
GRAPH = "graph"
SNAPSHOT_SERIES = "snapshot-series"
KINDS = (ESTIMATE_TABLE, MORPH_SYSTEM, GRAPH, SNAPSHOT_SERIES)


@dataclass(frozen=True)
class Document:
    """A parsed input file: the domain value plus document-level extras.

    `solutions` maps names to DA picks (morph systems only).
    """

    kind: str
    value: Any
    name: str = ""
    solutions: Mapping[str, tuple[str, ...]] = field(default_factory=dict)
    path: str | None = None


def _field(data: Mapping, key: str, context: str, default: Any = ...) -> Any:
    if key in data:
        return data[key]
    if default is ...:
        raise InputError(f"{context}: missing field {key!r}")
    return default


def _object(data: Any, context: str) -> Mapping:
    if not isinstance(data, Mapping):
        raise InputError(f"{context}: expected an object, got {type(data).__name__}")
    return data


# ----------------------------------------------------------------------------
# Decoding
# ----------------------------------------------------------------------------

def parse_estimate_table(data: Mapping, context: str = ESTIMATE_TABLE) -> EstimateTable:
    criteria = []
    for item in _field(data, "criteria", context):
        item = _object(item, f"{context} criterion")
        criteria.append(CriterionSpec(
            id=str(_field(item, "id", f"{context} criterion")),
            weight=float(item.get("weight", 1.0)),
            scale_min=None if item.get("scale_min") is None else float(item["scale_min"]),
            scale_max=None if item.get("scale_max") is None else float(item["scale_max"]),
            direction=str(item.get("direction", "ascending")),
            integral=bool(item.get("integral", False)),
        ))
    records = [
        ComponentRecord(str(_field(r, "id", f"{context} record")), str(r.get("label", "")),
                        None if r.get("parent_id") is None else str(r["parent_id"]))
        for r in (_object(r, f"{context} record") for r in data.get("records", []))
    ]
    values = _field(data, "values", context)
    if not isinstance(values, list) or not all(isinstance(row, list) for row in values):
        raise InputError(f"{context}: values must be a list of rows")
    table = EstimateTable.build([str(c) for c in _field(data, "components", context)], criteria, values, records)
    validate_estimates(table).raise_if_invalid(context)
    return table


def parse_morph_system(data: Mapping, context: str = MORPH_SYSTEM) -> MorphSystem:
    alternatives = []
    for item in _field(data, "alternatives", context):
        item = _object(item, f"{context} alternative")
        alternatives.append(DesignAlternative(
            id=str(_field(item, "id", f"{context} alternative")),
            slot_id=str(_field(item, "slot_id", f"{context} alternative")),
            priority=int(_field(item, "priority", f"{context} alternative")),
        ))
    triples = []
    for entry in _field(data, "compat", context):
        if not isinstance(entry, list) or len(entry) != 3:
            raise InputError(f"{context}: compat entries are [a, b, w], got {entry!r}")
        triples.append((str(entry[0]), str(entry[1]), int(entry[2])))
    system = MorphSystem.build(
        slots=[str(s) for s in _field(data, "slots", context)],
        alternatives=alternatives,
        compat=triples,
        quality_levels=int(data.get("quality_levels", 3)),
        compat_max=int(data.get("compat_max", 3)),
        name=str(data.get("name", "")),
    )
    validate_system(system).raise_if_invalid(context)
    return system


def parse_graph(data: Mapping, context: str = GRAPH) -> Graph:
    edges = []
    for entry in _field(data, "edges", context):
        if not isinstance(entry, list) or len(entry) not in (2, 4):
            raise InputError(f"{context}: edges are [u, v] or [u, v, primary, secondary], got {entry!r}")
        edges.append(entry)
    graph = Graph.build(_field(data, "nodes", context), edges)
    validate_graph(graph).raise_if_invalid(context)
    return graph


def _parse_quality(values: Any, context: str) -> QualityVector:
    if not isinstance(values, list) or len(values) < 2:
        raise InputError(f"{context}: quality must be [w, eta_1, ...], got {values!r}")
    return QualityVector.from_list(values)


def parse_snapshot_series(data: Mapping, context: str = SNAPSHOT_SERIES) -> SnapshotSeries:
    states = []
    for index, item in enumerate(_field(data, "states", context)):
        item = _object(item, f"{context} state {index}")
        states.append(parse_value(item, f"{context} state {index}"))
    timestamps = tuple(int(t) for t in data.get("timestamps", range(len(states))))
    references = {
        int(stamp): {str(label): _parse_quality(q, f"{context} reference {stamp}/{label}")
                     for label, q in _object(entries, f"{context} references").items()}
        for stamp, entries in _object(data.get("references", {}), f"{context} references").items()
    }
    series = SnapshotSeries(timestamps, tuple(states), tuple(str(p) for p in data.get("picks", [])), references)
    series.validate().raise_if_invalid(context)
    return series


_PARSERS = {
    ESTIMATE_TABLE: parse_estimate_table,
    MORPH_SYSTEM: parse_morph_system,
    GRAPH: parse_graph,
    SNAPSHOT_SERIES: parse_snapshot_series,
}


def parse_value(data: Mapping, context: str = "document") -> Any:
    """Decode a document object into its domain value."""
    data = _object(data, context)
    kind = _field(data, "kind", context)
    if kind not in _PARSERS:
        raise InputError(f"{context}: unknown kind {kind!r}; expected one of {KINDS}")
    try:
        return _PARSERS[kind](data, context)
    except (TypeError, ValueError) as e:
        if isinstance(e, InputError):
            raise
        raise InputError(f"{context}: {e}") from e


def parse_document(data: Mapping, path: str | None = None) -> Document:
    context = path or "document"
    value = parse_value(data, context)
    solutions = {str(k): tuple(str(p) for p in v) for k, v in data.get("solutions", {}).items()}
    return Document(data["kind"], value, str(data.get("name", "")), solutions, path)


def load_document(path: str | Path) -> Document:
    """Read, decode and validate one input file.

    Raises:
        ParseError: unreadable file or malformed JSON (with line and column)
        InputError: invariant violations (with the validation report)
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ParseError(f"cannot read file: {e.strerror or e}", str(path)) from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, str(path), e.lineno, e.colno) from None
    document = parse_document(data, str(path))
    logger.debug(f"Loaded {document.kind} from {path}")
    return document


def parse_inputs(paths: list[str | Path]) -> list[Document]:
    """Load every path; the first failure aborts."""
    return [load_document(p) for p in paths]


# ----------------------------------------------------------------------------
# Encoding
# ----------------------------------------------------------------------------

def _number(value: float | None) -> float | int | None:
    if value is None:
        return None
    return int(value) if float(value).is_integer() else value


def dump_estimate_table(table: EstimateTable) -> dict:
    data = {
        "kind": ESTIMATE_TABLE,
        "criteria": [
            {"id": c.id, "weight": c.weight, "scale_min": c.scale_min, "scale_max": c.scale_max,
             "direction": c.direction, "integral": c.integral}
            for c in table.criteria
        ],
        "components": list(table.components),
        "values": [[_number(v) for v in row] for row in table.values],
    }
    if table.records:
        data["records"] = [{"id": r.id, "label": r.label, "parent_id": r.parent_id} for r in table.records]
    return data


def dump_morph_system(system: MorphSystem) -> dict:
    data = {"kind": MORPH_SYSTEM}
    if system.name:
        data["name"] = system.name
    data.update({
        "slots": list(system.slots),
        "alternatives": [{"id": a.id, "slot_id": a.slot_id, "priority": a.priority}
                         for a in system.alternatives],
        "compat": [[a, b, w] for a, b, w in system.compat_triples()],
        "quality_levels": system.quality_levels,
        "compat_max": system.compat_max,
    })
    return data


def dump_graph(graph: Graph) -> dict:
    edges = []
    for u, v in graph.edges:
        if frozenset((u, v)) in graph.costs:
            primary, secondary = graph.costs[frozenset((u, v))]
            edges.append([u, v, _number(primary), _number(secondary)])
        else:
            edges.append([u, v])
    return {"kind": GRAPH, "nodes": list(graph.nodes), "edges": edges}


def dump_snapshot_series(series: SnapshotSeries) -> dict:
    data = {
        "kind": SNAPSHOT_SERIES,
        "timestamps": list(series.timestamps),
        "states": [dump_value(s) for s in series.states],
    }
    if series.picks:
        data["picks"] = list(series.picks)
    if series.references:
        data["references"] = {
            str(stamp): {label: q.as_list() for label, q in natural_sorted_items(entries)}
            for stamp, entries in sorted(series.references.items())
        }
    return data


def natural_sorted_items(mapping: Mapping[str, Any]) -> list[tuple[str, Any]]:
    return [(k, mapping[k]) for k in natural_sorted(mapping)]


def dump_value(value: Any) -> dict:
    """Encode a domain value as a document object."""
    if isinstance(value, EstimateTable):
        return dump_estimate_table(value)
    if isinstance(value, MorphSystem):
        return dump_morph_system(value)
    if isinstance(value, Graph):
        return dump_graph(value)
    if isinstance(value, SnapshotSeries):
        return dump_snapshot_series(value)
    raise TypeError(f"cannot serialize {type(value).__name__}")


def dump_document(document: Document) -> dict:
    data = dump_value(document.value)
    if document.name and "name" not in data:
        data["name"] = document.name
    if document.solutions:
        data["solutions"] = {k: list(v) for k, v in document.solutions.items()}
    return data
