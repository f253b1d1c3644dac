"""
Quality-control screening over an EstimateTable.

Three detectors:
  * Pareto chart: sort by one criterion, select by an inclusive threshold.
  * Pareto-efficient selection over several criteria.
  * ELECTRE-I style outranking with layering by repeatedly removing the
    sources of the strongly-connected-component condensation.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
import json
import logging
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import networkx as nx
import numpy as np

from app.errors import InputError
from app.model import ASCENDING, DIRECTIONS, DESCENDING, EstimateTable, validate_estimates
from app.utils import natural_key, natural_sorted

logger = logging.getLogger("BottleneckFinder.screening")

# float slack for threshold comparisons on weight sums
_EPS = 1e-12


@dataclass(frozen=True)
class ParetoChart:
    """Bars sorted by decreasing value; `selected` holds bars at or above the threshold."""

    criterion: str
    entries: tuple[tuple[str, float], ...]
    threshold: float
    selected: frozenset[str]

    @property
    def order(self) -> list[str]:
        return [component for component, _ in self.entries]

    @property
    def cumulative_share(self) -> list[float]:
        """Running share of the column total, bar by bar."""
        values = np.array([v for _, v in self.entries], dtype=float)
        total = values.sum()
        if values.size == 0 or total == 0:
            return [0.0] * len(self.entries)
        return (np.cumsum(values) / total).tolist()

    @property
    def share_of_selected(self) -> float:
        total = sum(v for _, v in self.entries)
        if total == 0:
            return 0.0
        return sum(v for c, v in self.entries if c in self.selected) / total


@dataclass(frozen=True)
class OutrankParams:
    """Thresholds and variant switches for the outranking relation.

    Args:
        concordance_threshold: p, an edge needs concordance >= p
        discordance_threshold: q, an edge needs discordance <= q
        strict_concordance: count only criteria where a is strictly ahead
        directions: per-criterion "ascending"/"descending" overrides
        ranges: per-criterion discordance range overrides
        max_layers: merge every layer past this count into the last one
    """

    concordance_threshold: float = 0.7
    discordance_threshold: float = 0.3
    strict_concordance: bool = False
    directions: Mapping[str, str] = field(default_factory=dict)
    ranges: Mapping[str, float] = field(default_factory=dict)
    max_layers: int | None = None

    def __post_init__(self):
        for name in ("concordance_threshold", "discordance_threshold"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise InputError(f"{name} must lie in [0,1], got {value}")
        for criterion, direction in self.directions.items():
            if direction not in DIRECTIONS:
                raise InputError(f"direction for {criterion} must be one of {DIRECTIONS}, got {direction!r}")
        for criterion, value in self.ranges.items():
            if value <= 0:
                raise InputError(f"discordance range for {criterion} must be > 0, got {value}")
        if self.max_layers is not None and self.max_layers < 1:
            raise InputError(f"max_layers must be >= 1, got {self.max_layers}")

    def to_dict(self) -> dict:
        return {
            "concordance_threshold": self.concordance_threshold,
            "discordance_threshold": self.discordance_threshold,
            "strict_concordance": self.strict_concordance,
            "directions": dict(self.directions),
            "ranges": dict(self.ranges),
            "max_layers": self.max_layers,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "OutrankParams":
        known = {"concordance_threshold", "discordance_threshold", "strict_concordance",
                 "directions", "ranges", "max_layers"}
        unknown = set(data) - known - {"app_version", "kind", "note", "reference_layers"}
        if unknown:
            raise InputError(f"unknown outranking parameter(s): {sorted(unknown)}")
        return cls(
            concordance_threshold=float(data.get("concordance_threshold", 0.7)),
            discordance_threshold=float(data.get("discordance_threshold", 0.3)),
            strict_concordance=bool(data.get("strict_concordance", False)),
            directions=dict(data.get("directions") or {}),
            ranges={k: float(v) for k, v in (data.get("ranges") or {}).items()},
            max_layers=data.get("max_layers"),
        )


@dataclass(frozen=True)
class LayerRanking:
    """Layer 1 holds the most critical components."""

    layers: tuple[tuple[str, ...], ...]

    def __len__(self) -> int:
        return len(self.layers)

    def layer_of(self, component: str) -> int:
        for index, layer in enumerate(self.layers, start=1):
            if component in layer:
                return index
        raise InputError(f"component {component!r} is not ranked")

    def as_sets(self) -> list[set[str]]:
        return [set(layer) for layer in self.layers]


def load_calibration(path: str | Path) -> OutrankParams:
    """Read OutrankParams from a calibration JSON file."""
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except FileNotFoundError:
        raise InputError(f"calibration file not found: {path}") from None
    except json.JSONDecodeError as e:
        raise InputError(f"{path}:{e.lineno}:{e.colno}: {e.msg}") from None
    logger.debug(f"Loaded outranking calibration from {path}")
    return OutrankParams.from_dict(data)


def load_reference_layers(path: str | Path) -> list[list[str]]:
    """Published layering stored next to a calibration, empty when absent."""
    with open(path, "r", encoding="utf-8") as f:
        data = json.load(f)
    return [[str(c) for c in layer] for layer in data.get("reference_layers", [])]


# ----------------------------------------------------------------------------
# Pareto chart and Pareto-efficient selection
# ----------------------------------------------------------------------------

def pareto_chart(table: EstimateTable, criterion: str, threshold: float) -> ParetoChart:
    """Sort components by one criterion and select those at or above the threshold.

    Args:
        table: Estimate table
        criterion: Criterion id to chart
        threshold: Inclusive selection threshold

    Returns:
        ParetoChart ordered by decreasing value, ties by component id
    """
    column = table.column(criterion)
    missing = [c for c, v in column.items() if v is None]
    if missing:
        raise InputError(f"missing {criterion} estimates for {natural_sorted(missing)}")

    entries = sorted(column.items(), key=lambda item: (-item[1], natural_key(item[0])))
    selected = frozenset(c for c, v in entries if v >= threshold)
    logger.info(f"Pareto chart on {criterion} at threshold {threshold}: {len(selected)} of {len(entries)} selected")
    return ParetoChart(criterion, tuple(entries), float(threshold), selected)


def _signed_matrix(table: EstimateTable, criteria: Sequence[str] | None,
                   directions: Mapping[str, str] | None = None) -> tuple[list[str], np.ndarray, np.ndarray]:
    """Values oriented so that larger always means more critical.

    Returns:
        (criterion ids, matrix n x m, weight vector)
    """
    ids = list(criteria) if criteria is not None else list(table.criterion_ids)
    if not ids:
        raise InputError("at least one criterion is required")
    directions = directions or {}
    columns = [table.criterion_index(c) for c in ids]
    specs = [table.criteria[j] for j in columns]
    signs = np.array([1.0 if directions.get(s.id, s.direction) == ASCENDING else -1.0 for s in specs])
    weights = np.array([s.weight for s in specs], dtype=float)

    matrix = table.matrix()[:, columns] if table.components else np.zeros((0, len(ids)))
    if np.isnan(matrix).any():
        validate_estimates(table).raise_if_invalid("estimate table")
    return ids, matrix * signs, weights


def pareto_efficient(table: EstimateTable, criteria: Sequence[str]) -> set[str]:
    """Components not criticality-dominated on the chosen criteria.

    c dominates c' iff c >= c' on every criterion and > on at least one.
    """
    if not criteria:
        raise InputError("pareto_efficient needs a nonempty criteria set")
    _, matrix, _ = _signed_matrix(table, criteria)

    efficient = set()
    for i, component in enumerate(table.components):
        geq = np.all(matrix >= matrix[i], axis=1)
        gt = np.any(matrix > matrix[i], axis=1)
        if not np.any(geq & gt):
            efficient.add(component)
    logger.info(f"Pareto-efficient on {list(criteria)}: {len(efficient)} of {len(table.components)}")
    return efficient


# ----------------------------------------------------------------------------
# Outranking
# ----------------------------------------------------------------------------

def concordance(a: str, b: str, table: EstimateTable, criteria: Sequence[str] | None = None,
                strict: bool = False, directions: Mapping[str, str] | None = None) -> float:
    """Weight share of the criteria on which a is at least as critical as b.

    Args:
        a, b: Component ids (distinct)
        table: Estimate table carrying the criterion weights
        criteria: Criterion ids to use; all by default
        strict: Count only criteria where a is strictly more critical

    Returns:
        Concordance index in [0, 1]
    """
    if a == b:
        raise InputError("concordance needs two distinct components")
    ids, matrix, weights = _signed_matrix(table, criteria, directions)
    total = weights.sum()
    if total <= 0:
        raise InputError("criteria weights sum to zero")
    row_a = matrix[table.component_index(a)]
    row_b = matrix[table.component_index(b)]
    agrees = row_a > row_b if strict else row_a >= row_b
    return float(weights[agrees].sum() / total)


def _ranges(table: EstimateTable, ids: Sequence[str], matrix: np.ndarray,
            overrides: Mapping[str, float] | None) -> np.ndarray:
    overrides = overrides or {}
    if matrix.shape[0] == 0:
        observed = np.zeros(len(ids))
    else:
        observed = matrix.max(axis=0) - matrix.min(axis=0)
    return np.array([overrides.get(c, r) for c, r in zip(ids, observed)], dtype=float)


def discordance(a: str, b: str, table: EstimateTable, criteria: Sequence[str] | None = None,
                params: OutrankParams | None = None) -> float:
    """Largest normalized margin by which b is more critical than a.

    Zero-range criteria are skipped. The result is clamped to [0, 1].
    """
    if a == b:
        raise InputError("discordance needs two distinct components")
    params = params or OutrankParams()
    ids, matrix, _ = _signed_matrix(table, criteria, params.directions)
    ranges = _ranges(table, ids, matrix, params.ranges)
    row_a = matrix[table.component_index(a)]
    row_b = matrix[table.component_index(b)]
    usable = ranges > 0
    if not usable.any():
        return 0.0
    margins = np.maximum(0.0, row_b[usable] - row_a[usable]) / ranges[usable]
    return float(np.clip(margins.max(), 0.0, 1.0))


def _index_matrices(table: EstimateTable, criteria: Sequence[str] | None,
                    params: OutrankParams) -> tuple[np.ndarray, np.ndarray]:
    """All-pairs concordance and discordance matrices."""
    ids, matrix, weights = _signed_matrix(table, criteria, params.directions)
    total = weights.sum()
    if total <= 0:
        raise InputError("criteria weights sum to zero")

    # diff[a, b, j] = value(a, j) - value(b, j)
    diff = matrix[:, None, :] - matrix[None, :, :]
    agrees = diff > 0 if params.strict_concordance else diff >= 0
    conc = (agrees * weights).sum(axis=2) / total

    ranges = _ranges(table, ids, matrix, params.ranges)
    usable = ranges > 0
    if usable.any():
        margins = np.maximum(0.0, -diff[:, :, usable]) / ranges[usable]
        disc = np.clip(margins.max(axis=2), 0.0, 1.0)
    else:
        disc = np.zeros(conc.shape)
    return conc, disc


def outranking_graph(table: EstimateTable, criteria: Sequence[str] | None,
                     params: OutrankParams) -> nx.DiGraph:
    """Digraph with a -> b iff concordance(a,b) >= p and discordance(a,b) <= q."""
    graph = nx.DiGraph()
    graph.add_nodes_from(table.components)
    if not table.components:
        return graph
    conc, disc = _index_matrices(table, criteria, params)
    p, q = params.concordance_threshold, params.discordance_threshold
    outranks = (conc >= p - _EPS) & (disc <= q + _EPS)
    np.fill_diagonal(outranks, False)
    for i, j in zip(*np.nonzero(outranks)):
        graph.add_edge(table.components[i], table.components[j])
    return graph


def _layers_from_graph(graph: nx.DiGraph, max_layers: int | None) -> LayerRanking:
    condensed = nx.condensation(graph)
    layers: list[tuple[str, ...]] = []
    for generation in nx.topological_generations(condensed):
        members = [m for scc in generation for m in condensed.nodes[scc]["members"]]
        layers.append(tuple(natural_sorted(members)))

    if max_layers is not None and len(layers) > max_layers:
        tail = [m for layer in layers[max_layers - 1:] for m in layer]
        layers = layers[:max_layers - 1] + [tuple(natural_sorted(tail))]
    return LayerRanking(tuple(layers))


def electre_layers(table: EstimateTable, criteria: Sequence[str] | None,
                   params: OutrankParams) -> LayerRanking:
    """Rank components into layers of decreasing criticality.

    Args:
        table: Validated estimate table
        criteria: Criterion ids to use (all when None); must not be empty
        params: Thresholds and variant switches

    Returns:
        LayerRanking; components in one strongly connected component share a layer
    """
    if criteria is not None and not criteria:
        raise InputError("electre_layers needs a nonempty criteria set")
    validate_estimates(table).raise_if_invalid("estimate table")

    graph = outranking_graph(table, criteria, params)
    ranking = _layers_from_graph(graph, params.max_layers)
    logger.info(f"Outranking: {graph.number_of_edges()} edges, {len(ranking)} layers, "
                f"layer 1 = {list(ranking.layers[0]) if ranking.layers else []}")
    return ranking


def layer_agreement(ranking: LayerRanking, reference: Sequence[Iterable[str]]) -> list[float]:
    """Jaccard index per layer against a reference layering.

    Layers missing on either side count as empty; two empty layers agree fully.
    """
    ours = ranking.as_sets()
    theirs = [set(layer) for layer in reference]
    scores = []
    for index in range(max(len(ours), len(theirs))):
        a = ours[index] if index < len(ours) else set()
        b = theirs[index] if index < len(theirs) else set()
        union = a | b
        scores.append(1.0 if not union else len(a & b) / len(union))
    return scores


def default_grid() -> list[float]:
    return [round(v, 2) for v in np.arange(0.05, 1.0 + _EPS, 0.05)]


def calibrate_outranking(table: EstimateTable, criteria: Sequence[str] | None,
                         target_layer: Iterable[str],
                         p_grid: Sequence[float] | None = None,
                         q_grid: Sequence[float] | None = None,
                         strict_options: Sequence[bool] = (False, True),
                         direction_variants: Sequence[Mapping[str, str]] | None = None,
                         max_layers: int | None = None) -> list[OutrankParams]:
    """Grid search for parameters whose first layer equals `target_layer`.

    Direction variants default to "as declared" plus each single criterion
    flipped to descending.

    Returns:
        Every admissible OutrankParams, ordered by variant, strictness, p and q
    """
    target = set(target_layer)
    p_grid = list(p_grid) if p_grid is not None else default_grid()
    q_grid = list(q_grid) if q_grid is not None else default_grid()
    if direction_variants is None:
        ids = list(criteria) if criteria is not None else list(table.criterion_ids)
        direction_variants = [{}] + [{c: DESCENDING} for c in ids]

    validate_estimates(table).raise_if_invalid("estimate table")
    found: list[OutrankParams] = []
    checked = 0
    for directions in direction_variants:
        for strict in strict_options:
            base = OutrankParams(strict_concordance=strict, directions=dict(directions),
                                 max_layers=max_layers)
            conc, disc = _index_matrices(table, criteria, base)
            for p in p_grid:
                for q in q_grid:
                    checked += 1
                    outranks = (conc >= p - _EPS) & (disc <= q + _EPS)
                    np.fill_diagonal(outranks, False)
                    graph = nx.DiGraph()
                    graph.add_nodes_from(table.components)
                    graph.add_edges_from((table.components[i], table.components[j])
                                         for i, j in zip(*np.nonzero(outranks)))
                    ranking = _layers_from_graph(graph, None)
                    if ranking.layers and set(ranking.layers[0]) == target:
                        found.append(replace(base, concordance_threshold=float(p),
                                             discordance_threshold=float(q)))
    logger.info(f"Calibration checked {checked} parameter sets, {len(found)} admissible")
    return found
