"""
Network-structural bottlenecks.

* Maximum leaf spanning tree (MLST): the internal nodes of the tree are the
  structural bottlenecks.
* Connected dominating set (CDS): the same set seen from the other side,
  |CDS*| = n - L* for n >= 3.
* Hierarchical two-level network design (HTND): one primary path plus a
  secondary forest hanging off it.

Each problem has a greedy heuristic and an exhaustive oracle for small
instances. All tie-breaks use natural node-id order.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
import logging
from typing import Iterable, Mapping, Sequence

import networkx as nx

from app.errors import InputError, InstanceTooLargeError
from app.model import CriterionSpec, EstimateTable, Graph, pair_key, validate_graph
from app.utils import natural_key, natural_sorted

logger = logging.getLogger("BottleneckFinder.netbn")

DEFAULT_MLST_LIMIT = 10
DEFAULT_CDS_LIMIT = 10
DEFAULT_HTND_LIMIT = 8

# stands in for the contracted primary path; never equal to a string id
_PATH_NODE = ("<primary path>",)


@dataclass(frozen=True)
class SpanningTreeResult:
    """Spanning tree; a root of tree-degree 1 counts as a leaf."""

    edges: tuple[tuple[str, str], ...]
    leaves: frozenset[str]
    internal: frozenset[str]
    root: str
    tree_degree: Mapping[str, int]

    @property
    def leaf_count(self) -> int:
        return len(self.leaves)


@dataclass(frozen=True)
class TwoLevelDesign:
    primary_path: tuple[str, ...]
    primary_edges: tuple[tuple[str, str], ...]
    secondary_edges: tuple[tuple[str, str], ...]
    primary_cost: float
    secondary_cost: float

    @property
    def total_cost(self) -> float:
        return self.primary_cost + self.secondary_cost


def _edge(u: str, v: str) -> tuple[str, str]:
    return tuple(natural_sorted((u, v)))


def _sorted_edges(edges: Iterable[tuple[str, str]]) -> tuple[tuple[str, str], ...]:
    return tuple(sorted((_edge(u, v) for u, v in edges), key=lambda e: (natural_key(e[0]), natural_key(e[1]))))


def _require_connected(graph: Graph, what: str) -> nx.Graph:
    validate_graph(graph).raise_if_invalid("graph")
    if len(graph.nodes) < 2:
        raise InputError(f"{what} needs a graph with at least 2 nodes, got {len(graph.nodes)}")
    g = graph.to_networkx()
    if not nx.is_connected(g):
        raise InputError(f"{what} needs a connected graph")
    return g


def _require_limit(graph: Graph, limit: int, what: str) -> None:
    if len(graph.nodes) > limit:
        raise InstanceTooLargeError(len(graph.nodes), limit, what)


def _tree_result(tree: nx.Graph, root: str) -> SpanningTreeResult:
    degree = {n: tree.degree(n) for n in natural_sorted(tree.nodes)}
    leaves = frozenset(n for n, d in degree.items() if d <= 1)
    internal = frozenset(degree) - leaves
    return SpanningTreeResult(_sorted_edges(tree.edges), leaves, internal, root, degree)


# ----------------------------------------------------------------------------
# Validity checks
# ----------------------------------------------------------------------------

def is_spanning_tree(graph: Graph, edges: Sequence[tuple[str, str]]) -> bool:
    g = graph.to_networkx()
    tree = nx.Graph()
    tree.add_nodes_from(graph.nodes)
    for u, v in edges:
        if not g.has_edge(u, v):
            return False
        tree.add_edge(u, v)
    return len(edges) == len(graph.nodes) - 1 and nx.is_tree(tree)


def is_connected_dominating_set(graph: Graph, nodes: Iterable[str]) -> bool:
    g = graph.to_networkx()
    chosen = set(nodes)
    if not chosen or not chosen <= set(g.nodes):
        return False
    return nx.is_dominating_set(g, chosen) and nx.is_connected(g.subgraph(chosen))


def is_valid_design(graph: Graph, design: TwoLevelDesign) -> bool:
    path = design.primary_path
    if len(path) < 2 or len(set(path)) != len(path):
        return False
    path_edges = _sorted_edges(zip(path, path[1:]))
    if path_edges != _sorted_edges(design.primary_edges):
        return False
    return is_spanning_tree(graph, list(design.primary_edges) + list(design.secondary_edges))


# ----------------------------------------------------------------------------
# Maximum leaf spanning tree
# ----------------------------------------------------------------------------

def _pick(candidates: Iterable[str], score) -> str:
    """Highest score, ties by natural id."""
    return min(candidates, key=lambda n: (-score(n), natural_key(n)))


def mlst_heuristic(graph: Graph) -> SpanningTreeResult:
    """Greedy leaf-maximizing spanning tree.

    Starts from a maximum-degree root with all its neighbors attached, then
    repeatedly expands the tree leaf with the most neighbors outside the
    tree, attaching all of them.
    """
    g = _require_connected(graph, "mlst_heuristic")
    root = _pick(g.nodes, g.degree)
    tree = nx.Graph()
    tree.add_node(root)
    frontier = {root}  # tree nodes not yet expanded
    covered = {root}

    while len(covered) < g.number_of_nodes():
        def new_neighbors(n):
            return sum(1 for m in g.neighbors(n) if m not in covered)
        node = _pick((n for n in frontier if new_neighbors(n) > 0), new_neighbors)
        frontier.discard(node)
        for child in natural_sorted(m for m in g.neighbors(node) if m not in covered):
            tree.add_edge(node, child)
            covered.add(child)
            frontier.add(child)

    result = _tree_result(tree, root)
    logger.info(f"mlst_heuristic: {result.leaf_count} leaves, internal = {natural_sorted(result.internal)}")
    return result


def _bfs_tree(g: nx.Graph, nodes: Sequence[str]) -> tuple[nx.Graph, str]:
    root = natural_sorted(nodes)[0]
    sub = g.subgraph(nodes)
    tree = nx.Graph()
    tree.add_node(root)
    tree.add_edges_from(nx.bfs_edges(sub, root, sort_neighbors=lambda ns: natural_sorted(ns)))
    return tree, root


def mlst_exact(graph: Graph, limit: int = DEFAULT_MLST_LIMIT) -> SpanningTreeResult:
    """Spanning tree with the maximum number of leaves.

    Tries leaf sets from largest to smallest. A leaf set L is feasible when
    the rest I is nonempty, induces a connected subgraph, and every node of
    L has a neighbor in I; the tree is a BFS tree of I with each leaf hung
    on its smallest-id neighbor in I.
    """
    g = _require_connected(graph, "mlst_exact")
    _require_limit(graph, limit, "mlst_exact")
    nodes = natural_sorted(g.nodes)
    n = len(nodes)

    for size in range(n - 1, 0, -1):
        for leaves in combinations(nodes, size):
            leaf_set = set(leaves)
            inner = [v for v in nodes if v not in leaf_set]
            if not nx.is_connected(g.subgraph(inner)):
                continue
            anchors = {}
            for leaf in leaves:
                hooks = [m for m in g.neighbors(leaf) if m not in leaf_set]
                if not hooks:
                    break
                anchors[leaf] = natural_sorted(hooks)[0]
            else:
                tree, root = _bfs_tree(g, inner)
                tree.add_edges_from(anchors.items())
                result = _tree_result(tree, root)
                logger.info(f"mlst_exact: {result.leaf_count} leaves")
                return result
    raise AssertionError("a connected graph always has a spanning tree")


# ----------------------------------------------------------------------------
# Connected dominating set
# ----------------------------------------------------------------------------

def cds_heuristic(graph: Graph) -> frozenset[str]:
    """Greedy connected dominating set.

    Starts from the node dominating the most nodes, then repeatedly adds
    the dominated non-member that dominates the most new nodes.
    """
    g = _require_connected(graph, "cds_heuristic")
    start = _pick(g.nodes, g.degree)
    chosen = {start}
    dominated = {start, *g.neighbors(start)}

    while len(dominated) < g.number_of_nodes():
        def gain(n):
            return sum(1 for m in g.neighbors(n) if m not in dominated)
        node = _pick((n for n in dominated if n not in chosen), gain)
        chosen.add(node)
        dominated.update(g.neighbors(node))

    logger.info(f"cds_heuristic: {len(chosen)} nodes {natural_sorted(chosen)}")
    return frozenset(chosen)


def cds_exact(graph: Graph, limit: int = DEFAULT_CDS_LIMIT) -> frozenset[str]:
    """Minimum connected dominating set; the lexicographically first one on ties."""
    g = _require_connected(graph, "cds_exact")
    _require_limit(graph, limit, "cds_exact")
    nodes = natural_sorted(g.nodes)
    for size in range(1, len(nodes) + 1):
        for subset in combinations(nodes, size):
            if nx.is_dominating_set(g, subset) and nx.is_connected(g.subgraph(subset)):
                logger.info(f"cds_exact: {size} nodes {list(subset)}")
                return frozenset(subset)
    raise AssertionError("the full node set is always a connected dominating set")


def mlst_cds_identity_check(graph: Graph, mlst_limit: int = DEFAULT_MLST_LIMIT,
                            cds_limit: int = DEFAULT_CDS_LIMIT) -> bool:
    """True iff |CDS*| = n - (maximum leaf count)."""
    n = len(graph.nodes)
    if n < 3:
        raise InputError(f"identity check needs at least 3 nodes, got {n}")
    return len(cds_exact(graph, cds_limit)) == n - mlst_exact(graph, mlst_limit).leaf_count


# ----------------------------------------------------------------------------
# Two-level network design
# ----------------------------------------------------------------------------

def _require_costs(graph: Graph, g: nx.Graph) -> None:
    for u, v in graph.edges:
        if pair_key(u, v) not in graph.costs:
            raise InputError(f"edge ({u},{v}) has no primary/secondary costs")


def _design_for_path(graph: Graph, g: nx.Graph, path: Sequence[str]) -> TwoLevelDesign:
    """Cheapest design with a fixed primary path: contract the path, then
    take a minimum spanning tree on secondary costs."""
    on_path = set(path)
    primary_edges = [_edge(u, v) for u, v in zip(path, path[1:])]
    primary_cost = sum(graph.cost(u, v)[0] for u, v in primary_edges)

    contracted = nx.Graph()
    contracted.add_node(_PATH_NODE)
    contracted.add_nodes_from(v for v in natural_sorted(g.nodes) if v not in on_path)
    for u, v in _sorted_edges(g.edges):
        secondary = graph.cost(u, v)[1]
        if u in on_path and v in on_path:
            continue
        if u in on_path or v in on_path:
            outside = v if u in on_path else u
            if contracted.has_edge(_PATH_NODE, outside) and contracted[_PATH_NODE][outside]["weight"] <= secondary:
                continue
            contracted.add_edge(_PATH_NODE, outside, weight=secondary, original=(u, v))
        else:
            contracted.add_edge(u, v, weight=secondary, original=(u, v))

    forest = nx.minimum_spanning_tree(contracted, weight="weight", algorithm="kruskal")
    secondary_edges = [d["original"] for _, _, d in forest.edges(data=True)]
    secondary_cost = sum(d["weight"] for _, _, d in forest.edges(data=True))
    return TwoLevelDesign(tuple(path), tuple(primary_edges), _sorted_edges(secondary_edges),
                          float(primary_cost), float(secondary_cost))


def _prepare_htnd(graph: Graph, what: str) -> nx.Graph:
    g = _require_connected(graph, what)
    _require_costs(graph, g)
    return g


def htnd_heuristic(graph: Graph) -> TwoLevelDesign:
    """Cheapest design among a small set of primary-path trials.

    Trials are every single edge plus the primary-cost shortest path between
    each pair of maximum-eccentricity nodes.
    """
    g = _prepare_htnd(graph, "htnd_heuristic")

    candidates: list[tuple[str, ...]] = [e for e in _sorted_edges(g.edges)]
    periphery = natural_sorted(nx.periphery(g))
    for u, v in combinations(periphery, 2):
        path = tuple(nx.shortest_path(g, u, v, weight="primary"))
        if len(path) > 2:
            candidates.append(path)

    best: TwoLevelDesign | None = None
    for path in candidates:
        design = _design_for_path(graph, g, path)
        if best is None or design.total_cost < best.total_cost:
            best = design
    logger.info(f"htnd_heuristic: {len(candidates)} trials, best path {list(best.primary_path)} "
                f"cost {best.total_cost}")
    return best


def htnd_exact(graph: Graph, limit: int = DEFAULT_HTND_LIMIT) -> TwoLevelDesign:
    """Minimum-cost design over every simple primary path."""
    g = _prepare_htnd(graph, "htnd_exact")
    _require_limit(graph, limit, "htnd_exact")

    best: TwoLevelDesign | None = None
    examined = 0
    for u, v in combinations(natural_sorted(g.nodes), 2):
        for path in nx.all_simple_paths(g, u, v):
            primary = sum(g[a][b]["primary"] for a, b in zip(path, path[1:]))
            # secondary costs are nonnegative, so the primary part bounds the total
            if best is not None and primary >= best.total_cost:
                continue
            examined += 1
            design = _design_for_path(graph, g, path)
            if best is None or design.total_cost < best.total_cost:
                best = design
    logger.info(f"htnd_exact: {examined} paths evaluated, best cost {best.total_cost}")
    return best


# ----------------------------------------------------------------------------
# Node screening table
# ----------------------------------------------------------------------------

def node_estimates(graph: Graph) -> EstimateTable:
    """Structural criticality of every node, ready for the screening detectors."""
    g = _require_connected(graph, "node_estimates")
    nodes = natural_sorted(g.nodes)
    betweenness = nx.betweenness_centrality(g, normalized=True)
    articulation = set(nx.articulation_points(g))
    internal = mlst_heuristic(graph).internal

    criteria = (
        CriterionSpec("degree", 1.0, 0.0, float(len(nodes) - 1), integral=True),
        CriterionSpec("betweenness", 1.0, 0.0, 1.0),
        CriterionSpec("articulation", 1.0, 0.0, 1.0, integral=True),
        CriterionSpec("tree_internal", 1.0, 0.0, 1.0, integral=True),
    )
    rows = [(g.degree(n), betweenness[n], int(n in articulation), int(n in internal)) for n in nodes]
    return EstimateTable.build(nodes, criteria, rows)
