from itertools import combinations
import random

import networkx as nx
import numpy as np
import pytest

from app.errors import InputError, InstanceTooLargeError
from app.io import load_document
from app.model import Graph
from app.netbn import (
    cds_exact,
    cds_heuristic,
    htnd_exact,
    htnd_heuristic,
    is_connected_dominating_set,
    is_spanning_tree,
    is_valid_design,
    mlst_cds_identity_check,
    mlst_exact,
    mlst_heuristic,
    node_estimates,
)

from .graphs import complete_graph, cycle_graph, path_graph, random_connected_graph, star_graph


def spanning_trees(graph: Graph):
    """Every spanning tree as an nx.Graph (edge-subset brute force)."""
    n = len(graph.nodes)
    for edges in combinations(graph.edges, n - 1):
        tree = nx.Graph()
        tree.add_nodes_from(graph.nodes)
        tree.add_edges_from(edges)
        if nx.is_tree(tree):
            yield tree


def brute_force_max_leaves(graph: Graph) -> int:
    return max(sum(1 for _, d in tree.degree if d == 1) for tree in spanning_trees(graph))


def brute_force_design_cost(graph: Graph) -> float:
    best = float("inf")
    for tree in spanning_trees(graph):
        total_secondary = sum(graph.cost(u, v)[1] for u, v in tree.edges)
        for u, v in combinations(graph.nodes, 2):
            path = nx.shortest_path(tree, u, v)
            extra = sum(graph.cost(a, b)[0] - graph.cost(a, b)[1] for a, b in zip(path, path[1:]))
            best = min(best, total_secondary + extra)
    return best


# ----------------------------------------------------------------------------
# Known graphs
# ----------------------------------------------------------------------------

@pytest.mark.parametrize("graph, leaves, cds_size", [
    (path_graph(5), 2, 3),
    (cycle_graph(5), 2, 3),
    (complete_graph(4), 3, 1),
    (star_graph(4), 4, 1),
    (cycle_graph(6), 2, 4),
])
def test_known_graphs(graph, leaves, cds_size):
    assert mlst_exact(graph).leaf_count == leaves
    assert len(cds_exact(graph)) == cds_size
    assert mlst_cds_identity_check(graph)


def test_path_cds_is_the_inner_nodes():
    assert cds_exact(path_graph(5)) == {"2", "3", "4"}
    assert mlst_exact(path_graph(5)).internal == {"2", "3", "4"}


def test_star_heuristics_are_optimal():
    star = star_graph(4)
    tree = mlst_heuristic(star)
    assert tree.root == "0"
    assert tree.leaves == {"1", "2", "3", "4"}
    assert cds_heuristic(star) == {"0"}


def test_two_node_graph():
    graph = path_graph(2)
    tree = mlst_exact(graph)
    assert tree.leaf_count == 2
    assert len(cds_exact(graph)) == 1
    with pytest.raises(InputError, match="at least 3"):
        mlst_cds_identity_check(graph)


def test_disconnected_graph_rejected():
    graph = Graph.build([1, 2, 3, 4], [(1, 2), (3, 4)])
    for detector in (mlst_heuristic, mlst_exact, cds_heuristic, cds_exact):
        with pytest.raises(InputError, match="connected"):
            detector(graph)


def test_single_node_rejected():
    with pytest.raises(InputError, match="at least 2"):
        mlst_heuristic(Graph.build([1], []))


def test_exact_limit():
    with pytest.raises(InstanceTooLargeError) as info:
        mlst_exact(path_graph(11))
    assert info.value.limit == 10
    with pytest.raises(InstanceTooLargeError):
        cds_exact(path_graph(6), limit=5)


def test_invalid_graph_rejected():
    graph = Graph.build([1, 2], [(1, 2), (2, 1)])
    with pytest.raises(InputError, match="duplicate-edge"):
        mlst_heuristic(graph)


# ----------------------------------------------------------------------------
# Two-level design
# ----------------------------------------------------------------------------

def test_triangle_design():
    graph = Graph.build([1, 2, 3], [(1, 2, 10, 1), (2, 3, 10, 1), (1, 3, 10, 1)])
    design = htnd_exact(graph)
    assert design.total_cost == 11
    assert design.primary_path == ("1", "2")
    assert is_valid_design(graph, design)
    assert htnd_heuristic(graph).total_cost == 11


def test_path_with_double_primary_cost():
    secondary = [3, 1, 2]
    graph = Graph.build([1, 2, 3, 4], [(i + 1, i + 2, 2 * s, s) for i, s in enumerate(secondary)])
    design = htnd_exact(graph)
    assert design.total_cost == sum(secondary) + min(secondary)
    assert design.primary_edges == (("2", "3"),)


def test_equal_costs_give_mst_weight():
    rng = random.Random(7)
    for _ in range(10):
        base = random_connected_graph(rng, 6, costs=True)
        graph = Graph.build(base.nodes, [(u, v, base.cost(u, v)[1], base.cost(u, v)[1]) for u, v in base.edges])
        mst = nx.minimum_spanning_tree(graph.to_networkx(), weight="secondary")
        assert htnd_exact(graph).total_cost == pytest.approx(mst.size(weight="secondary"))


def test_design_needs_costs():
    with pytest.raises(InputError, match="costs"):
        htnd_exact(path_graph(3))


def test_design_rejects_secondary_above_primary():
    graph = Graph.build([1, 2], [(1, 2, 1, 5)])
    with pytest.raises(InputError, match="cost-order"):
        htnd_heuristic(graph)


def test_sample_network(resource):
    graph = load_document(resource("sample_network.json")).value
    exact = htnd_exact(graph)
    heuristic = htnd_heuristic(graph)
    assert is_valid_design(graph, exact)
    assert is_valid_design(graph, heuristic)
    assert heuristic.total_cost >= exact.total_cost
    assert exact.total_cost == pytest.approx(brute_force_design_cost(graph))


# ----------------------------------------------------------------------------
# Random oracle suites
# ----------------------------------------------------------------------------

def _report_gaps(record_property, **gaps):
    """Record the mean heuristic-to-exact gap of each suite and print a summary."""
    for name, values in gaps.items():
        mean = float(np.mean(values))
        assert np.isfinite(mean)
        assert mean >= -1e-9
        record_property(f"mean_{name}", round(mean, 4))
        print(f"{name}: mean {mean:.4f}, max {max(values):.4f} over {len(values)} graphs")


def test_random_mlst_and_cds(record_property):
    rng = random.Random(2024)
    leaf_gaps, size_gaps = [], []
    for _ in range(120):
        graph = random_connected_graph(rng, rng.randint(3, 9), extra_edge_p=rng.choice([0.1, 0.3, 0.5]))
        exact = mlst_exact(graph)
        heuristic = mlst_heuristic(graph)
        assert is_spanning_tree(graph, exact.edges)
        assert is_spanning_tree(graph, heuristic.edges)
        assert heuristic.leaf_count <= exact.leaf_count

        cds = cds_exact(graph)
        greedy = cds_heuristic(graph)
        assert is_connected_dominating_set(graph, cds)
        assert is_connected_dominating_set(graph, greedy)
        assert len(greedy) >= len(cds)
        assert len(cds) == len(graph.nodes) - exact.leaf_count
        leaf_gaps.append(exact.leaf_count - heuristic.leaf_count)
        size_gaps.append(len(greedy) - len(cds))

    _report_gaps(record_property, mlst_leaf_gap=leaf_gaps, cds_size_gap=size_gaps)


def test_random_mlst_against_edge_subsets():
    rng = random.Random(99)
    for _ in range(40):
        graph = random_connected_graph(rng, rng.randint(3, 6), extra_edge_p=0.4)
        assert mlst_exact(graph).leaf_count == brute_force_max_leaves(graph)


def test_random_designs(record_property):
    rng = random.Random(11)
    cost_gaps = []
    for _ in range(30):
        graph = random_connected_graph(rng, rng.randint(3, 6), extra_edge_p=0.4, costs=True)
        exact = htnd_exact(graph)
        heuristic = htnd_heuristic(graph)
        assert is_valid_design(graph, exact)
        assert is_valid_design(graph, heuristic)
        assert heuristic.total_cost >= exact.total_cost - 1e-9
        assert exact.total_cost == pytest.approx(brute_force_design_cost(graph))
        cost_gaps.append(heuristic.total_cost / exact.total_cost - 1.0)

    _report_gaps(record_property, htnd_cost_gap=cost_gaps)


def test_random_designs_up_to_limit():
    rng = random.Random(5)
    for _ in range(8):
        graph = random_connected_graph(rng, rng.randint(7, 8), extra_edge_p=0.25, costs=True)
        exact = htnd_exact(graph)
        assert is_valid_design(graph, exact)
        assert htnd_heuristic(graph).total_cost >= exact.total_cost - 1e-9


# ----------------------------------------------------------------------------
# Node estimates
# ----------------------------------------------------------------------------

def test_node_estimates_on_path():
    table = node_estimates(path_graph(5))
    assert table.components == ("1", "2", "3", "4", "5")
    assert table.column("degree") == {"1": 1, "2": 2, "3": 2, "4": 2, "5": 1}
    assert table.column("articulation") == {"1": 0, "2": 1, "3": 1, "4": 1, "5": 0}
    betweenness = table.column("betweenness")
    assert max(betweenness, key=betweenness.get) == "3"
    assert table.column("tree_internal")["1"] == 0
