"""Small graph builders and a seeded random graph generator."""

import random

from app.model import Graph


def path_graph(n: int) -> Graph:
    return Graph.build(range(1, n + 1), [(i, i + 1) for i in range(1, n)])


def cycle_graph(n: int) -> Graph:
    return Graph.build(range(1, n + 1), [(i, i % n + 1) for i in range(1, n + 1)])


def complete_graph(n: int) -> Graph:
    return Graph.build(range(1, n + 1), [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)])


def star_graph(leaves: int) -> Graph:
    return Graph.build(range(0, leaves + 1), [(0, i) for i in range(1, leaves + 1)])


def random_connected_graph(rng: random.Random, n: int, extra_edge_p: float = 0.3,
                           costs: bool = False) -> Graph:
    """Random spanning tree plus each remaining pair with probability extra_edge_p.

    With costs, secondary is drawn from 1..5 and primary from secondary..secondary+5.
    """
    nodes = list(range(1, n + 1))
    order = nodes[:]
    rng.shuffle(order)
    pairs = set()
    for i in range(1, n):
        u, v = order[i], order[rng.randrange(i)]
        pairs.add((min(u, v), max(u, v)))
    for u in nodes:
        for v in nodes:
            if u < v and (u, v) not in pairs and rng.random() < extra_edge_p:
                pairs.add((u, v))
    edges = []
    for u, v in sorted(pairs):
        if costs:
            secondary = rng.randint(1, 5)
            edges.append((u, v, secondary + rng.randint(0, 5), secondary))
        else:
            edges.append((u, v))
    return Graph.build(nodes, edges)
