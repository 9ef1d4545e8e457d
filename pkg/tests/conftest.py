"""Shared fixtures and pure-Python oracles.

The oracles here deliberately avoid the package's vectorized machinery:
reachability is a dict-adjacency BFS and influenceability is a direct
sum over all 2^m possible worlds.  Slow but obviously correct, they are
the ground truth the fast paths are tested against.
"""
from __future__ import annotations

import itertools
from collections import deque

import numpy as np
import pytest

from influest.graph import InfluenceNetwork


def oracle_reach(n: int, present_edges: list[tuple[int, int]], s: int) -> int:
    """Nodes other than s reachable from s, counted with a plain BFS
    over an adjacency dict."""
    adj: dict[int, list[int]] = {}
    for u, v in present_edges:
        adj.setdefault(u, []).append(v)
    visited = {s}
    queue = deque([s])
    while queue:
        v = queue.popleft()
        for w in adj.get(v, ()):
            if w not in visited:
                visited.add(w)
                queue.append(w)
    return len(visited) - 1


def oracle_influenceability(n: int, edges: list[tuple[int, int, float]], s: int) -> float:
    """Exact influenceability by summing reach * probability over every
    subset of edges.  Exponential in m; keep m small."""
    m = len(edges)
    total = 0.0
    for mask in itertools.product((False, True), repeat=m):
        prob = 1.0
        present = []
        for keep, (u, v, p) in zip(mask, edges):
            prob *= p if keep else 1.0 - p
            if keep:
                present.append((u, v))
        if prob > 0.0:
            total += prob * oracle_reach(n, present, s)
    return total


def random_small_instance(
    rng: np.random.Generator, max_n: int = 7, max_m: int = 12
) -> tuple[int, list[tuple[int, int, float]]]:
    """A random multigraph with a few deterministic probabilities mixed
    in, small enough for the enumeration oracle."""
    n = int(rng.integers(2, max_n + 1))
    m = int(rng.integers(1, max_m + 1))
    edges = []
    for _ in range(m):
        u = int(rng.integers(n))
        v = int(rng.integers(n))
        roll = rng.random()
        if roll < 0.15:
            p = float(rng.choice([0.0, 1.0]))
        else:
            p = float(rng.random())
        edges.append((u, v, p))
    return n, edges


def net_from_triples(n: int, edges: list[tuple[int, int, float]]) -> InfluenceNetwork:
    return InfluenceNetwork.from_edges(n, edges)


@pytest.fixture
def path_net() -> InfluenceNetwork:
    """a -> b -> c with probabilities 0.5 and 0.4; F_a = 0.7 exactly."""
    return InfluenceNetwork.from_edges(3, [(0, 1, 0.5), (1, 2, 0.4)])


# Six nodes, ten edges, in this input order.  Node ids follow first
# appearance: 0..5.  The breadth-first edge order from node 4 is
# [7, 8, 4, 5, 9, 0, 1, 2, 6, 3], which several selection tests pin.
TRACE_EDGES = [
    (0, 1, 0.13),  # e0
    (0, 2, 0.41),  # e1
    (0, 3, 0.77),  # e2
    (1, 5, 0.29),  # e3
    (2, 0, 0.62),  # e4
    (2, 3, 0.55),  # e5
    (3, 5, 0.34),  # e6
    (4, 2, 0.71),  # e7
    (4, 5, 0.48),  # e8
    (5, 1, 0.86),  # e9
]


@pytest.fixture
def trace_net() -> InfluenceNetwork:
    return InfluenceNetwork.from_edges(6, TRACE_EDGES)


# A fixed 5-node, 8-edge instance with mixed probabilities, small
# enough for exact oracles yet non-trivial for every estimator.
EIGHT_EDGE_TRIPLES = [
    (0, 1, 0.9),
    (0, 2, 0.3),
    (1, 2, 0.5),
    (1, 3, 0.25),
    (2, 3, 0.8),
    (3, 4, 0.6),
    (4, 0, 0.45),
    (2, 4, 0.15),
]


@pytest.fixture
def eight_edge_net() -> InfluenceNetwork:
    return InfluenceNetwork.from_edges(5, EIGHT_EDGE_TRIPLES)
