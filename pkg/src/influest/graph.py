"""Probabilistic influence networks and possible-world primitives.

An influence network is a directed graph whose edges carry independent
activation probabilities.  A possible graph (or possible world) is one
realization obtained by keeping each edge independently with its
probability.  This module holds the data model plus the reachability,
conditioning, and sampling operations every estimator builds on.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from enum import IntEnum
from typing import Iterable, Iterator, Sequence

import numpy as np

__all__ = [
    "Edge",
    "EdgeStatus",
    "InfluenceNetwork",
    "PossibleGraph",
    "StatusAssignment",
    "add_virtual_seed",
    "bfs_edge_order",
    "possible_graph_prob",
    "reach_count",
    "sample_possible_graph",
]


@dataclass(frozen=True)
class Edge:
    """A directed edge with an independent activation probability."""

    id: int
    src: int
    dst: int
    prob: float


class EdgeStatus(IntEnum):
    """Status of an edge while conditioning a network.

    ZERO: the edge is fixed absent.
    ONE: the edge is fixed present.
    STAR: the edge is undetermined and will be sampled.
    """

    ZERO = 0
    ONE = 1
    STAR = 2


class InfluenceNetwork:
    """Immutable directed graph with per-edge activation probabilities.

    Parameters
    ----------
    n : int
        Number of nodes; node ids are dense integers in [0, n).
    src, dst : array-like of int
        Endpoint node ids, one entry per edge.  Edge ids are dense in
        [0, m) following the input order, which also fixes the
        out-adjacency order per node (and thereby BFS tie-breaking).
    probs : array-like of float
        Activation probability per edge, each in [0, 1].

    Self-loops and parallel edges are accepted; each parallel edge is an
    independent Bernoulli trial and self-loops never change reach counts.
    """

    __slots__ = ("n", "src", "dst", "probs", "_csr", "_engine", "_bfs_orders")

    def __init__(self, n: int, src, dst, probs) -> None:
        if n < 1:
            raise ValueError("node count must be >= 1")
        self.n = int(n)
        self.src = np.ascontiguousarray(src, dtype=np.int64)
        self.dst = np.ascontiguousarray(dst, dtype=np.int64)
        self.probs = np.ascontiguousarray(probs, dtype=np.float64)
        if not (self.src.ndim == self.dst.ndim == self.probs.ndim == 1):
            raise ValueError("src, dst, probs must be one-dimensional")
        if not (self.src.size == self.dst.size == self.probs.size):
            raise ValueError("src, dst, probs must have equal length")
        if self.src.size and (self.src.min() < 0 or self.src.max() >= n):
            raise ValueError("edge source out of range")
        if self.dst.size and (self.dst.min() < 0 or self.dst.max() >= n):
            raise ValueError("edge destination out of range")
        if self.probs.size and (self.probs.min() < 0.0 or self.probs.max() > 1.0):
            raise ValueError("edge probability outside [0, 1]")
        for arr in (self.src, self.dst, self.probs):
            arr.setflags(write=False)
        self._csr = None
        self._engine = None
        self._bfs_orders: dict[int, np.ndarray] = {}

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int, float]]) -> "InfluenceNetwork":
        """Build from (src, dst, prob) triples in edge-id order."""
        triples = list(edges)
        if triples:
            src, dst, probs = zip(*triples)
        else:
            src, dst, probs = (), (), ()
        return cls(n, src, dst, probs)

    @property
    def m(self) -> int:
        """Number of edges."""
        return self.src.size

    @property
    def has_self_loops(self) -> bool:
        return bool(np.any(self.src == self.dst))

    def edge(self, eid: int) -> Edge:
        if not 0 <= eid < self.m:
            raise ValueError(f"edge id {eid} out of range")
        return Edge(eid, int(self.src[eid]), int(self.dst[eid]), float(self.probs[eid]))

    def edges(self) -> Iterator[Edge]:
        for eid in range(self.m):
            yield self.edge(eid)

    def out_adjacency(self) -> tuple[np.ndarray, np.ndarray]:
        """CSR out-adjacency: (indptr, edge ids) grouped by source node.

        Edge ids within one node keep their input order, so traversals
        that scan adjacency are deterministic.
        """
        if self._csr is None:
            order = np.argsort(self.src, kind="stable").astype(np.int64)
            indptr = np.zeros(self.n + 1, dtype=np.int64)
            np.add.at(indptr, self.src + 1, 1)
            np.cumsum(indptr, out=indptr)
            self._csr = (indptr, order)
        return self._csr

    def out_degree(self, v: int) -> int:
        indptr, _ = self.out_adjacency()
        return int(indptr[v + 1] - indptr[v])

    def __repr__(self) -> str:
        return f"InfluenceNetwork(n={self.n}, m={self.m})"


class StatusAssignment:
    """Per-edge conditioning statuses (dense array of EdgeStatus codes).

    The non-STAR entries form the determined edge set; the STAR entries
    are the edges still to be sampled.
    """

    __slots__ = ("codes",)

    def __init__(self, codes: np.ndarray) -> None:
        self.codes = codes

    @classmethod
    def all_star(cls, m: int) -> "StatusAssignment":
        return cls(np.full(m, int(EdgeStatus.STAR), dtype=np.uint8))

    @classmethod
    def from_statuses(cls, statuses: Sequence[EdgeStatus]) -> "StatusAssignment":
        return cls(np.asarray([int(s) for s in statuses], dtype=np.uint8))

    @property
    def m(self) -> int:
        return self.codes.size

    @property
    def determined_count(self) -> int:
        return int(np.count_nonzero(self.codes != int(EdgeStatus.STAR)))

    @property
    def star_count(self) -> int:
        return self.m - self.determined_count

    def star_ids(self) -> np.ndarray:
        return np.flatnonzero(self.codes == int(EdgeStatus.STAR))

    def status(self, eid: int) -> EdgeStatus:
        return EdgeStatus(int(self.codes[eid]))

    def copy(self) -> "StatusAssignment":
        return StatusAssignment(self.codes.copy())

    def with_statuses(self, edge_ids, statuses) -> "StatusAssignment":
        """Return a copy with the given edges set to the given statuses."""
        child = self.codes.copy()
        child[np.asarray(edge_ids, dtype=np.int64)] = np.asarray(
            [int(s) for s in statuses], dtype=np.uint8
        )
        return StatusAssignment(child)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, StatusAssignment):
            return NotImplemented
        return np.array_equal(self.codes, other.codes)

    def __repr__(self) -> str:
        return f"StatusAssignment(determined={self.determined_count}/{self.m})"


@dataclass
class PossibleGraph:
    """One realization of an influence network: per-edge presence bits."""

    network: InfluenceNetwork
    present: np.ndarray

    def __post_init__(self) -> None:
        self.present = np.asarray(self.present, dtype=bool)
        if self.present.shape != (self.network.m,):
            raise ValueError("presence vector length must equal edge count")


def possible_graph_prob(net: InfluenceNetwork, g: PossibleGraph) -> float:
    """Probability of drawing exactly this world: prod p_e over present
    edges times prod (1-p_e) over absent edges."""
    if g.network is not net:
        raise ValueError("possible graph does not belong to this network")
    p = net.probs
    return float(np.prod(np.where(g.present, p, 1.0 - p)))


def reach_count(g: PossibleGraph, s: int) -> int:
    """Number of nodes other than s reachable from s along present edges."""
    net = g.network
    if not 0 <= s < net.n:
        raise ValueError(f"node id {s} out of range")
    indptr, slots = net.out_adjacency()
    present = g.present
    dst = net.dst
    visited = np.zeros(net.n, dtype=bool)
    visited[s] = True
    queue = deque([s])
    count = 0
    while queue:
        v = queue.popleft()
        for k in range(indptr[v], indptr[v + 1]):
            eid = slots[k]
            if present[eid]:
                w = int(dst[eid])
                if not visited[w]:
                    visited[w] = True
                    count += 1
                    queue.append(w)
    return count


def sample_possible_graph(
    net: InfluenceNetwork, assign: StatusAssignment, rng: np.random.Generator
) -> PossibleGraph:
    """Draw one world consistent with a status assignment.

    Every STAR edge is independently present with its probability; every
    determined edge copies its status.  A coin is flipped for all m edges
    (draws for determined edges are discarded), so RNG consumption per
    call is always m uniforms.
    """
    if assign.m != net.m:
        raise ValueError("assignment length must equal edge count")
    u = rng.random(net.m)
    present = u < net.probs
    codes = assign.codes
    star = int(EdgeStatus.STAR)
    forced = codes != star
    present[forced] = codes[forced] == int(EdgeStatus.ONE)
    # conditioning contract: drawn worlds agree with the assignment
    assert np.array_equal(present[forced], codes[forced] == int(EdgeStatus.ONE))
    return PossibleGraph(net, present)


def bfs_edge_order(net: InfluenceNetwork, s: int) -> np.ndarray:
    """Edge ids in the order a breadth-first traversal from s first
    examines them.

    Nodes are dequeued FIFO; dequeuing a node examines all its out-edges
    in adjacency order (edges toward already-visited nodes included).
    Edges the traversal never examines are appended in ascending id
    order, so the result is always a permutation of [0, m).  The order
    is a pure function of (net, s) and is memoized on the network.
    """
    if not 0 <= s < net.n:
        raise ValueError(f"node id {s} out of range")
    cached = net._bfs_orders.get(s)
    if cached is not None:
        return cached
    indptr, slots = net.out_adjacency()
    dst = net.dst
    order = np.empty(net.m, dtype=np.int64)
    pos = 0
    examined = np.zeros(net.m, dtype=bool)
    visited = np.zeros(net.n, dtype=bool)
    visited[s] = True
    queue = deque([s])
    while queue:
        v = queue.popleft()
        for k in range(indptr[v], indptr[v + 1]):
            eid = int(slots[k])
            order[pos] = eid
            examined[eid] = True
            pos += 1
            w = int(dst[eid])
            if not visited[w]:
                visited[w] = True
                queue.append(w)
    rest = np.flatnonzero(~examined)
    order[pos:] = rest
    order.setflags(write=False)
    net._bfs_orders[s] = order
    return order


def add_virtual_seed(
    net: InfluenceNetwork, seeds: Iterable[int]
) -> tuple[InfluenceNetwork, int]:
    """Attach a virtual node wired to each seed with probability 1.

    Returns the extended network and the new node's id.  The original
    nodes, edges, and probabilities are preserved bit-for-bit; the new
    edges are appended after the originals.  Influenceability of the new
    node counts the seeds themselves (each is always reached through its
    probability-1 edge) plus everything they reach.
    """
    seed_list: list[int] = []
    seen: set[int] = set()
    for v in seeds:
        v = int(v)
        if not 0 <= v < net.n:
            raise ValueError(f"seed node {v} out of range")
        if v not in seen:
            seen.add(v)
            seed_list.append(v)
    if not seed_list:
        raise ValueError("seed set must be non-empty")
    s_star = net.n
    src = np.concatenate([net.src, np.full(len(seed_list), s_star, dtype=np.int64)])
    dst = np.concatenate([net.dst, np.asarray(seed_list, dtype=np.int64)])
    probs = np.concatenate([net.probs, np.ones(len(seed_list))])
    return InfluenceNetwork(net.n + 1, src, dst, probs), s_star
