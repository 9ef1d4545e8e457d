"""Batched conditional sampling and reachability counting.

The estimators repeatedly need "draw K worlds consistent with a status
assignment and count the nodes reachable from s in each".  Doing that
world-by-world in Python is far too slow at experiment scale, so this
module packs presence bits for 64 worlds into each uint64 word and runs
a frontier-tracked breadth-first fixpoint over all lanes at once.

Uniform draws use float32 (24-bit granularity).  An edge with
probability p is kept when u < p, so p = 0 and p = 1 stay exact and
interior probabilities are realized within 2^-24 of their value, far
below the Monte-Carlo noise of any supported configuration.  Coins are
drawn for all m edges of every world in one row-major block per batch;
draws on determined edges are discarded.  The opt-in lazy sampler
instead flips a coin only when the frontier first examines an edge,
which changes RNG consumption but not the law of the counts.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .graph import EdgeStatus, InfluenceNetwork

try:  # pragma: no cover - exercised implicitly by every import
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    numba = None
    HAVE_NUMBA = False

_ZERO = int(EdgeStatus.ZERO)
_ONE = int(EdgeStatus.ONE)
_STAR = int(EdgeStatus.STAR)

# De Bruijn multiplication table for counting trailing zeros of a uint64.
_CTZ_MUL = np.uint64(0x03F79D71B4CB0A89)
_CTZ_TABLE = np.zeros(64, dtype=np.int64)
for _p in range(64):
    _CTZ_TABLE[int((((1 << _p) * int(_CTZ_MUL)) & 0xFFFFFFFFFFFFFFFF) >> 58)] = _p
assert len({int((((1 << p) * int(_CTZ_MUL)) & 0xFFFFFFFFFFFFFFFF) >> 58) for p in range(64)}) == 64

# Cap on rows*edges per sampled block, to bound transient memory.
_BLOCK_ELEMENTS = 16_000_000


@dataclass
class EngineView:
    """CSR-aligned arrays for one network, cached on the network object.

    Adjacency slot k holds edge ``edge_of_slot[k]``; presence matrices in
    this module index columns by slot so that each node's out-edges are
    contiguous.
    """

    n: int
    m: int
    indptr: np.ndarray
    dst: np.ndarray
    edge_of_slot: np.ndarray
    slot_of_edge: np.ndarray
    probs_slot: np.ndarray


def engine_view(net: InfluenceNetwork) -> EngineView:
    if net._engine is None:
        indptr, slots = net.out_adjacency()
        slot_of_edge = np.empty(net.m, dtype=np.int64)
        slot_of_edge[slots] = np.arange(net.m, dtype=np.int64)
        net._engine = EngineView(
            n=net.n,
            m=net.m,
            indptr=indptr.astype(np.int64),
            dst=net.dst[slots].astype(np.int32) if net.m else np.zeros(0, np.int32),
            edge_of_slot=slots,
            slot_of_edge=slot_of_edge,
            probs_slot=net.probs[slots].astype(np.float32) if net.m else np.zeros(0, np.float32),
        )
    return net._engine


def pack_lanes(presence: np.ndarray) -> np.ndarray:
    """Pack a (rows, m) boolean presence matrix into (ceil(rows/64), m)
    uint64 words; bit j of word [c, e] is row c*64+j of column e."""
    rows, m = presence.shape
    n_words = (rows + 63) // 64
    if m == 0 or rows == 0:
        return np.zeros((n_words, m), dtype=np.uint64)
    padded = np.zeros((n_words * 64, m), dtype=bool)
    padded[:rows] = presence
    blocks = padded.reshape(n_words, 64, m)
    packed = np.packbits(blocks, axis=1, bitorder="little")
    return packed.transpose(0, 2, 1).copy().view(np.uint64).reshape(n_words, m)


if HAVE_NUMBA:

    @numba.njit(cache=True)
    def _bit_reach(indptr, dst, words, s, n_valid, counts, ctz_table):
        n = indptr.size - 1
        n_words = words.shape[0]
        visited = np.empty(n, np.uint64)
        fresh = np.empty(n, np.uint64)
        pending = np.empty(n, np.uint64)
        queue = np.empty(n, np.int32)
        next_queue = np.empty(n, np.int32)
        queued = np.zeros(n, np.uint8)
        zero = np.uint64(0)
        one = np.uint64(1)
        mul = np.uint64(0x03F79D71B4CB0A89)
        for c in range(n_words):
            base = c * 64
            lanes = n_valid - base
            if lanes <= 0:
                break
            for v in range(n):
                visited[v] = zero
                fresh[v] = zero
                pending[v] = zero
            if lanes >= 64:
                full = np.uint64(0xFFFFFFFFFFFFFFFF)
            else:
                full = (one << np.uint64(lanes)) - one
            visited[s] = full
            fresh[s] = full
            queue[0] = s
            q_len = 1
            while q_len > 0:
                nq_len = 0
                for qi in range(q_len):
                    v = queue[qi]
                    frontier = fresh[v]
                    for k in range(indptr[v], indptr[v + 1]):
                        w = dst[k]
                        add = frontier & words[c, k] & ~visited[w]
                        if add != zero:
                            visited[w] |= add
                            pending[w] |= add
                            if queued[w] == 0:
                                queued[w] = 1
                                next_queue[nq_len] = w
                                nq_len += 1
                for qi in range(nq_len):
                    w = next_queue[qi]
                    fresh[w] = pending[w]
                    pending[w] = zero
                    queued[w] = 0
                    queue[qi] = w
                q_len = nq_len
            for v in range(n):
                if v == s:
                    continue
                bits = visited[v]
                while bits != zero:
                    lsb = bits & (~bits + one)
                    lane = ctz_table[(lsb * mul) >> np.uint64(58)]
                    counts[base + lane] += 1
                    bits ^= lsb
        return counts


def _bit_reach_py(indptr, dst, words, s, n_valid, counts, ctz_table):
    """Pure-Python mirror of the numba kernel (fallback and test seam)."""
    n = indptr.size - 1
    n_valid = int(n_valid)  # arbitrary-precision lane masks need plain ints
    mask64 = (1 << 64) - 1
    for c in range(words.shape[0]):
        base = c * 64
        lanes = n_valid - base
        if lanes <= 0:
            break
        full = mask64 if lanes >= 64 else (1 << lanes) - 1
        visited = [0] * n
        fresh = [0] * n
        visited[s] = full
        fresh[s] = full
        queue = [s]
        while queue:
            next_pending: dict[int, int] = {}
            for v in queue:
                frontier = fresh[v]
                for k in range(indptr[v], indptr[v + 1]):
                    w = int(dst[k])
                    add = frontier & int(words[c, k]) & (mask64 ^ visited[w])
                    if add:
                        visited[w] |= add
                        next_pending[w] = next_pending.get(w, 0) | add
            queue = list(next_pending)
            for w in queue:
                fresh[w] = next_pending[w]
        for v in range(n):
            if v == s:
                continue
            bits = visited[v]
            while bits:
                counts[base + (bits & -bits).bit_length() - 1] += 1
                bits &= bits - 1
    return counts


def reach_counts_rows(view: EngineView, presence_slot: np.ndarray, s: int) -> np.ndarray:
    """Reach count from s for each row of a slot-ordered presence matrix."""
    rows = presence_slot.shape[0]
    counts = np.zeros(rows, dtype=np.int64)
    if rows == 0:
        return counts
    words = pack_lanes(presence_slot)
    if HAVE_NUMBA:
        _bit_reach(view.indptr, view.dst, words, s, rows, counts, _CTZ_TABLE)
    else:  # pragma: no cover - numba is a hard dependency
        _bit_reach_py(view.indptr, view.dst, words, s, rows, counts, _CTZ_TABLE)
    return counts


def draw_conditional_counts(
    view: EngineView,
    leaves: Sequence[tuple[np.ndarray, int]],
    s: int,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Sample every leaf's worlds and count reach from s in each.

    ``leaves`` holds (status codes in adjacency-slot order, number of
    worlds) pairs.  Returns (counts, offsets) where leaf i's counts
    occupy ``counts[offsets[i]:offsets[i+1]]``.  Draws are row-major
    with one float32 uniform per edge per world, independent of how rows
    are grouped into memory blocks.  Worlds match their leaf's
    assignment by construction: determined columns are overwritten with
    the forced status, so draws on them are discarded.
    """
    sizes = np.asarray([rows for _, rows in leaves], dtype=np.int64)
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    total = int(offsets[-1])
    counts = np.zeros(total, dtype=np.int64)
    if total == 0:
        return counts, offsets
    m = view.m
    # One status row per leaf, expanded into keep/force masks once and
    # gathered per world row below; forcing whole blocks at once instead
    # of leaf by leaf keeps the per-leaf cost flat even when most leaves
    # hold a single world.
    codes_mat = np.stack([codes for codes, _ in leaves])
    forced = bool((codes_mat != _STAR).any())
    if forced:
        keep_mat = codes_mat != _ZERO
        force_mat = codes_mat == _ONE
        leaf_of_row = np.repeat(np.arange(len(leaves)), sizes)
    budget = max(1, _BLOCK_ELEMENTS // max(m, 1))
    pos = 0
    while pos < total:
        rows = min(budget, total - pos)
        u = rng.random((rows, m), dtype=np.float32)
        presence = u < view.probs_slot
        if forced:
            block = leaf_of_row[pos : pos + rows]
            presence &= keep_mat[block]
            presence |= force_mat[block]
        counts[pos : pos + rows] = reach_counts_rows(view, presence, s)
        pos += rows
    return counts, offsets


def lazy_conditional_counts(
    net: InfluenceNetwork,
    leaves: Sequence[tuple[np.ndarray, int]],
    s: int,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Frontier-lazy variant of draw_conditional_counts.

    Takes the same (status codes in adjacency-slot order, number of
    worlds) leaves.  Flips a coin the first time the traversal examines
    a STAR edge and never touches edges the frontier cannot reach.  The
    law of the counts matches the eager sampler up to the float32
    probability granularity documented above (its coins are double
    precision), and RNG consumption differs entirely, which is why this
    path is opt-in.
    """
    indptr, slots = net.out_adjacency()
    dst = net.dst
    probs = net.probs
    sizes = np.asarray([rows for _, rows in leaves], dtype=np.int64)
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    counts = np.zeros(int(offsets[-1]), dtype=np.int64)
    pos = 0
    for codes, rows in leaves:
        for _ in range(rows):
            visited = np.zeros(net.n, dtype=bool)
            visited[s] = True
            queue = [s]
            head = 0
            count = 0
            while head < len(queue):
                v = queue[head]
                head += 1
                for k in range(indptr[v], indptr[v + 1]):
                    eid = int(slots[k])
                    code = codes[k]
                    if code == _STAR:
                        present = rng.random() < probs[eid]
                    else:
                        present = code == _ONE
                    if present:
                        w = int(dst[eid])
                        if not visited[w]:
                            visited[w] = True
                            count += 1
                            queue.append(w)
            counts[pos] = count
            pos += 1
    return counts, offsets
