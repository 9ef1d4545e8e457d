"""Sampling engine tests: lane packing, bit-parallel reachability, and
the conditional world samplers, all checked against the slow oracles."""
from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from influest import kernels
from influest.graph import EdgeStatus, InfluenceNetwork, PossibleGraph, reach_count

from conftest import net_from_triples, oracle_influenceability, oracle_reach

_STAR = np.uint8(int(EdgeStatus.STAR))
_ZERO = np.uint8(int(EdgeStatus.ZERO))
_ONE = np.uint8(int(EdgeStatus.ONE))


def random_net(rng: np.random.Generator, n_hi: int = 10, m_hi: int = 18) -> InfluenceNetwork:
    n = int(rng.integers(2, n_hi))
    m = int(rng.integers(0, m_hi))
    return InfluenceNetwork(
        n, rng.integers(0, n, m), rng.integers(0, n, m), rng.random(m)
    )


def slot_codes(view: kernels.EngineView, codes_by_edge: np.ndarray) -> np.ndarray:
    """Reorder an edge-id-indexed status array into adjacency-slot order."""
    return codes_by_edge[view.edge_of_slot]


class TestPackLanes:
    @given(seed=st.integers(0, 10_000))
    @settings(max_examples=40, deadline=None)
    def test_round_trip_against_unpackbits(self, seed):
        rng = np.random.default_rng(seed)
        rows = int(rng.integers(1, 200))
        m = int(rng.integers(1, 9))
        presence = rng.random((rows, m)) < 0.5
        packed = kernels.pack_lanes(presence)
        assert packed.shape == ((rows + 63) // 64, m)
        assert packed.dtype == np.uint64
        for c in range(packed.shape[0]):
            for e in range(m):
                word = int(packed[c, e])
                for j in range(64):
                    row = c * 64 + j
                    bit = (word >> j) & 1
                    expected = bool(presence[row, e]) if row < rows else False
                    assert bool(bit) == expected

    def test_empty_inputs(self):
        assert kernels.pack_lanes(np.zeros((0, 3), dtype=bool)).shape == (0, 3)
        assert kernels.pack_lanes(np.zeros((5, 0), dtype=bool)).shape == (1, 0)


class TestReachCountsRows:
    def test_matches_per_world_bfs(self):
        rng = np.random.default_rng(42)
        for _ in range(30):
            net = random_net(rng)
            view = kernels.engine_view(net)
            rows = int(rng.integers(1, 130))
            presence_by_edge = rng.random((rows, net.m)) < 0.5
            s = int(rng.integers(net.n))
            counts = kernels.reach_counts_rows(view, presence_by_edge[:, view.edge_of_slot], s)
            for i in range(rows):
                g = PossibleGraph(net, presence_by_edge[i])
                assert counts[i] == reach_count(g, s)

    def test_python_and_compiled_reach_agree(self):
        if not kernels.HAVE_NUMBA:
            pytest.skip("compiled kernel unavailable")
        rng = np.random.default_rng(9)
        for _ in range(10):
            net = random_net(rng, n_hi=12, m_hi=30)
            view = kernels.engine_view(net)
            rows = 100
            presence = rng.random((rows, net.m)) < 0.5
            presence_slot = presence[:, view.edge_of_slot]
            words = kernels.pack_lanes(presence_slot)
            s = int(rng.integers(net.n))
            got_fast = np.zeros(rows, dtype=np.int64)
            got_slow = np.zeros(rows, dtype=np.int64)
            kernels._bit_reach(
                view.indptr, view.dst, words, s, np.int64(rows), got_fast, kernels._CTZ_TABLE
            )
            kernels._bit_reach_py(
                view.indptr, view.dst, words, s, np.int64(rows), got_slow, kernels._CTZ_TABLE
            )
            assert np.array_equal(got_fast, got_slow)

    def test_zero_edges(self):
        net = InfluenceNetwork(3, [], [], [])
        view = kernels.engine_view(net)
        counts = kernels.reach_counts_rows(view, np.zeros((4, 0), dtype=bool), 1)
        assert np.array_equal(counts, np.zeros(4, dtype=np.int64))


class TestEngineView:
    def test_slot_maps_are_inverse_permutations(self):
        rng = np.random.default_rng(3)
        net = random_net(rng, n_hi=12, m_hi=25)
        view = kernels.engine_view(net)
        assert np.array_equal(view.slot_of_edge[view.edge_of_slot], np.arange(net.m))
        assert np.array_equal(view.edge_of_slot[view.slot_of_edge], np.arange(net.m))

    def test_slot_arrays_follow_adjacency(self):
        net = InfluenceNetwork(3, [1, 0, 1], [0, 1, 2], [0.1, 0.2, 0.3])
        view = kernels.engine_view(net)
        assert list(view.edge_of_slot) == [1, 0, 2]
        assert list(view.dst) == [1, 0, 2]
        assert np.allclose(view.probs_slot, np.float32([0.2, 0.1, 0.3]))

    def test_cached_on_network(self):
        net = InfluenceNetwork(2, [0], [1], [0.5])
        assert kernels.engine_view(net) is kernels.engine_view(net)


class TestDrawConditionalCounts:
    def test_offsets_partition_counts(self):
        net = net_from_triples(4, [(0, 1, 0.5), (1, 2, 0.5), (2, 3, 0.5)])
        view = kernels.engine_view(net)
        root = np.full(net.m, _STAR, dtype=np.uint8)
        leaves = [(root, 5), (root.copy(), 3), (root.copy(), 7)]
        counts, offsets = kernels.draw_conditional_counts(
            view, leaves, 0, np.random.default_rng(0)
        )
        assert list(offsets) == [0, 5, 8, 15]
        assert counts.size == 15

    def test_fully_determined_leaf_is_exact(self):
        rng = np.random.default_rng(17)
        for _ in range(20):
            net = random_net(rng, n_hi=8, m_hi=12)
            if net.m == 0:
                continue
            view = kernels.engine_view(net)
            present = rng.random(net.m) < 0.5
            codes_by_edge = np.where(present, _ONE, _ZERO).astype(np.uint8)
            s = int(rng.integers(net.n))
            counts, _ = kernels.draw_conditional_counts(
                view, [(slot_codes(view, codes_by_edge), 6)], s, rng
            )
            kept = [
                (int(net.src[e]), int(net.dst[e])) for e in range(net.m) if present[e]
            ]
            assert np.all(counts == oracle_reach(net.n, kept, s))

    def test_extreme_probabilities_exact(self):
        net = net_from_triples(3, [(0, 1, 1.0), (1, 2, 0.0)])
        view = kernels.engine_view(net)
        root = np.full(2, _STAR, dtype=np.uint8)
        counts, _ = kernels.draw_conditional_counts(
            view, [(root, 256)], 0, np.random.default_rng(1)
        )
        assert np.all(counts == 1)

    def test_forcing_overrides_probability(self):
        # a probability-1 edge forced absent and a probability-0 edge
        # forced present must obey the forcing, not the probability
        net = net_from_triples(3, [(0, 1, 1.0), (1, 2, 0.0)])
        view = kernels.engine_view(net)
        codes_by_edge = np.array([int(_ZERO), int(_ONE)], dtype=np.uint8)
        counts, _ = kernels.draw_conditional_counts(
            view, [(slot_codes(view, codes_by_edge), 64)], 0, np.random.default_rng(2)
        )
        assert np.all(counts == 0)
        counts2, _ = kernels.draw_conditional_counts(
            view, [(slot_codes(view, codes_by_edge), 64)], 1, np.random.default_rng(3)
        )
        assert np.all(counts2 == 1)

    def test_unconditional_mean_matches_exact(self):
        net = net_from_triples(3, [(0, 1, 0.5), (1, 2, 0.4)])
        view = kernels.engine_view(net)
        root = np.full(2, _STAR, dtype=np.uint8)
        counts, _ = kernels.draw_conditional_counts(
            view, [(root, 200_000)], 0, np.random.default_rng(4)
        )
        # exact value 0.7, sd of one world ~ 0.78
        assert abs(counts.mean() - 0.7) < 3 * 0.78 / np.sqrt(200_000)

    def test_conditional_mean_matches_conditioned_enumeration(self):
        triples = [(0, 1, 0.6), (1, 2, 0.5), (0, 2, 0.3), (2, 3, 0.7)]
        net = net_from_triples(4, triples)
        view = kernels.engine_view(net)
        # force edge 0 present and edge 2 absent; condition the oracle
        # by pinning those probabilities to 1 and 0
        codes_by_edge = np.array(
            [int(_ONE), int(_STAR), int(_ZERO), int(_STAR)], dtype=np.uint8
        )
        conditioned = [(0, 1, 1.0), (1, 2, 0.5), (0, 2, 0.0), (2, 3, 0.7)]
        expected = oracle_influenceability(4, conditioned, 0)
        counts, _ = kernels.draw_conditional_counts(
            view, [(slot_codes(view, codes_by_edge), 300_000)], 0, np.random.default_rng(5)
        )
        sd = counts.std()
        assert abs(counts.mean() - expected) < 3 * sd / np.sqrt(counts.size)

    def test_row_major_draws_independent_of_blocking(self, monkeypatch):
        net = net_from_triples(4, [(0, 1, 0.5), (1, 2, 0.5), (2, 3, 0.5), (0, 3, 0.5)])
        view = kernels.engine_view(net)
        root = np.full(4, _STAR, dtype=np.uint8)
        leaves = [(root, 100), (root.copy(), 60)]
        big, _ = kernels.draw_conditional_counts(view, leaves, 0, np.random.default_rng(6))
        monkeypatch.setattr(kernels, "_BLOCK_ELEMENTS", 64)
        small, _ = kernels.draw_conditional_counts(view, leaves, 0, np.random.default_rng(6))
        assert np.array_equal(big, small)

    def test_empty_leaves(self):
        net = net_from_triples(2, [(0, 1, 0.5)])
        view = kernels.engine_view(net)
        counts, offsets = kernels.draw_conditional_counts(
            view, [], 0, np.random.default_rng(0)
        )
        assert counts.size == 0
        assert list(offsets) == [0]


class TestLazyConditionalCounts:
    def test_matches_eager_when_fully_determined(self):
        rng = np.random.default_rng(23)
        for _ in range(10):
            net = random_net(rng, n_hi=7, m_hi=10)
            if net.m == 0:
                continue
            view = kernels.engine_view(net)
            present = rng.random(net.m) < 0.5
            codes_by_edge = np.where(present, _ONE, _ZERO).astype(np.uint8)
            s = int(rng.integers(net.n))
            leaves = [(slot_codes(view, codes_by_edge), 4)]
            eager, off_a = kernels.draw_conditional_counts(
                view, leaves, s, np.random.default_rng(0)
            )
            lazy, off_b = kernels.lazy_conditional_counts(
                net, leaves, s, np.random.default_rng(0)
            )
            assert np.array_equal(eager, lazy)
            assert np.array_equal(off_a, off_b)

    def test_same_law_as_eager(self):
        # same conditional mean within Monte-Carlo noise, despite a
        # completely different RNG consumption pattern
        net = net_from_triples(3, [(0, 1, 0.5), (1, 2, 0.4)])
        view = kernels.engine_view(net)
        root = np.full(2, _STAR, dtype=np.uint8)
        lazy, _ = kernels.lazy_conditional_counts(
            net, [(root, 40_000)], 0, np.random.default_rng(8)
        )
        assert abs(lazy.mean() - 0.7) < 3 * 0.78 / np.sqrt(40_000)

    def test_untouched_edges_draw_no_coins(self):
        # seed node 1 cannot reach edge 0's source, so only edge 1's
        # coin is flipped per world: consumption is one uniform per row
        net = net_from_triples(3, [(0, 1, 0.5), (1, 2, 0.5)])
        view = kernels.engine_view(net)
        root = np.full(2, _STAR, dtype=np.uint8)
        rng = np.random.default_rng(10)
        ref = np.random.default_rng(10)
        counts, _ = kernels.lazy_conditional_counts(net, [(root, 50)], 1, rng)
        expected = (ref.random(50) < 0.5).astype(np.int64)
        assert np.array_equal(counts, expected)
