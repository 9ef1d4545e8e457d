"""Influenceability estimators.

Exact methods (full possible-world enumeration and a divide-and-conquer
expansion) plus five sampling estimators: naive Monte-Carlo and four
stratified schemes.  The stratified schemes fix the statuses of r
selected edges per stratum — either every full 0/1 pattern (2^r strata,
type I) or the r+1 prefix patterns "first i-1 absent, edge i present"
(type II) — allocate the sample budget proportionally to stratum
probabilities, and average conditional Monte-Carlo draws inside each
stratum.  The recursive variants re-stratify inside a stratum while its
budget stays above a cutoff tau, falling back to conditional
Monte-Carlo below it.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from . import kernels
from .graph import EdgeStatus, InfluenceNetwork, bfs_edge_order

__all__ = [
    "EXACT_GUARD_EDGES",
    "TYPE1_MAX_R",
    "EdgeSelectionStrategy",
    "Estimate",
    "EstimatorConfig",
    "EstimatorKind",
    "SelectionState",
    "StratumDescriptor",
    "allocate_samples",
    "brute_force_exact",
    "bss1_estimate",
    "bss2_estimate",
    "estimate",
    "exact_dc",
    "make_selection_state",
    "nmc_estimate",
    "optimal_allocation",
    "rss1_estimate",
    "rss2_estimate",
    "select_edges",
    "stratum_prob_t1",
    "stratum_prob_t2",
    "t1_strata",
    "t2_strata",
]

_STAR = int(EdgeStatus.STAR)
_ZERO = int(EdgeStatus.ZERO)
_ONE = int(EdgeStatus.ONE)

# Exact methods enumerate up to 2^m worlds.
EXACT_GUARD_EDGES = 25
# Type-I stratification materializes 2^r strata.
TYPE1_MAX_R = 20


class EstimatorKind(str, Enum):
    NMC = "nmc"
    EXACT_DC = "exact_dc"
    BRUTE_FORCE = "brute_force"
    BSS1 = "bss1"
    RSS1 = "rss1"
    BSS2 = "bss2"
    RSS2 = "rss2"


class EdgeSelectionStrategy(str, Enum):
    """How stratification edges are chosen from the undetermined set."""

    RANDOM = "random"
    BFS_ORDER = "bfs"


@dataclass(frozen=True)
class EstimatorConfig:
    """Parameters shared by all estimators.

    n_samples is the total budget N; r the stratification width; tau the
    recursion cutoff (recursive estimators fall back to conditional
    Monte-Carlo when a stratum's budget drops below it); strategy the
    edge-selection rule; seed the RNG seed making runs reproducible.
    lazy_bfs_sampling opts into flipping coins only for frontier-examined
    edges (identical law, different RNG consumption, no batching).
    """

    kind: EstimatorKind
    n_samples: int = 1000
    r: int = 5
    tau: int = 10
    strategy: EdgeSelectionStrategy = EdgeSelectionStrategy.BFS_ORDER
    seed: int = 0
    lazy_bfs_sampling: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", EstimatorKind(self.kind))
        object.__setattr__(self, "strategy", EdgeSelectionStrategy(self.strategy))
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if self.r < 1:
            raise ValueError("r must be >= 1")
        if self.tau < 1:
            raise ValueError("tau must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be >= 0")
        if self.kind in (EstimatorKind.BSS1, EstimatorKind.RSS1) and self.r > TYPE1_MAX_R:
            raise ValueError(
                f"r={self.r} too large for {self.kind.value}: 2^r strata "
                f"(guard r <= {TYPE1_MAX_R})"
            )


@dataclass(frozen=True)
class Estimate:
    """An estimator's output: value, worlds actually drawn, wall time."""

    value: float
    samples_used: int
    elapsed: float


@dataclass(frozen=True)
class StratumDescriptor:
    """One stratum: the selected edges, their fixed statuses, its mass."""

    edge_ids: tuple[int, ...]
    pattern: tuple[EdgeStatus, ...]
    pi: float


# ---------------------------------------------------------------------------
# stratum probabilities and sample allocation
# ---------------------------------------------------------------------------


def stratum_prob_t1(net: InfluenceNetwork, edge_ids: Sequence[int], pattern) -> float:
    """Probability mass of one full 0/1 pattern over the selected edges:
    prod p_e over present entries times prod (1-p_e) over absent ones."""
    ids = np.asarray(edge_ids, dtype=np.int64)
    pat = np.asarray([int(s) for s in pattern], dtype=np.int64)
    if ids.size != pat.size:
        raise ValueError("pattern length must match selected edge count")
    if np.any(pat == _STAR):
        raise ValueError("type-I patterns must be fully determined")
    p = net.probs[ids]
    return float(np.prod(np.where(pat == _ONE, p, 1.0 - p)))


def stratum_prob_t2(net: InfluenceNetwork, edge_ids: Sequence[int], i: int) -> float:
    """Probability mass of prefix stratum i over the selected edges:
    i=0 fixes all r edges absent; i>=1 fixes the first i-1 absent and
    edge i present, leaving the rest undetermined."""
    ids = np.asarray(edge_ids, dtype=np.int64)
    r = ids.size
    if not 0 <= i <= r:
        raise ValueError(f"stratum index {i} outside [0, {r}]")
    p = net.probs[ids]
    if i == 0:
        return float(np.prod(1.0 - p))
    return float(p[i - 1] * np.prod(1.0 - p[: i - 1]))


def _t1_pis(probs: np.ndarray) -> np.ndarray:
    """Masses of all 2^l full patterns; bit j of the index is edge j's
    status (least-significant bit first)."""
    pis = np.ones(1)
    for pj in probs:
        pis = np.concatenate([pis * (1.0 - pj), pis * pj])
    return pis


def _t2_pis(probs: np.ndarray) -> np.ndarray:
    """Masses of the l+1 prefix strata; telescopes to exactly 1."""
    absent = np.concatenate([[1.0], np.cumprod(1.0 - probs)])
    pis = np.empty(probs.size + 1)
    pis[0] = absent[-1]
    pis[1:] = probs * absent[:-1]
    return pis


def t1_strata(net: InfluenceNetwork, edge_ids: Sequence[int]) -> list[StratumDescriptor]:
    """All 2^r full-pattern strata over the selected edges."""
    ids = tuple(int(e) for e in edge_ids)
    pis = _t1_pis(net.probs[np.asarray(ids, dtype=np.int64)])
    out = []
    for idx, pi in enumerate(pis):
        pattern = tuple(
            EdgeStatus.ONE if (idx >> j) & 1 else EdgeStatus.ZERO for j in range(len(ids))
        )
        out.append(StratumDescriptor(ids, pattern, float(pi)))
    return out


def t2_strata(net: InfluenceNetwork, edge_ids: Sequence[int]) -> list[StratumDescriptor]:
    """The r+1 prefix strata over the selected edges (undetermined tail
    entries keep STAR status)."""
    ids = tuple(int(e) for e in edge_ids)
    pis = _t2_pis(net.probs[np.asarray(ids, dtype=np.int64)])
    out = [
        StratumDescriptor(ids, tuple(EdgeStatus.ZERO for _ in ids), float(pis[0]))
    ]
    for i in range(1, len(ids) + 1):
        pattern = tuple(
            EdgeStatus.ZERO if j < i - 1 else EdgeStatus.ONE if j == i - 1 else EdgeStatus.STAR
            for j in range(len(ids))
        )
        out.append(StratumDescriptor(ids, pattern, float(pis[i])))
    return out


def allocate_samples(pis, n_samples: int) -> np.ndarray:
    """Split a sample budget across strata proportionally to their masses.

    Largest-remainder apportionment of n_samples, then every stratum
    with positive mass is raised to at least one sample so no stratum is
    silently dropped (the total may then exceed the budget; callers
    report actual usage).  Zero-mass strata get exactly zero.
    """
    pis = np.asarray(pis, dtype=np.float64)
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    total = float(pis.sum())
    if not math.isclose(total, 1.0, rel_tol=0.0, abs_tol=1e-9):
        raise ValueError(f"stratum masses must sum to 1 (got {total})")
    if np.any(pis < 0.0):
        raise ValueError("stratum masses must be non-negative")
    quota = pis * n_samples
    alloc = np.floor(quota).astype(np.int64)
    leftover = n_samples - int(alloc.sum())
    if leftover > 0:
        frac = quota - alloc
        order = np.lexsort((np.arange(pis.size), -frac))
        alloc[order[:leftover]] += 1
    alloc[(pis > 0.0) & (alloc == 0)] = 1
    return alloc


def optimal_allocation(pis, sigmas, n_samples: int) -> np.ndarray:
    """Variance-minimizing real-valued allocation N_i proportional to
    pi_i * sqrt(sigma_i), where sigma_i is stratum i's conditional
    variance.

    Reference formula only: sigma_i is unknown at runtime (it requires
    the very quantity being estimated), so no estimator uses this; it
    exists for tests on instances small enough to compute sigma_i
    exactly.  Falls back to proportional allocation when every stratum
    has zero variance.
    """
    pis = np.asarray(pis, dtype=np.float64)
    sigmas = np.asarray(sigmas, dtype=np.float64)
    weights = pis * np.sqrt(sigmas)
    denom = weights.sum()
    if denom <= 0.0:
        return pis * n_samples
    return n_samples * weights / denom


# ---------------------------------------------------------------------------
# edge selection
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SelectionState:
    """Selection strategy plus its consumable state.

    For BFS_ORDER, ``order`` is the fixed edge visiting order computed
    once from the seed and ``pos`` the scan start; entries before pos
    are known to be determined.  RANDOM carries no state.
    """

    strategy: EdgeSelectionStrategy
    order: np.ndarray | None = None
    pos: int = 0


def make_selection_state(
    strategy: EdgeSelectionStrategy, net: InfluenceNetwork, s: int
) -> SelectionState:
    strategy = EdgeSelectionStrategy(strategy)
    if strategy is EdgeSelectionStrategy.BFS_ORDER:
        return SelectionState(strategy, bfs_edge_order(net, s), 0)
    return SelectionState(strategy)


def select_edges(
    state: SelectionState, codes: np.ndarray, r: int, rng: np.random.Generator
) -> tuple[np.ndarray, SelectionState]:
    """Pick min(r, |undetermined|) distinct undetermined edges.

    ``codes`` is the status array defining the undetermined set (STAR
    entries).  RANDOM draws uniformly without replacement; BFS_ORDER
    takes the first unconsumed entries of the precomputed order that are
    still undetermined.  Returns the ordered selection and the advanced
    state.
    """
    if state.strategy is EdgeSelectionStrategy.RANDOM:
        stars = np.flatnonzero(codes == _STAR)
        if stars.size == 0:
            raise ValueError("no undetermined edges to select from")
        take = min(r, stars.size)
        return rng.choice(stars, size=take, replace=False), state
    order = state.order
    assert order is not None
    picked = []
    first_star = -1
    pos = state.pos
    while pos < order.size and len(picked) < r:
        eid = order[pos]
        if codes[eid] == _STAR:
            if first_star < 0:
                first_star = pos
            picked.append(eid)
        pos += 1
    if not picked:
        raise ValueError("no undetermined edges to select from")
    new_state = SelectionState(state.strategy, order, first_star)
    return np.asarray(picked, dtype=np.int64), new_state


# ---------------------------------------------------------------------------
# exact computation
# ---------------------------------------------------------------------------


def _check_node(net: InfluenceNetwork, s: int) -> None:
    if not 0 <= s < net.n:
        raise ValueError(f"node id {s} out of range")


def _check_exact_guard(net: InfluenceNetwork) -> None:
    if net.m > EXACT_GUARD_EDGES:
        raise ValueError(
            f"exact computation enumerates 2^m worlds; m={net.m} exceeds "
            f"the guard of {EXACT_GUARD_EDGES} edges"
        )


def brute_force_exact(net: InfluenceNetwork, s: int) -> float:
    """Influenceability by direct enumeration of all 2^m worlds."""
    _check_node(net, s)
    _check_exact_guard(net)
    m = net.m
    if m == 0:
        return 0.0
    view = kernels.engine_view(net)
    p = net.probs
    shifts = np.arange(m, dtype=np.int64)
    total = 0.0
    chunk = 1 << 14
    for start in range(0, 1 << m, chunk):
        idx = np.arange(start, min(start + chunk, 1 << m), dtype=np.int64)
        bits = ((idx[:, None] >> shifts) & 1).astype(bool)
        prob = np.prod(np.where(bits, p, 1.0 - p), axis=1)
        counts = kernels.reach_counts_rows(view, bits[:, view.edge_of_slot], s)
        total += float(prob @ counts)
    return total


def exact_dc(net: InfluenceNetwork, s: int, r: int = 5) -> float:
    """Influenceability by recursive expansion.

    Repeatedly selects up to r undetermined edges and expands every full
    status pattern over them, weighting each branch by its pattern mass,
    until all edges are determined.  The result is exact and independent
    of r and of which edges are selected at each step (so selection here
    is the deterministic lowest-id rule).  Zero-mass branches are pruned.
    """
    _check_node(net, s)
    _check_exact_guard(net)
    if r < 1:
        raise ValueError("r must be >= 1")
    m = net.m
    if m == 0:
        return 0.0
    view = kernels.engine_view(net)
    p = net.probs
    codes = np.full(m, _STAR, dtype=np.uint8)
    chunk = 1 << 14
    buf = np.empty((chunk, m), dtype=bool)
    wbuf = np.empty(chunk, dtype=np.float64)
    fill = 0
    total = 0.0

    def flush() -> None:
        nonlocal fill, total
        if fill == 0:
            return
        counts = kernels.reach_counts_rows(view, buf[:fill][:, view.edge_of_slot], s)
        total += float(wbuf[:fill] @ counts)
        fill = 0

    def expand(star_ids: np.ndarray, weight: float) -> None:
        nonlocal fill
        take = min(r, star_ids.size)
        selected = star_ids[:take]
        rest = star_ids[take:]
        probs_sel = p[selected]
        for pattern in range(1 << take):
            pi = 1.0
            for j in range(take):
                pi *= probs_sel[j] if (pattern >> j) & 1 else 1.0 - probs_sel[j]
                if pi == 0.0:
                    break
            if pi == 0.0:
                continue
            for j in range(take):
                codes[selected[j]] = _ONE if (pattern >> j) & 1 else _ZERO
            if rest.size == 0:
                buf[fill] = codes == _ONE
                wbuf[fill] = weight * pi
                fill += 1
                if fill == chunk:
                    flush()
            else:
                expand(rest, weight * pi)
        codes[selected] = _STAR

    expand(np.arange(m, dtype=np.int64), 1.0)
    flush()
    return total


# ---------------------------------------------------------------------------
# sampling estimators
# ---------------------------------------------------------------------------


@dataclass
class _JobPlan:
    """Planned conditional-sampling leaves of one estimator run.

    Leaf status codes are kept in adjacency-slot order (the sampling
    engine's column layout); selections are recorded as edge ids.
    """

    leaves: list[tuple[np.ndarray, int]] = field(default_factory=list)
    weights: list[float] = field(default_factory=list)
    selections: list[np.ndarray] = field(default_factory=list)


def _t1_patterns(l: int) -> np.ndarray:
    """Status rows of all 2^l full patterns; bit j of the row index is
    edge j's status, least-significant bit first."""
    idx = np.arange(1 << l, dtype=np.int64)[:, None]
    return ((idx >> np.arange(l, dtype=np.int64)) & 1).astype(np.uint8)


def _t2_patterns(l: int) -> np.ndarray:
    """Status rows of the l+1 prefix strata: row 0 all absent; row i>=1
    has the first i-1 absent, edge i present, and the tail undetermined."""
    pat = np.full((l + 1, l), _STAR, dtype=np.uint8)
    pat[0, :] = _ZERO
    ii = np.arange(1, l + 1)[:, None]
    jj = np.arange(l)[None, :]
    pat[1:][jj < ii - 1] = _ZERO
    pat[1:][jj == ii - 1] = _ONE
    return pat


def _build_plan(
    net: InfluenceNetwork,
    s: int,
    cfg: EstimatorConfig,
    rng: np.random.Generator,
    type2: bool,
    max_splits: int | None,
) -> _JobPlan:
    """Expand the stratification tree into conditional-sampling leaves.

    max_splits = 0 plans plain Monte-Carlo, 1 plans one-shot stratified
    sampling, None plans the recursive estimators (splitting while the
    budget stays at or above tau and enough undetermined edges remain,
    with a defensive depth cap of ceil(m/r)+1 levels).  Each leaf is a
    status assignment plus its allocated world count; its weight is the
    product of stratum masses along the path.  The traversal order is
    fixed (depth-first, strata in index order) so RNG use is
    reproducible.
    """
    m = net.m
    view = kernels.engine_view(net)
    plan = _JobPlan()
    depth_cap = (m + cfg.r - 1) // cfg.r + 1
    sel_state = make_selection_state(cfg.strategy, net, s)
    root = np.full(m, _STAR, dtype=np.uint8)
    recursive = max_splits is None
    stack: list[tuple[np.ndarray, int, int, float, int, SelectionState]] = [
        (root, m, cfg.n_samples, 1.0, 0, sel_state)
    ]
    while stack:
        codes, stars, budget, weight, splits, state = stack.pop()
        at_cap = splits >= depth_cap if recursive else splits >= max_splits
        if (
            stars == 0
            or at_cap
            or (recursive and (budget < cfg.tau or stars < cfg.r))
        ):
            plan.leaves.append((codes, budget))
            plan.weights.append(weight)
            continue
        selected, state = select_edges(state, codes[view.slot_of_edge], cfg.r, rng)
        plan.selections.append(selected)
        selected_slots = view.slot_of_edge[selected]
        l = selected.size
        probs_sel = net.probs[selected]
        if type2:
            pis = _t2_pis(probs_sel)
            pat = _t2_patterns(l)
            stars_after = stars - np.concatenate([[l], np.arange(1, l + 1)])
        else:
            pis = _t1_pis(probs_sel)
            pat = _t1_patterns(l)
            stars_after = np.full(pis.size, stars - l, dtype=np.int64)
        alloc = allocate_samples(pis, budget)
        keep = np.flatnonzero(pis > 0.0)
        child_mat = np.repeat(codes[None, :], keep.size, axis=0)
        child_mat[:, selected_slots] = pat[keep]
        children = [
            (
                child_mat[j],
                int(stars_after[i]),
                int(alloc[i]),
                weight * float(pis[i]),
                splits + 1,
                state,
            )
            for j, i in enumerate(keep)
        ]
        stack.extend(reversed(children))
    return plan


def _run_sampling(
    net: InfluenceNetwork,
    s: int,
    cfg: EstimatorConfig,
    type2: bool,
    max_splits: int | None,
) -> Estimate:
    _check_node(net, s)
    start = time.perf_counter()
    rng = np.random.Generator(np.random.SFC64(cfg.seed))
    plan = _build_plan(net, s, cfg, rng, type2, max_splits)
    if cfg.lazy_bfs_sampling:
        counts, offsets = kernels.lazy_conditional_counts(net, plan.leaves, s, rng)
    else:
        counts, offsets = kernels.draw_conditional_counts(
            kernels.engine_view(net), plan.leaves, s, rng
        )
    sizes = np.diff(offsets)
    sums = np.add.reduceat(counts, offsets[:-1])
    weights = np.asarray(plan.weights)
    value = float(weights @ (sums / sizes))
    return Estimate(value, int(offsets[-1]), time.perf_counter() - start)


def _require_kind(cfg: EstimatorConfig, kind: EstimatorKind) -> None:
    if cfg.kind is not kind:
        raise ValueError(f"config kind is {cfg.kind.value}, expected {kind.value}")


def nmc_estimate(net: InfluenceNetwork, s: int, cfg: EstimatorConfig) -> Estimate:
    """Naive Monte-Carlo: mean reach count over N independent worlds."""
    _require_kind(cfg, EstimatorKind.NMC)
    return _run_sampling(net, s, cfg, type2=False, max_splits=0)


def bss1_estimate(net: InfluenceNetwork, s: int, cfg: EstimatorConfig) -> Estimate:
    """One-shot stratified sampling over all 2^r full patterns of the
    selected edges, budget allocated proportionally to pattern mass."""
    _require_kind(cfg, EstimatorKind.BSS1)
    return _run_sampling(net, s, cfg, type2=False, max_splits=1)


def rss1_estimate(net: InfluenceNetwork, s: int, cfg: EstimatorConfig) -> Estimate:
    """Recursive full-pattern stratified sampling: strata with budget
    >= tau are themselves stratified; smaller ones fall back to
    conditional Monte-Carlo."""
    _require_kind(cfg, EstimatorKind.RSS1)
    return _run_sampling(net, s, cfg, type2=False, max_splits=None)


def bss2_estimate(net: InfluenceNetwork, s: int, cfg: EstimatorConfig) -> Estimate:
    """One-shot stratified sampling over the r+1 prefix strata (all
    selected edges absent, or first i-1 absent and edge i present)."""
    _require_kind(cfg, EstimatorKind.BSS2)
    return _run_sampling(net, s, cfg, type2=True, max_splits=1)


def rss2_estimate(net: InfluenceNetwork, s: int, cfg: EstimatorConfig) -> Estimate:
    """Recursive prefix stratified sampling; stratum i re-enters the
    recursion with only its first i selected edges determined."""
    _require_kind(cfg, EstimatorKind.RSS2)
    return _run_sampling(net, s, cfg, type2=True, max_splits=None)


_SAMPLING_DISPATCH = {
    EstimatorKind.NMC: nmc_estimate,
    EstimatorKind.BSS1: bss1_estimate,
    EstimatorKind.RSS1: rss1_estimate,
    EstimatorKind.BSS2: bss2_estimate,
    EstimatorKind.RSS2: rss2_estimate,
}


def estimate(net: InfluenceNetwork, s: int, cfg: EstimatorConfig) -> Estimate:
    """Run whichever estimator the config names and wrap the result."""
    if cfg.kind in _SAMPLING_DISPATCH:
        return _SAMPLING_DISPATCH[cfg.kind](net, s, cfg)
    start = time.perf_counter()
    if cfg.kind is EstimatorKind.EXACT_DC:
        value = exact_dc(net, s, cfg.r)
    else:
        value = brute_force_exact(net, s)
    return Estimate(value, 0, time.perf_counter() - start)
