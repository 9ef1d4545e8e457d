"""Repeated-trial evaluation harness.

Runs an estimator many times with derived per-trial seeds, computes the
unbiased sample variance of the estimates, compares each estimator's
variance to naive Monte-Carlo under the same budget, and serializes the
results as CSV or JSON suitable for external plotting.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, replace
from typing import Sequence

import numpy as np

from .estimators import (
    EdgeSelectionStrategy,
    EstimatorConfig,
    EstimatorKind,
    estimate,
)
from .graph import InfluenceNetwork

__all__ = [
    "EvaluationReport",
    "ReportRow",
    "TrialBatch",
    "derive_trial_seed",
    "estimator_label",
    "evaluate_suite",
    "pick_seed_nodes",
    "relative_variance",
    "run_trials",
    "sample_variance",
]


def derive_trial_seed(master_seed: int, node: int, trial: int) -> int:
    """Derive one trial's RNG seed from the master seed.

    Uses a counter-mode seed-sequence split keyed by (seed node id,
    trial index), so trial i's seed depends only on (master_seed, node,
    i): trials can be run in any order or re-run individually, and a
    suite's batch for a node equals a standalone run_trials on it.
    """
    ss = np.random.SeedSequence(master_seed, spawn_key=(node, trial))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class TrialBatch:
    """R independent runs of one estimator on one (network, node) pair."""

    cfg: EstimatorConfig
    trials: int
    estimates: tuple[float, ...]
    master_seed: int
    elapsed: tuple[float, ...] = ()
    samples_used: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.trials < 2:
            raise ValueError("a trial batch needs at least 2 trials")
        if len(self.estimates) != self.trials:
            raise ValueError("estimates length must equal the trial count")


def run_trials(
    net: InfluenceNetwork, s: int, cfg: EstimatorConfig, trials: int, master_seed: int
) -> TrialBatch:
    """Run the configured estimator `trials` times with derived seeds."""
    if trials < 2:
        raise ValueError("trials must be >= 2")
    values = []
    times = []
    samples = []
    for t in range(trials):
        run_cfg = replace(cfg, seed=derive_trial_seed(master_seed, s, t))
        est = estimate(net, s, run_cfg)
        values.append(est.value)
        times.append(est.elapsed)
        samples.append(est.samples_used)
    return TrialBatch(cfg, trials, tuple(values), master_seed, tuple(times), tuple(samples))


def sample_variance(batch: TrialBatch) -> float:
    """Unbiased sample variance of the batch: sum (x - mean)^2 / (R-1)."""
    if batch.trials < 2:
        raise ValueError("sample variance needs at least 2 trials")
    return float(np.var(np.asarray(batch.estimates, dtype=np.float64), ddof=1))


def relative_variance(batch: TrialBatch, nmc_batch: TrialBatch) -> float:
    """Batch variance divided by the naive Monte-Carlo batch variance.

    Both batches must come from the same network and seed node for the
    ratio to mean anything; that is the caller's responsibility.
    """
    nmc_var = sample_variance(nmc_batch)
    if nmc_var == 0.0:
        raise ValueError("relative variance undefined: NMC batch variance is zero")
    return sample_variance(batch) / nmc_var


def pick_seed_nodes(net: InfluenceNetwork, k: int, seed: int) -> np.ndarray:
    """Draw k distinct seed nodes uniformly among nodes with out-degree
    >= 1 (zero-out-degree nodes have influenceability 0 and carry no
    signal).  Returned ascending."""
    if k < 1:
        raise ValueError("k must be >= 1")
    degrees = np.bincount(net.src, minlength=net.n)
    eligible = np.flatnonzero(degrees > 0)
    if eligible.size < k:
        raise ValueError(
            f"asked for {k} seed nodes but only {eligible.size} have out-degree >= 1"
        )
    rng = np.random.default_rng(seed)
    return np.sort(rng.choice(eligible, size=k, replace=False))


def estimator_label(cfg: EstimatorConfig) -> str:
    """Default display name: kind plus selection strategy for the
    stratified estimators (e.g. "rss1-bfs", "bss2-rm", "nmc")."""
    kind = cfg.kind.value
    if cfg.kind in (EstimatorKind.NMC, EstimatorKind.EXACT_DC, EstimatorKind.BRUTE_FORCE):
        return kind
    tag = "bfs" if cfg.strategy is EdgeSelectionStrategy.BFS_ORDER else "rm"
    return f"{kind}-{tag}"


@dataclass(frozen=True)
class ReportRow:
    """One estimator's aggregate results over all seed nodes."""

    name: str
    kind: str
    r: int
    tau: int
    n_samples: int
    mean: float
    variance: float
    relative_variance: float
    mean_time_s: float
    mean_samples: float


@dataclass(frozen=True)
class EvaluationReport:
    """Per-estimator aggregates plus the evaluation setup that produced
    them.  CSV rows carry the estimator name, its config, the seed-node
    and trial counts, and the aggregate statistics."""

    rows: tuple[ReportRow, ...]
    seed_nodes: tuple[int, ...]
    trials: int
    master_seed: int
    network: str

    _CSV_COLUMNS = (
        "estimator",
        "r",
        "tau",
        "N",
        "seed_count",
        "trials",
        "mean",
        "variance",
        "relative_variance",
        "mean_time_s",
    )

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self._CSV_COLUMNS)
        for row in self.rows:
            writer.writerow(
                [
                    row.name,
                    row.r,
                    row.tau,
                    row.n_samples,
                    len(self.seed_nodes),
                    self.trials,
                    row.mean,
                    row.variance,
                    row.relative_variance,
                    row.mean_time_s,
                ]
            )
        return buf.getvalue()

    def to_json(self) -> str:
        payload = {
            "network": self.network,
            "seed_nodes": list(self.seed_nodes),
            "trials": self.trials,
            "master_seed": self.master_seed,
            "rows": [asdict(row) for row in self.rows],
        }
        return json.dumps(payload, indent=2) + "\n"

    def without_timing(self) -> "EvaluationReport":
        """Copy with every timing figure zeroed, for byte-stable output."""
        rows = tuple(replace(row, mean_time_s=0.0) for row in self.rows)
        return replace(self, rows=rows)


def evaluate_suite(
    net: InfluenceNetwork,
    seed_nodes: Sequence[int],
    configs: Sequence[EstimatorConfig],
    trials: int,
    master_seed: int,
    labels: Sequence[str] | None = None,
    network_name: str | None = None,
) -> EvaluationReport:
    """Run every config on every seed node and aggregate.

    The first NMC config is the relative-variance baseline and must be
    present; its row's relative variance is 1.0 by construction.  Each
    row averages the per-seed variance ratios (not a pooled ratio), and
    likewise averages per-seed means, variances, and timings.  Trials
    share derived seeds across configs, so identical configs produce
    identical rows.
    """
    seed_nodes = [int(s) for s in seed_nodes]
    if not seed_nodes:
        raise ValueError("seed_nodes must be non-empty")
    if labels is None:
        labels = [estimator_label(cfg) for cfg in configs]
    if len(labels) != len(configs):
        raise ValueError("labels length must match configs length")
    baseline_idx = next(
        (i for i, cfg in enumerate(configs) if cfg.kind is EstimatorKind.NMC), None
    )
    if baseline_idx is None:
        raise ValueError(
            "the suite needs an nmc config as the relative-variance baseline"
        )
    batches: list[list[TrialBatch]] = []
    for i, cfg in enumerate(configs):
        per_node = []
        for s in seed_nodes:
            try:
                per_node.append(run_trials(net, s, cfg, trials, master_seed))
            except Exception as exc:
                raise RuntimeError(
                    f"estimator {labels[i]!r} failed on seed node {s}: {exc}"
                ) from exc
        batches.append(per_node)
    rows = []
    for i, cfg in enumerate(configs):
        per_node = batches[i]
        variances = [sample_variance(b) for b in per_node]
        if i == baseline_idx:
            rel = 1.0
        else:
            ratios = [
                relative_variance(b, nmc_b)
                for b, nmc_b in zip(per_node, batches[baseline_idx])
            ]
            rel = float(np.mean(ratios))
        rows.append(
            ReportRow(
                name=labels[i],
                kind=cfg.kind.value,
                r=cfg.r,
                tau=cfg.tau,
                n_samples=cfg.n_samples,
                mean=float(np.mean([np.mean(b.estimates) for b in per_node])),
                variance=float(np.mean(variances)),
                relative_variance=rel,
                mean_time_s=float(np.mean([np.mean(b.elapsed) for b in per_node])),
                mean_samples=float(np.mean([np.mean(b.samples_used) for b in per_node])),
            )
        )
    return EvaluationReport(
        rows=tuple(rows),
        seed_nodes=tuple(seed_nodes),
        trials=trials,
        master_seed=master_seed,
        network=network_name if network_name is not None else f"n={net.n} m={net.m}",
    )
