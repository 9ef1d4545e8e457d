"""Edge-list ingestion, weight transforms, and synthetic network generation."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import IO, Iterable

import numpy as np

from .graph import InfluenceNetwork

__all__ = [
    "EdgeListParseError",
    "GeneratorSpec",
    "RawEdgeRecord",
    "generate_er",
    "parse_edge_list",
    "serialize_edge_list",
    "weight_to_prob",
]

# Integer weights drawn by the from_weights probability law.
_FROM_WEIGHTS_MAX = 10


class EdgeListParseError(ValueError):
    """Malformed edge-list input; carries the offending line number."""

    def __init__(self, lineno: int, message: str) -> None:
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


@dataclass(frozen=True)
class RawEdgeRecord:
    """One parsed edge-list line before label resolution."""

    src: str
    dst: str
    value: float
    value_kind: str


@dataclass(frozen=True)
class GeneratorSpec:
    """Recipe for a random influence network.

    density is the mean number of out-edges per node; the generated
    network has exactly round(density * n) distinct directed edges.
    prob_law is one of "uniform01", "constant:<c>", or "from_weights"
    (integer weights uniform on [1, 10] pushed through weight_to_prob).
    """

    n: int
    density: float
    prob_law: str = "uniform01"
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not self.density >= 0.0:
            raise ValueError("density must be >= 0")
        if self.edge_count > self.n * (self.n - 1):
            raise ValueError(
                f"density {self.density} infeasible: wants {self.edge_count} edges "
                f"but only {self.n * (self.n - 1)} distinct non-loop pairs exist"
            )
        self._parse_prob_law()

    @property
    def edge_count(self) -> int:
        return int(round(self.density * self.n))

    def _parse_prob_law(self) -> tuple[str, float]:
        law = self.prob_law
        if law == "uniform01":
            return "uniform01", 0.0
        if law == "from_weights":
            return "from_weights", 0.0
        if law.startswith("constant:"):
            try:
                c = float(law.split(":", 1)[1])
            except ValueError:
                raise ValueError(f"bad constant in prob_law {law!r}") from None
            if not 0.0 <= c <= 1.0:
                raise ValueError("constant probability must be in [0, 1]")
            return "constant", c
        raise ValueError(f"unknown prob_law {law!r}")


def weight_to_prob(w: float) -> float:
    """Map a non-negative interaction weight to an influence probability
    via the exponential CDF with mean 2: w -> 1 - exp(-w/2)."""
    if not w >= 0.0:
        raise ValueError(f"weight must be >= 0, got {w}")
    return 1.0 - math.exp(-w / 2.0)


def _iter_records(stream: Iterable[str], value_kind: str) -> Iterable[RawEdgeRecord]:
    for lineno, raw in enumerate(stream, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise EdgeListParseError(lineno, f"expected 'src dst value', got {raw.strip()!r}")
        try:
            value = float(parts[2])
        except ValueError:
            raise EdgeListParseError(lineno, f"bad numeric value {parts[2]!r}") from None
        if math.isnan(value) or value < 0.0:
            raise EdgeListParseError(lineno, f"value must be a non-negative number, got {parts[2]}")
        if value_kind == "probability" and value > 1.0:
            raise EdgeListParseError(lineno, f"probability {value} outside [0, 1]")
        yield RawEdgeRecord(parts[0], parts[1], value, value_kind)


def parse_edge_list(
    stream: Iterable[str] | IO[str], value_kind: str = "probability"
) -> tuple[InfluenceNetwork, list[str]]:
    """Parse "src dst value" lines into a network plus its label table.

    Labels are mapped to dense node ids in first-appearance order;
    returned as a list indexed by node id.  '#' starts a comment and
    blank lines are skipped.  value_kind selects whether the third
    column is a probability (taken as-is) or a weight (pushed through
    weight_to_prob).
    """
    if value_kind not in ("probability", "weight"):
        raise ValueError(f"value_kind must be 'probability' or 'weight', got {value_kind!r}")
    labels: list[str] = []
    ids: dict[str, int] = {}
    src: list[int] = []
    dst: list[int] = []
    probs: list[float] = []

    def node_id(label: str) -> int:
        if label not in ids:
            ids[label] = len(labels)
            labels.append(label)
        return ids[label]

    for rec in _iter_records(stream, value_kind):
        src.append(node_id(rec.src))
        dst.append(node_id(rec.dst))
        probs.append(rec.value if value_kind == "probability" else weight_to_prob(rec.value))
    if not labels:
        raise ValueError("edge list contains no edges")
    return InfluenceNetwork(len(labels), src, dst, probs), labels


def serialize_edge_list(
    net: InfluenceNetwork,
    labels: list[str] | None = None,
    header: list[str] | None = None,
) -> str:
    """Render a network back to edge-list text (probabilities as values).

    Probabilities are written with repr so parse -> serialize -> parse
    round-trips to an identical network.
    """
    if labels is None:
        labels = [str(v) for v in range(net.n)]
    if len(labels) != net.n:
        raise ValueError("label table length must equal node count")
    lines = [f"# {h}" for h in (header or [])]
    for eid in range(net.m):
        lines.append(f"{labels[net.src[eid]]} {labels[net.dst[eid]]} {float(net.probs[eid])!r}")
    return "\n".join(lines) + "\n"


def generate_er(spec: GeneratorSpec) -> InfluenceNetwork:
    """Generate a uniform random directed graph with exactly
    round(density*n) distinct non-self-loop edges.

    Edges are drawn uniformly without replacement (rejection sampling,
    or an explicit pair enumeration when the graph is dense enough that
    rejection would thrash); probabilities follow spec.prob_law.  The
    result is a pure function of the spec.
    """
    rng = np.random.default_rng(spec.seed)
    n, m = spec.n, spec.edge_count
    total_pairs = n * (n - 1)
    if m > total_pairs // 2:
        # dense regime: enumerate all ordered non-loop pairs and choose
        pair_idx = rng.choice(total_pairs, size=m, replace=False)
        src = pair_idx // (n - 1)
        rem = pair_idx % (n - 1)
        dst = np.where(rem < src, rem, rem + 1)
    else:
        seen: set[tuple[int, int]] = set()
        src = np.empty(m, dtype=np.int64)
        dst = np.empty(m, dtype=np.int64)
        k = 0
        while k < m:
            a = int(rng.integers(n))
            b = int(rng.integers(n))
            if a == b or (a, b) in seen:
                continue
            seen.add((a, b))
            src[k] = a
            dst[k] = b
            k += 1
    law, c = spec._parse_prob_law()
    if law == "uniform01":
        probs = rng.random(m)
    elif law == "constant":
        probs = np.full(m, c)
    else:  # from_weights
        weights = rng.integers(1, _FROM_WEIGHTS_MAX + 1, size=m)
        probs = 1.0 - np.exp(-weights / 2.0)
    return InfluenceNetwork(n, src, dst, probs)
