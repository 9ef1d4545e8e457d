"""Command-line front end.

Subcommands: generate (random network files), exact (brute-force or
divide-and-conquer influenceability), estimate (one estimator run), and
evaluate (repeated-trial suite with CSV/JSON reports).  Every subcommand
is deterministic given its full flag set including seeds.  Exit codes:
0 success, 2 usage or validation error, 1 runtime error.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import replace

from .estimators import (
    EdgeSelectionStrategy,
    EstimatorConfig,
    EstimatorKind,
    brute_force_exact,
    estimate,
    exact_dc,
)
from .evaluation import evaluate_suite, pick_seed_nodes
from .graph import InfluenceNetwork
from .ingest import GeneratorSpec, generate_er, parse_edge_list, serialize_edge_list

__all__ = ["main"]

_TYPE1_DEFAULT_R = 5
_TYPE2_DEFAULT_R = 50
_DEFAULT_TAU = 10
_DEFAULT_SAMPLES = 1000
_DEFAULT_TRIALS = 500
_DEFAULT_SEED_NODES = 10

# The standard comparison roster: NMC, the r=1 random-selection baseline,
# and both strategies of each stratified estimator.
_DEFAULT_ROSTER = (
    "nmc,rss1-rm-r1,bss1-rm,bss1-bfs,rss1-rm,rss1-bfs,"
    "bss2-rm,bss2-bfs,rss2-rm,rss2-bfs"
)

_SAMPLING_KINDS = {
    "nmc": EstimatorKind.NMC,
    "bss1": EstimatorKind.BSS1,
    "rss1": EstimatorKind.RSS1,
    "bss2": EstimatorKind.BSS2,
    "rss2": EstimatorKind.RSS2,
}


def _fmt10(x: float) -> str:
    """Format with 10 significant digits, trailing zeros kept."""
    if x == 0.0:
        return "0.000000000"
    decimals = 9 - math.floor(math.log10(abs(x)))
    return f"{x:.{max(decimals, 0)}f}"


def _load_network(path: str, values: str) -> tuple[InfluenceNetwork, list[str]]:
    kind = "probability" if values == "prob" else "weight"
    with open(path, "r", encoding="utf-8") as fh:
        return parse_edge_list(fh, value_kind=kind)


def _resolve_node(label: str, labels: list[str]) -> int:
    """Map a --seed-node argument to a node id via the label table."""
    try:
        return labels.index(label)
    except ValueError:
        raise ValueError(f"seed node {label!r} not present in the input file") from None


def _parse_estimator_token(token: str, samples: int, tau: int) -> tuple[str, EstimatorConfig]:
    """Parse one roster token: kind[-rm|-bfs][-r<N>], e.g. "rss1-bfs",
    "rss1-rm-r1", "nmc"."""
    parts = token.strip().lower().split("-")
    if not parts or parts[0] not in _SAMPLING_KINDS:
        raise ValueError(
            f"unknown estimator {token!r}; expected one of "
            f"{sorted(_SAMPLING_KINDS)} with optional -rm/-bfs/-r<N> suffixes"
        )
    kind = _SAMPLING_KINDS[parts[0]]
    strategy = EdgeSelectionStrategy.BFS_ORDER
    r = _TYPE2_DEFAULT_R if kind in (EstimatorKind.BSS2, EstimatorKind.RSS2) else _TYPE1_DEFAULT_R
    for part in parts[1:]:
        if part == "rm":
            strategy = EdgeSelectionStrategy.RANDOM
        elif part == "bfs":
            strategy = EdgeSelectionStrategy.BFS_ORDER
        elif part.startswith("r") and part[1:].isdigit():
            r = int(part[1:])
        else:
            raise ValueError(f"unknown estimator suffix {part!r} in {token!r}")
    if kind is EstimatorKind.NMC:
        cfg = EstimatorConfig(kind=kind, n_samples=samples, tau=tau)
        return "nmc", cfg
    cfg = EstimatorConfig(kind=kind, n_samples=samples, r=r, tau=tau, strategy=strategy)
    return token.strip().lower(), cfg


def _add_input_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--input", required=True, help="edge-list file to load")
    parser.add_argument(
        "--values",
        choices=("prob", "weight"),
        default="prob",
        help="how to read the third column: probability as-is, or an "
        "interaction weight mapped through 1 - exp(-w/2)",
    )


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="influest",
        description="Influenceability estimation on independent-cascade networks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a random network edge-list file")
    gen.add_argument("--nodes", type=int, required=True, help="node count")
    gen.add_argument(
        "--density", type=float, required=True, help="mean out-edges per node"
    )
    gen.add_argument(
        "--prob-law",
        default="uniform01",
        help="edge probability law: uniform01, constant:<c>, or from_weights",
    )
    gen.add_argument("--seed", type=int, default=0, help="generator seed")
    gen.add_argument("--output", required=True, help="destination file")

    exact = sub.add_parser("exact", help="compute exact influenceability")
    _add_input_flags(exact)
    exact.add_argument("--seed-node", required=True, help="seed node label")
    exact.add_argument("--method", choices=("brute", "dc"), default="dc")
    exact.add_argument("--r", type=int, default=_TYPE1_DEFAULT_R, help="expansion width (dc)")

    est = sub.add_parser("estimate", help="run one estimator once")
    _add_input_flags(est)
    est.add_argument("--seed-node", required=True, help="seed node label")
    est.add_argument(
        "--estimator",
        required=True,
        choices=sorted(_SAMPLING_KINDS),
        help="which sampling estimator to run",
    )
    est.add_argument("--samples", type=int, default=_DEFAULT_SAMPLES, help="budget N")
    est.add_argument("--r", type=int, default=None, help="stratification width")
    est.add_argument("--tau", type=int, default=_DEFAULT_TAU, help="recursion cutoff")
    est.add_argument(
        "--strategy",
        choices=("random", "bfs"),
        default="bfs",
        help="edge-selection strategy",
    )
    est.add_argument("--seed", type=int, default=0, help="RNG seed")
    est.add_argument(
        "--lazy",
        action="store_true",
        help="flip edge coins lazily during traversal (same law, different "
        "RNG consumption, no batching)",
    )

    ev = sub.add_parser("evaluate", help="repeated-trial evaluation suite")
    _add_input_flags(ev)
    ev.add_argument(
        "--estimators",
        default=_DEFAULT_ROSTER,
        help="comma-separated roster tokens kind[-rm|-bfs][-r<N>] "
        f"(default: {_DEFAULT_ROSTER})",
    )
    ev.add_argument("--trials", type=int, default=_DEFAULT_TRIALS, help="runs per estimator")
    ev.add_argument(
        "--seed-nodes", type=int, default=_DEFAULT_SEED_NODES, help="seed node count"
    )
    ev.add_argument("--samples", type=int, default=_DEFAULT_SAMPLES, help="budget N per run")
    ev.add_argument("--tau", type=int, default=_DEFAULT_TAU, help="recursion cutoff")
    ev.add_argument("--master-seed", type=int, default=0, help="suite master seed")
    ev.add_argument("--csv", default=None, help="CSV report destination")
    ev.add_argument("--json", default=None, help="JSON report destination")
    ev.add_argument(
        "--timing",
        action="store_true",
        help="report measured wall times (default zeroes the timing column "
        "so identical invocations produce byte-identical files)",
    )
    ev.add_argument(
        "--threads",
        type=int,
        default=int(os.environ.get("INFLUEST_THREADS", "1")),
        help="worker cap (reserved; evaluation currently runs single-threaded)",
    )
    return parser


def _cmd_generate(args: argparse.Namespace) -> int:
    spec = GeneratorSpec(
        n=args.nodes, density=args.density, prob_law=args.prob_law, seed=args.seed
    )
    net = generate_er(spec)
    header = [
        "influest generate",
        f"nodes={spec.n} density={spec.density!r} prob_law={spec.prob_law} seed={spec.seed}",
        f"edges={net.m}",
    ]
    text = serialize_edge_list(net, header=header)
    with open(args.output, "w", encoding="utf-8") as fh:
        fh.write(text)
    print(f"wrote {net.m} edges to {args.output}")
    return 0


def _cmd_exact(args: argparse.Namespace) -> int:
    net, labels = _load_network(args.input, args.values)
    s = _resolve_node(args.seed_node, labels)
    if args.method == "brute":
        value = brute_force_exact(net, s)
    else:
        value = exact_dc(net, s, args.r)
    print(_fmt10(value))
    return 0


def _cmd_estimate(args: argparse.Namespace) -> int:
    net, labels = _load_network(args.input, args.values)
    s = _resolve_node(args.seed_node, labels)
    kind = _SAMPLING_KINDS[args.estimator]
    r = args.r
    if r is None:
        r = _TYPE2_DEFAULT_R if kind in (EstimatorKind.BSS2, EstimatorKind.RSS2) else _TYPE1_DEFAULT_R
    cfg = EstimatorConfig(
        kind=kind,
        n_samples=args.samples,
        r=r,
        tau=args.tau,
        strategy=args.strategy,
        seed=args.seed,
        lazy_bfs_sampling=args.lazy,
    )
    result = estimate(net, s, cfg)
    print(f"value {_fmt10(result.value)}")
    print(f"samples_used {result.samples_used}")
    print(f"elapsed_s {result.elapsed:.6f}")
    return 0


def _cmd_evaluate(args: argparse.Namespace) -> int:
    if args.trials < 2:
        raise ValueError("--trials must be >= 2")
    if args.threads < 1:
        raise ValueError("--threads must be >= 1")
    if args.csv is None and args.json is None:
        raise ValueError("nothing to write: pass --csv and/or --json")
    tokens = [t for t in args.estimators.split(",") if t.strip()]
    if not tokens:
        raise ValueError("--estimators must name at least one estimator")
    labels = []
    configs = []
    for token in tokens:
        label, cfg = _parse_estimator_token(token, args.samples, args.tau)
        labels.append(label)
        configs.append(cfg)
    if all(cfg.kind is not EstimatorKind.NMC for cfg in configs):
        print(
            "note: adding the nmc baseline (required for relative variance)",
            file=sys.stderr,
        )
        labels.insert(0, "nmc")
        configs.insert(0, EstimatorConfig(kind=EstimatorKind.NMC, n_samples=args.samples))
    net, _ = _load_network(args.input, args.values)
    seed_nodes = pick_seed_nodes(net, args.seed_nodes, args.master_seed)
    report = evaluate_suite(
        net,
        seed_nodes,
        configs,
        args.trials,
        args.master_seed,
        labels=labels,
        network_name=os.path.basename(args.input),
    )
    if not args.timing:
        report = report.without_timing()
    if args.csv is not None:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write(report.to_csv())
        print(f"wrote {args.csv}")
    if args.json is not None:
        with open(args.json, "w", encoding="utf-8") as fh:
            fh.write(report.to_json())
        print(f"wrote {args.json}")
    return 0


_COMMANDS = {
    "generate": _cmd_generate,
    "exact": _cmd_exact,
    "estimate": _cmd_estimate,
    "evaluate": _cmd_evaluate,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
