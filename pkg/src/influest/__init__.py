"""Influenceability estimation on independent-cascade influence networks.

A directed graph whose edges carry independent activation probabilities
defines a distribution over subgraphs (possible worlds).  A node's
influenceability is the expected number of other nodes reachable from it
across that distribution.  This package computes it exactly on small
networks and estimates it on large ones with naive Monte-Carlo and four
stratified sampling schemes, plus a repeated-trial evaluation harness
and a CLI.
"""
from .estimators import (
    EXACT_GUARD_EDGES,
    TYPE1_MAX_R,
    EdgeSelectionStrategy,
    Estimate,
    EstimatorConfig,
    EstimatorKind,
    SelectionState,
    StratumDescriptor,
    allocate_samples,
    brute_force_exact,
    bss1_estimate,
    bss2_estimate,
    estimate,
    exact_dc,
    make_selection_state,
    nmc_estimate,
    optimal_allocation,
    rss1_estimate,
    rss2_estimate,
    select_edges,
    stratum_prob_t1,
    stratum_prob_t2,
    t1_strata,
    t2_strata,
)
from .evaluation import (
    EvaluationReport,
    ReportRow,
    TrialBatch,
    derive_trial_seed,
    estimator_label,
    evaluate_suite,
    pick_seed_nodes,
    relative_variance,
    run_trials,
    sample_variance,
)
from .graph import (
    Edge,
    EdgeStatus,
    InfluenceNetwork,
    PossibleGraph,
    StatusAssignment,
    add_virtual_seed,
    bfs_edge_order,
    possible_graph_prob,
    reach_count,
    sample_possible_graph,
)
from .ingest import (
    EdgeListParseError,
    GeneratorSpec,
    generate_er,
    parse_edge_list,
    serialize_edge_list,
    weight_to_prob,
)

__version__ = "0.1.0"

__all__ = [
    "EXACT_GUARD_EDGES",
    "TYPE1_MAX_R",
    "Edge",
    "EdgeListParseError",
    "EdgeSelectionStrategy",
    "EdgeStatus",
    "Estimate",
    "EstimatorConfig",
    "EstimatorKind",
    "EvaluationReport",
    "GeneratorSpec",
    "InfluenceNetwork",
    "PossibleGraph",
    "ReportRow",
    "SelectionState",
    "StatusAssignment",
    "StratumDescriptor",
    "TrialBatch",
    "add_virtual_seed",
    "allocate_samples",
    "bfs_edge_order",
    "brute_force_exact",
    "bss1_estimate",
    "bss2_estimate",
    "derive_trial_seed",
    "estimate",
    "estimator_label",
    "evaluate_suite",
    "exact_dc",
    "generate_er",
    "make_selection_state",
    "nmc_estimate",
    "optimal_allocation",
    "parse_edge_list",
    "pick_seed_nodes",
    "possible_graph_prob",
    "reach_count",
    "relative_variance",
    "rss1_estimate",
    "rss2_estimate",
    "run_trials",
    "sample_possible_graph",
    "sample_variance",
    "select_edges",
    "serialize_edge_list",
    "stratum_prob_t1",
    "stratum_prob_t2",
    "t1_strata",
    "t2_strata",
    "weight_to_prob",
]
