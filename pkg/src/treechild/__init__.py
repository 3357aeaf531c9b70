"""Exact tree-child hybridization number via cherry-picking sequences."""

from .clusters import ClusterNode, find_common_clusters
from .forest import CherryPickingSequence, Checkpoint, SearchState, ValidationReport, apply_sequence
from .gen import GenParams, SplitMix64, generate, random_network, sample_trees
from .network import (
    DisplayUnverifiable,
    Network,
    displays,
    is_tree_child,
    network_from_sequence,
    reticulation_number,
    validate_network,
)
from .newick import Instance, TaxonTable, Tree, parse_instance, parse_network, parse_tree, write_network, write_tree
from .oracle import OracleResult, brute_force_htc
from .scheduler import run_parallel
from .search import KLimitReached, SearchStats, Solution, SolveOptions, TimeLimitExceeded, solve, tcs2

__all__ = [
    "CherryPickingSequence", "Checkpoint", "ClusterNode", "DisplayUnverifiable", "GenParams", "Instance",
    "KLimitReached", "Network", "OracleResult", "SearchState", "SearchStats", "Solution", "SolveOptions",
    "SplitMix64", "TaxonTable", "TimeLimitExceeded", "Tree", "ValidationReport", "apply_sequence",
    "brute_force_htc", "displays", "find_common_clusters", "generate", "is_tree_child",
    "network_from_sequence", "parse_instance", "parse_network", "parse_tree", "random_network",
    "reticulation_number", "run_parallel", "sample_trees", "solve", "tcs2", "validate_network",
    "write_network", "write_tree",
]
