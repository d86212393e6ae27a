"""Causal discovery in binary exclusive-or skew acyclic models."""

from .discovery import DiscoveryResult, bh_select, discover, find_parent, find_sink, sink_score
from .freq import FrequencyTable, build_table, completeness, cond_prob, marginalize
from .genbench import (
    GeneratorConfig,
    benchmark_grid,
    format_grid,
    format_report,
    noise_sweep,
    random_model,
    run_trials,
    sample_dataset,
    y_structure_experiment,
)
from .model import (
    AnfFunction,
    BexsamModel,
    const,
    exact_conditional,
    exact_joint,
    example_model,
    format_model,
    noise_marginals,
    true_adjacency,
    var,
)

__version__ = "0.1.0"

__all__ = [
    "AnfFunction",
    "BexsamModel",
    "DiscoveryResult",
    "FrequencyTable",
    "GeneratorConfig",
    "benchmark_grid",
    "format_grid",
    "format_report",
    "format_model",
    "noise_marginals",
    "noise_sweep",
    "random_model",
    "run_trials",
    "sample_dataset",
    "y_structure_experiment",
    "bh_select",
    "build_table",
    "completeness",
    "cond_prob",
    "const",
    "discover",
    "exact_conditional",
    "exact_joint",
    "example_model",
    "find_parent",
    "find_sink",
    "marginalize",
    "sink_score",
    "true_adjacency",
    "var",
]
