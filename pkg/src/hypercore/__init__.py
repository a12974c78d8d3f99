"""k-cores of random hypergraphs: peeling, Warning Propagation, and their local limit."""

from .analytic import ModelParams, coefficients, core_fraction_law, largest_fixed_point, phi, threshold
from .hypergraph import peel_core, sample_hypergraph, to_factor_graph
from .wp import wp_run

__all__ = [
    "ModelParams",
    "coefficients",
    "core_fraction_law",
    "largest_fixed_point",
    "phi",
    "threshold",
    "peel_core",
    "sample_hypergraph",
    "to_factor_graph",
    "wp_run",
]

__version__ = "0.1.0"
