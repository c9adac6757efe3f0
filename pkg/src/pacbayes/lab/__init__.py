"""Exactly solvable discrete problems and the experiments run on them."""

from pacbayes.lab.experiments import (
    AlternatingResult,
    CoverageReport,
    alternating_optimize,
    anytime_coverage_experiment,
    applicable_bounds,
    coverage_experiment,
    mcallester_posterior,
    tightness_table,
    wilson_interval,
)
from pacbayes.lab.problem import (
    DiscreteProblem,
    ErmSoftmax,
    ExactQuantities,
    FixedPosterior,
    Gibbs,
    draw_dataset,
    exact_quantities,
    gibbs_posterior,
)

__all__ = [
    "AlternatingResult",
    "CoverageReport",
    "DiscreteProblem",
    "ErmSoftmax",
    "ExactQuantities",
    "FixedPosterior",
    "Gibbs",
    "alternating_optimize",
    "anytime_coverage_experiment",
    "applicable_bounds",
    "coverage_experiment",
    "draw_dataset",
    "exact_quantities",
    "gibbs_posterior",
    "mcallester_posterior",
    "tightness_table",
    "wilson_interval",
]
