"""Capacity of the binomial channel: solver, bounds, and diagnostics."""

from .kernel import (
    ChannelSpec,
    binary_entropy,
    binomial_entropy_exact,
    binomial_entropy_lower,
    binomial_entropy_upper,
    log_pmf,
    pmf_row,
)
from .distributions import (
    DiscreteInput,
    OutputPmf,
    UndefinedPosteriorError,
    channel_matrix_logdet,
    induce_output,
    info_density,
    kl_divergence,
    mutual_information,
    posterior_mean,
)
from .density import (
    DensityCurve,
    bregman_binomial,
    cardinality_upper_via_second_derivative,
    count_sign_changes,
    density_curve,
    info_density_prime,
    info_density_second,
)
from .solver import (
    BAResult,
    KktSummary,
    SolveReport,
    SolverConfig,
    blahut_arimoto,
    kkt_verify,
    refine_support,
    report_for_distribution,
    solve_capacity,
)
from .bounds import (
    BoundsReport,
    bounds_report,
    capacity_lower_bound,
    capacity_upper_bound,
    cardinality_bounds,
    crest_factor,
    crest_factor_lower_endpoints,
    crest_factor_lower_mirror,
    dual_bound_term,
    dual_bound_term_max,
    support_count_identity,
)
from .oracles import ExactSolution, brute_force_grid_capacity, exact_solution

__all__ = [
    "ChannelSpec",
    "DiscreteInput",
    "OutputPmf",
    "UndefinedPosteriorError",
    "BAResult",
    "KktSummary",
    "SolveReport",
    "SolverConfig",
    "BoundsReport",
    "ExactSolution",
    "DensityCurve",
    "binary_entropy",
    "binomial_entropy_exact",
    "binomial_entropy_lower",
    "binomial_entropy_upper",
    "log_pmf",
    "pmf_row",
    "channel_matrix_logdet",
    "induce_output",
    "info_density",
    "kl_divergence",
    "mutual_information",
    "posterior_mean",
    "bregman_binomial",
    "cardinality_upper_via_second_derivative",
    "count_sign_changes",
    "density_curve",
    "info_density_prime",
    "info_density_second",
    "blahut_arimoto",
    "kkt_verify",
    "refine_support",
    "report_for_distribution",
    "solve_capacity",
    "bounds_report",
    "capacity_lower_bound",
    "capacity_upper_bound",
    "cardinality_bounds",
    "crest_factor",
    "crest_factor_lower_endpoints",
    "crest_factor_lower_mirror",
    "dual_bound_term",
    "dual_bound_term_max",
    "support_count_identity",
    "brute_force_grid_capacity",
    "exact_solution",
]

__version__ = "0.1.0"
