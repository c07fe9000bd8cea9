"""Simulation and verification laboratory for oriented first-passage
percolation on the hypercube."""

from .cascade import (
    CascadeParams,
    contraction_trace,
    fixed_point_laplace,
    laplace_recursion,
    sample_cascade,
    sample_mixing,
    w2_distance,
)
from .chenstein import (
    CsReport,
    conditional_lambda,
    conditional_tv,
    cs_bound,
    cs_report,
    stein_g,
    stein_singleton_gap,
    stein_sup_delta,
)
from .core import (
    CapacityError,
    EdgeRef,
    HypercubeInstance,
    PathPerm,
    edge_weight,
    path_weight,
    shared_edges,
    WeightField,
)
from .counting import g_function, overlap_census, overlap_upper_bound
from .engine import (
    ExtremalSet,
    count_extremal,
    extremal_paths,
    first_passage_time,
    simulate_batch,
    suffix_min_table,
)
from .gamma import exact_intensity, gamma_cdf, gamma_sf
from .limitlaw import cox_avoidance, limit_cdf, mixture_density
from .stats import chi_square_gof, dkw_epsilon, ks_distance, ks_two_sample

__version__ = "0.1.0"

__all__ = [
    "CapacityError",
    "CascadeParams",
    "CsReport",
    "EdgeRef",
    "ExtremalSet",
    "HypercubeInstance",
    "PathPerm",
    "WeightField",
    "__version__",
    "chi_square_gof",
    "conditional_lambda",
    "conditional_tv",
    "contraction_trace",
    "count_extremal",
    "cox_avoidance",
    "cs_bound",
    "cs_report",
    "dkw_epsilon",
    "edge_weight",
    "exact_intensity",
    "extremal_paths",
    "first_passage_time",
    "fixed_point_laplace",
    "g_function",
    "gamma_cdf",
    "gamma_sf",
    "ks_distance",
    "ks_two_sample",
    "laplace_recursion",
    "limit_cdf",
    "mixture_density",
    "overlap_census",
    "overlap_upper_bound",
    "path_weight",
    "sample_cascade",
    "sample_mixing",
    "shared_edges",
    "simulate_batch",
    "stein_g",
    "stein_singleton_gap",
    "stein_sup_delta",
    "suffix_min_table",
    "w2_distance",
]
