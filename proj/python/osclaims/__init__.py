"""Moments of aggregate claims under order-statistic arrivals.

Thin bindings over the C++ library: closed forms, quadrature engines and the
Monte Carlo oracle. Quadrature engines return dicts with ``value``,
``residual_bound``, ``terms`` and ``standard_error``.
"""

from ._osclaims import (
    DependenceModel,
    Error,
    InfiniteMoment,
    InvalidArgument,
    NumericFailure,
    ProcessSpec,
    SeverityLaw,
    StructureDistribution,
    count_pmf,
    discounted_pair_sum,
    estimate_moments,
    expected_small_claims,
    mean_closed,
    mean_mixed_integral,
    mean_mixed_series,
    mean_os_series,
    run_cli,
    second_moment_closed,
    second_moment_mixed_integral,
    second_moment_mixed_series,
    second_moment_os_series,
    variance_closed,
)

__all__ = [
    "DependenceModel",
    "Error",
    "InfiniteMoment",
    "InvalidArgument",
    "NumericFailure",
    "ProcessSpec",
    "SeverityLaw",
    "StructureDistribution",
    "count_pmf",
    "discounted_pair_sum",
    "estimate_moments",
    "expected_small_claims",
    "mean_closed",
    "mean_mixed_integral",
    "mean_mixed_series",
    "mean_os_series",
    "run_cli",
    "second_moment_closed",
    "second_moment_mixed_integral",
    "second_moment_mixed_series",
    "second_moment_os_series",
    "variance_closed",
]
