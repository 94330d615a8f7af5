"""Single structural break: least squares, continuous-record limit and Laplace-type inference."""

from ._core import (
    BreakFit,
    ConfidenceSet,
    CrbreakError,
    DateDistribution,
    LimitParams,
    Sample,
    SegmentedFit,
    SupWaldResult,
    confidence_set,
    estimate,
    estimate_break,
    estimate_limit_params,
    fit_at,
    generate,
    gl_estimate,
    hdr_set,
    load_sample,
    long_run_variance,
    quasi_posterior,
    run_mc,
    simulate_cr,
    sup_wald,
)

__all__ = [
    "BreakFit",
    "ConfidenceSet",
    "CrbreakError",
    "DateDistribution",
    "LimitParams",
    "Sample",
    "SegmentedFit",
    "SupWaldResult",
    "confidence_set",
    "estimate",
    "estimate_break",
    "estimate_limit_params",
    "fit_at",
    "generate",
    "gl_estimate",
    "hdr_set",
    "load_sample",
    "long_run_variance",
    "quasi_posterior",
    "run_mc",
    "simulate_cr",
    "sup_wald",
]
