"""Python access to the opinion-dynamics library and its commands."""

from ._core import (
    InputError,
    IoError,
    NumericError,
    ParseError,
    SbcmGenConfig,
    UsageError,
    compute_metrics,
    discretize_opinion,
    gradcheck,
    gumbel_softmax_sample,
    histogram_clusters,
    label_to_continuous,
    population_std,
    preset_names,
    run_command,
    sbcm_preset,
    simulate_sbcm,
)

__all__ = [
    "InputError",
    "IoError",
    "NumericError",
    "ParseError",
    "SbcmGenConfig",
    "UsageError",
    "compute_metrics",
    "discretize_opinion",
    "gradcheck",
    "gumbel_softmax_sample",
    "histogram_clusters",
    "label_to_continuous",
    "population_std",
    "preset_names",
    "run_command",
    "sbcm_preset",
    "simulate_sbcm",
]
