"""Photon correlation simulator and beat estimator."""

from ._core import (
    BeatEstimate,
    ConfigError,
    DataError,
    DomainError,
    Error,
    EstimationError,
    FitError,
    G2Curve,
    InterferenceFit,
    RunConfig,
    StatisticsError,
    __version__,
    beat_frequency,
    correlate,
    doppler_sigma,
    estimate_beat,
    fit_interference,
    g20_from_r,
    histogram,
    load_config,
    parse_config,
    predict,
    r_from_g20,
    run_pipeline,
    sigma_backward,
    sigma_forward,
    simulate,
    simulate_g2,
    visibility_from_ratio,
)

__all__ = [name for name in dir() if not name.startswith("_")]
