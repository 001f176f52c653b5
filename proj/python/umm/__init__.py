"""Calibration-free ERP decoding via unsupervised mean-difference maximization."""

from ._core import (
    CodeKind,
    CovKind,
    CovScope,
    Decision,
    Decoder,
    DecoderConfig,
    DecoderState,
    MeanStrategy,
    Session,
    SessionManifest,
    SynthConfig,
    ToyConfig,
    ToyData,
    TrialRecord,
    UmmError,
    build_session,
    compute_confidence,
    count_unconstrained_assignments,
    default_symbols,
    generate_session,
    generate_toy_2d,
    generator_noise_covariance,
    mahalanobis_sq,
    read_session,
    write_session,
)

__version__ = "0.1.0"

__all__ = [
    "CodeKind",
    "CovKind",
    "CovScope",
    "Decision",
    "Decoder",
    "DecoderConfig",
    "DecoderState",
    "MeanStrategy",
    "Session",
    "SessionManifest",
    "SynthConfig",
    "ToyConfig",
    "ToyData",
    "TrialRecord",
    "UmmError",
    "build_session",
    "compute_confidence",
    "count_unconstrained_assignments",
    "default_symbols",
    "generate_session",
    "generate_toy_2d",
    "generator_noise_covariance",
    "mahalanobis_sq",
    "read_session",
    "write_session",
    "__version__",
]
