"""Instantaneous-power-constrained precoding for single-RF massive MIMO.

Library layout:

- channel:     correlation models, correlated Rayleigh sampling
- precoder:    clipped zero-forcing solver, MMSE baseline, per-trial metrics
- rmt:         general-correlation deterministic equivalents (Ensemble)
- iid:         closed forms for uncorrelated antennas
- efficiency:  density of the radiated power and the efficiency integral
- montecarlo:  seeded parallel experiment runner
- cli:         figure-style presets with CSV output
"""

from .channel import (
    ChannelRealization,
    CorrelationSpec,
    build_correlation,
    matrix_sqrt,
    sample_realization,
)
from .montecarlo import ExperimentPlan, ExperimentRecord, run_plan, validate_de
from .precoder import (
    PrecodeCase,
    PrecodeResult,
    SystemConfig,
    constrained_precode,
    empirical_sinr,
    mmse_precode,
    papr_estimate,
    zf_precode,
)
from .rmt import DeterministicEquivalents, Ensemble, FixedPointSettings

__version__ = "0.1.0"

__all__ = [
    "ChannelRealization",
    "CorrelationSpec",
    "DeterministicEquivalents",
    "Ensemble",
    "ExperimentPlan",
    "ExperimentRecord",
    "FixedPointSettings",
    "PrecodeCase",
    "PrecodeResult",
    "SystemConfig",
    "build_correlation",
    "constrained_precode",
    "empirical_sinr",
    "matrix_sqrt",
    "mmse_precode",
    "papr_estimate",
    "run_plan",
    "sample_realization",
    "validate_de",
    "zf_precode",
]
