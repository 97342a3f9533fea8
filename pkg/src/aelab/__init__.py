"""Numerical laboratory for Grover-type amplitude estimation under depolarizing noise."""

from .model import (
    INFINITE,
    EstimationProblem,
    Method,
    NoiseModel,
    RoundOutcome,
    Schedule,
    SystemSize,
    breakeven_qubits,
    derive_seed,
    prob_good,
    prob_pair,
    prob_terms,
    query_count,
    readout_factor,
    sample_round,
)
from .fisher import (
    CURVE_KINDS,
    FisherCurve,
    classical_fisher,
    classical_fisher_envelope,
    curve,
    envelope_peak,
    quantum_fisher,
    theta_sweep_max,
)
from .estimator import (
    CrbCurves,
    ExperimentConfig,
    MeasurementRecord,
    RmseRow,
    RmseTable,
    build_eis_schedule,
    crb_curves,
    log_likelihood,
    mle_estimate,
    run_experiment,
    sample_record,
)
from . import refsim

__version__ = "0.1.0"

__all__ = [
    "INFINITE",
    "EstimationProblem",
    "Method",
    "NoiseModel",
    "RoundOutcome",
    "Schedule",
    "SystemSize",
    "breakeven_qubits",
    "derive_seed",
    "prob_good",
    "prob_pair",
    "prob_terms",
    "query_count",
    "readout_factor",
    "sample_round",
    "CURVE_KINDS",
    "FisherCurve",
    "classical_fisher",
    "classical_fisher_envelope",
    "curve",
    "envelope_peak",
    "quantum_fisher",
    "theta_sweep_max",
    "CrbCurves",
    "ExperimentConfig",
    "MeasurementRecord",
    "RmseRow",
    "RmseTable",
    "build_eis_schedule",
    "crb_curves",
    "log_likelihood",
    "mle_estimate",
    "run_experiment",
    "sample_record",
    "refsim",
    "__version__",
]
