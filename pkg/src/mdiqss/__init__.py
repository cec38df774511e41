"""State-vector simulator for sender-controlled MDI quantum secret sharing."""

from .adversary import AttackKind, DetectionStats, measure_detection_rate
from .coding import NoiseModel, RepetitionCode, logical_error_rate, repetition_decode, repetition_encode
from .ghz import (
    ProductStateSpec,
    analyze_ideal,
    analyze_linear_optics,
    collapse_state,
    decompose_in_ghz_basis,
    ghz_state,
    linear_optics_success_probability,
    predict_collapse,
)
from .protocol import (
    AnalyzerKind,
    ConfigError,
    DecodeMethod,
    SessionConfig,
    Transcript,
    Verdict,
    decode_message,
    run_session,
)
from .quantum import Eigenstate, PauliBasis, StateVector
from .report import RunReport

__all__ = [
    "AnalyzerKind",
    "AttackKind",
    "ConfigError",
    "DecodeMethod",
    "DetectionStats",
    "Eigenstate",
    "NoiseModel",
    "PauliBasis",
    "ProductStateSpec",
    "RepetitionCode",
    "RunReport",
    "SessionConfig",
    "StateVector",
    "Transcript",
    "Verdict",
    "analyze_ideal",
    "analyze_linear_optics",
    "collapse_state",
    "decode_message",
    "decompose_in_ghz_basis",
    "ghz_state",
    "linear_optics_success_probability",
    "logical_error_rate",
    "measure_detection_rate",
    "predict_collapse",
    "repetition_decode",
    "repetition_encode",
    "run_session",
]
