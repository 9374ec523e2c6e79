"""Secure-key modelling for BB84 QKD with sub-Poissonian single-photon sources."""

from .errors import DomainError, ParseError, ValidationError
from .photon_stats import (
    PhotonStats,
    SourceMeasurement,
    attenuate,
    bound_multi_photon,
    g2_of_stats,
    infer_stats,
)
from .link_model import (
    ChannelSpec,
    DetectionParams,
    error_k,
    totals,
    transmission_to_length,
    yield_k,
)
from .keyrate import (
    Protocol,
    ProtocolConfig,
    RateReport,
    bb84_rate,
    binary_entropy,
    decoy_rate,
    estimate_single_photon,
    rate_report,
    secure_key,
)
from .optimize import (
    DistanceCurve,
    MaxDistanceResult,
    OptimalBrightnessResult,
    distance_curve,
    max_distance,
    optimal_brightness,
    optimize_attenuation,
    rule_of_thumb,
)
from .correlation import (
    CoincidenceHistogram,
    CountRates,
    G2Result,
    dark_coincidences,
    expected_double_count,
    g2_zero,
    measured_brightness,
    read_histogram,
    write_histogram,
)
from .timefilter import (
    DecayModel,
    FilterWindow,
    StrategyComparison,
    compare_strategies,
    filtered_brightness,
    filtered_dark,
    filtered_g2,
)
from .mc_oracle import SimConfig, SimResult, simulate, synth_histogram
from .gridmap import ExcitationGrid, GridCell, SKMap, ingest_grid, make_sk_map

__version__ = "0.1.0"

__all__ = [
    "DomainError",
    "ParseError",
    "ValidationError",
    "PhotonStats",
    "SourceMeasurement",
    "attenuate",
    "bound_multi_photon",
    "g2_of_stats",
    "infer_stats",
    "ChannelSpec",
    "DetectionParams",
    "error_k",
    "totals",
    "transmission_to_length",
    "yield_k",
    "Protocol",
    "ProtocolConfig",
    "RateReport",
    "bb84_rate",
    "binary_entropy",
    "decoy_rate",
    "estimate_single_photon",
    "rate_report",
    "secure_key",
    "DistanceCurve",
    "MaxDistanceResult",
    "OptimalBrightnessResult",
    "distance_curve",
    "max_distance",
    "optimal_brightness",
    "optimize_attenuation",
    "rule_of_thumb",
    "CoincidenceHistogram",
    "CountRates",
    "G2Result",
    "dark_coincidences",
    "expected_double_count",
    "g2_zero",
    "measured_brightness",
    "read_histogram",
    "write_histogram",
    "DecayModel",
    "FilterWindow",
    "StrategyComparison",
    "compare_strategies",
    "filtered_brightness",
    "filtered_dark",
    "filtered_g2",
    "SimConfig",
    "SimResult",
    "simulate",
    "synth_histogram",
    "ExcitationGrid",
    "GridCell",
    "SKMap",
    "ingest_grid",
    "make_sk_map",
]
