"""Single-photon parameter estimation and asymptotic secure-key rates.

Two BB84 variants are supported.  The g2-bound protocol estimates the
single-photon gain and error from the totals and the multi-photon bound;
the two-decoy variant may use the exact per-photon-number yields and error
rates (two decoy intensities suffice for a source truncated at three
photons) at the price of a smaller sifting factor.

The secure fraction follows the asymptotic tagged-states formula

    SK = eta_sif * [Q1*(1 - H2(e1)) - f * Q_tot * H2(E_tot)],

clamped at zero.  Insecure operating points carry a reason code instead of
a negative rate.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

from .errors import DomainError
from .link_model import ChannelSpec, DetectionParams, error_k, totals, yield_k
from .photon_stats import PhotonStats

REASON_OK = "ok"
REASON_NO_SINGLE_PHOTON_GAIN = "q1-nonpositive"
REASON_E1_OUT_OF_RANGE = "e1-above-half"
REASON_NEGATIVE_RATE = "ec-cost-exceeds-gain"


class Protocol(enum.Enum):
    BB84_G2BOUND = "bb84"
    BB84_DECOY2 = "decoy2"


# Sifting factor: 1/2 for standard BB84 basis reconciliation; an extra 1/3
# signal fraction for the two-decoy variant (lossless modulator assumed).
_ETA_SIF = {Protocol.BB84_G2BOUND: 0.5, Protocol.BB84_DECOY2: 1.0 / 6.0}


@dataclass(frozen=True)
class ProtocolConfig:
    protocol: Protocol = Protocol.BB84_G2BOUND
    f: float = 1.2
    delta: float = 1e-8

    def __post_init__(self):
        if self.f < 1.0:
            raise DomainError(f"error-correction inefficiency f={self.f!r} < 1")
        if self.delta < 0.0:
            raise DomainError(f"delta {self.delta!r} negative")

    @property
    def eta_sif(self) -> float:
        return _ETA_SIF[self.protocol]


@dataclass(frozen=True)
class RateReport:
    """Per-pulse quantities at one operating point."""

    q_tot: float
    e_tot: float
    q1: float
    e1: float
    sk: float
    reason: str = REASON_OK

    @property
    def secure(self) -> bool:
        return self.reason == REASON_OK and self.sk > 0.0


def binary_entropy(x: float) -> float:
    """Binary Shannon entropy H2(x) in bits, with H2(0) = H2(1) = 0."""
    if not (0.0 <= x <= 1.0):
        raise DomainError(f"binary entropy argument {x!r} outside [0, 1]")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


def estimate_single_photon(
    s: PhotonStats,
    q_tot: float,
    e_tot: float,
    det: DetectionParams,
    subtract_vacuum_errors: bool = False,
) -> tuple[float, float, str]:
    """Bound the single-photon gain and error rate from the totals.

    All losses and errors are attributed to single photons (multi-photon
    pulses are assumed to click error-free), giving

        Q1 >= Q_tot - p_m - Y0*p0
        e1 <= E_tot*Q_tot / Q1.

    ``subtract_vacuum_errors=True`` additionally credits the trusted vacuum
    error budget, using e1 <= (E_tot*Q_tot - Y0*p0/2)/Q1; the default keeps
    the slightly looser bound, which is the behaviour the distance and
    brightness analyses are calibrated against.

    Returns (q1_lb, e1_ub, reason); a non-"ok" reason marks the point
    insecure, with q1 and e1 clamped to [0, q_tot] and [0, 1/2].
    """
    if q_tot <= 0.0:
        raise DomainError("q_tot must be positive")
    q1 = q_tot - s.p_m - det.y0 * s.p0
    if q1 <= 0.0:
        return 0.0, 0.5, REASON_NO_SINGLE_PHOTON_GAIN
    err_budget = e_tot * q_tot
    if subtract_vacuum_errors:
        err_budget -= 0.5 * det.y0 * s.p0
    e1 = max(err_budget, 0.0) / q1
    if e1 > 0.5:
        return min(q1, q_tot), 0.5, REASON_E1_OUT_OF_RANGE
    return min(q1, q_tot), e1, REASON_OK


def secure_key(r: RateReport, cfg: ProtocolConfig) -> float:
    """Secure key bits per pulse from an estimated rate report, clamped at 0."""
    if r.reason != REASON_OK:
        return 0.0
    raw = r.q1 * (1.0 - binary_entropy(r.e1)) - cfg.f * r.q_tot * binary_entropy(r.e_tot)
    return max(cfg.eta_sif * raw, 0.0)


def bb84_rate(s: PhotonStats, ch: ChannelSpec, det: DetectionParams, cfg: ProtocolConfig) -> RateReport:
    """Full g2-bound BB84 pipeline: totals -> single-photon bounds -> SK."""
    q_tot, e_tot = totals(s, ch, det)
    q1, e1, reason = estimate_single_photon(s, q_tot, e_tot, det)
    partial = RateReport(q_tot=q_tot, e_tot=e_tot, q1=q1, e1=e1, sk=0.0, reason=reason)
    if reason != REASON_OK:
        return partial
    sk = secure_key(partial, cfg)
    if sk == 0.0:
        return replace(partial, reason=REASON_NEGATIVE_RATE)
    return replace(partial, sk=sk)


def decoy_rate(s: PhotonStats, ch: ChannelSpec, det: DetectionParams, cfg: ProtocolConfig) -> RateReport:
    """Two-decoy BB84 rate using the exact Y1 and e1 instead of the bounds."""
    if cfg.protocol is not Protocol.BB84_DECOY2:
        raise DomainError("decoy_rate requires the BB84_DECOY2 protocol")
    q_tot, e_tot = totals(s, ch, det)
    q1 = s.p1 * yield_k(1, ch, det)
    e1 = error_k(1, ch, det)
    partial = RateReport(q_tot=q_tot, e_tot=e_tot, q1=q1, e1=e1, sk=0.0)
    sk = secure_key(partial, cfg)
    if sk == 0.0:
        return replace(partial, reason=REASON_NEGATIVE_RATE)
    return replace(partial, sk=sk)


def rate_report(s: PhotonStats, ch: ChannelSpec, det: DetectionParams, cfg: ProtocolConfig) -> RateReport:
    """Dispatch to the configured protocol's rate pipeline."""
    if cfg.protocol is Protocol.BB84_DECOY2:
        return decoy_rate(s, ch, det, cfg)
    return bb84_rate(s, ch, det, cfg)
