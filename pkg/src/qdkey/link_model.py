"""Analytic detection model: per-photon-number yields, gains and error rates.

For a channel of transmission eta_ch and a threshold detector of efficiency
eta_d with dark-count probability Y0, a k-photon pulse clicks with yield

    Y_k = Y0 + (1 - Y0) * (1 - (1 - eta_d*eta_ch)^k)

and carries the error rate

    e_k = (e_0*Y0 + e_d * (1 - (1 - eta_d*eta_ch)^k)) / Y_k,

where e_d is the optical misalignment error and e_0 = 1/2 the error of a
random background click.  Totals sum the gains p_k*Y_k over the truncated
distribution including the vacuum term (k = 0 clicks are dark counts the
receiver cannot distinguish from signal, so they are part of the measured
gain; this is also what the Monte Carlo oracle observes).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError, ValidationError
from .photon_stats import PhotonStats


@dataclass(frozen=True)
class DetectionParams:
    """Receiver parameters.

    eta_d : detector efficiency in [0, 1]
    y0    : dark-count probability per pulse in [0, 1)
    e_d   : detection (misalignment) error probability in [0, 0.5]
    e_0   : background error rate, 1/2 for random dark clicks
    """

    eta_d: float = 0.86
    y0: float = 1.6e-6
    e_d: float = 0.02
    e_0: float = 0.5

    def __post_init__(self):
        if not (0.0 <= self.eta_d <= 1.0):
            raise ValidationError(f"eta_d {self.eta_d!r} outside [0, 1]")
        if not (0.0 <= self.y0 < 1.0):
            raise ValidationError(f"y0 {self.y0!r} outside [0, 1)")
        if not (0.0 <= self.e_d <= 0.5):
            raise ValidationError(f"e_d {self.e_d!r} outside [0, 0.5]")
        if not (0.0 <= self.e_0 <= 0.5):
            raise ValidationError(f"e_0 {self.e_0!r} outside [0, 0.5]")


@dataclass(frozen=True)
class ChannelSpec:
    """Fiber channel, given either as (alpha, length) or as a transmission.

    When constructed from a length, eta_ch = 10^(-alpha*length/10) with
    alpha in dB/km (default 0.17, typical for the telecom C-band).
    """

    length_km: float | None = None
    alpha_db_km: float = 0.17
    eta_ch: float | None = None

    def __post_init__(self):
        if self.eta_ch is None:
            if self.length_km is None:
                raise ValidationError("either length_km or eta_ch must be given")
            if self.length_km < 0.0:
                raise ValidationError(f"length_km {self.length_km!r} negative")
            if self.alpha_db_km < 0.0:
                raise ValidationError(f"alpha_db_km {self.alpha_db_km!r} negative")
        else:
            if not (0.0 < self.eta_ch <= 1.0):
                raise ValidationError(f"eta_ch {self.eta_ch!r} outside (0, 1]")

    @property
    def transmission(self) -> float:
        if self.eta_ch is not None:
            return self.eta_ch
        return 10.0 ** (-self.alpha_db_km * self.length_km / 10.0)

    @classmethod
    def from_length(cls, length_km: float, alpha_db_km: float = 0.17) -> "ChannelSpec":
        return cls(length_km=length_km, alpha_db_km=alpha_db_km)

    @classmethod
    def from_transmission(cls, eta_ch: float) -> "ChannelSpec":
        return cls(eta_ch=eta_ch)


def _click_prob(k: int, eta: float) -> float:
    """1 - (1 - eta)^k, stable down to eta values that underflow 1 - eta."""
    if k == 0 or eta == 0.0:
        return 0.0
    if eta >= 1.0:
        return 1.0
    return -math.expm1(k * math.log1p(-eta))


def yield_k(k: int, ch: ChannelSpec, det: DetectionParams) -> float:
    """Click probability of a k-photon pulse."""
    if k < 0:
        raise DomainError(f"photon number {k!r} negative")
    t = _click_prob(k, det.eta_d * ch.transmission)
    return det.y0 + (1.0 - det.y0) * t


def error_k(k: int, ch: ChannelSpec, det: DetectionParams) -> float:
    """Error rate of a k-photon pulse, conditioned on a click."""
    if k < 0:
        raise DomainError(f"photon number {k!r} negative")
    t = _click_prob(k, det.eta_d * ch.transmission)
    yk = det.y0 + (1.0 - det.y0) * t
    if yk <= 0.0:
        raise DomainError(f"yield of k={k} is zero; error rate undefined")
    return (det.e_0 * det.y0 + det.e_d * t) / yk


def totals(s: PhotonStats, ch: ChannelSpec, det: DetectionParams) -> tuple[float, float]:
    """Total gain Q_tot and error rate E_tot of the source through the link.

    Sums k = 0..3; the k = 0 term contributes the vacuum dark-count gain
    Y0*p0 and its error budget e_0*Y0*p0, keeping the totals consistent with
    what a receiver (or the Monte Carlo oracle) actually measures.
    """
    eta = det.eta_d * ch.transmission
    q_tot = 0.0
    err_sum = 0.0
    for k, pk in enumerate((s.p0, s.p1, s.p2, s.p3)):
        t = _click_prob(k, eta)
        yk = det.y0 + (1.0 - det.y0) * t
        q_tot += pk * yk
        err_sum += pk * (det.e_0 * det.y0 + det.e_d * t)
    if q_tot <= 0.0:
        raise DomainError("total gain is zero; no clicks to analyze")
    return q_tot, err_sum / q_tot


def transmission_to_length(eta_ch: float, alpha_db_km: float = 0.17) -> float:
    """Fiber length (km) whose attenuation equals the given transmission."""
    if not (0.0 < eta_ch <= 1.0):
        raise DomainError(f"eta_ch {eta_ch!r} outside (0, 1]")
    return -10.0 * math.log10(eta_ch) / alpha_db_km
