"""Attenuation optimization, distance curves and maximum-distance solvers.

Deliberately attenuating a bright source before the untrusted channel trades
single-photon gain against the multi-photon bound; the point-wise optimum
over the attenuation eta_att forms the enveloping rate-versus-distance
curve.  The maximum attainable distance has no closed form, but the
minimal channel transmission is approximated by the rule of thumb

    eta_ch_min ~ B*g2/2 + Y0,

which always overestimates the numeric distance (it drops the
error-correction cost).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError
from .keyrate import ProtocolConfig, rate_report
from .link_model import ChannelSpec, DetectionParams, transmission_to_length
from .photon_stats import PhotonStats, SourceMeasurement, attenuate, infer_stats

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

#: Distances beyond this are reported as capped rather than searched.
DISTANCE_CAP_KM = 1000.0

#: Lower edge of the attenuation / brightness search grids.
ETA_ATT_FLOOR = 1e-6
BRIGHTNESS_FLOOR = 1e-3


@dataclass(frozen=True)
class CurvePoint:
    length_km: float
    sk: float
    eta_att_opt: float
    reason: str


@dataclass(frozen=True)
class DistanceCurve:
    """SK versus channel length, optionally attenuation-optimized."""

    points: tuple[CurvePoint, ...]

    def __post_init__(self):
        lengths = [p.length_km for p in self.points]
        if any(b <= a for a, b in zip(lengths, lengths[1:])):
            raise DomainError("curve lengths must be strictly increasing")
        if any(p.sk < 0.0 for p in self.points):
            raise DomainError("curve SK values must be non-negative")


@dataclass(frozen=True)
class MaxDistanceResult:
    distance_km: float
    at_cap: bool = False


@dataclass(frozen=True)
class OptimalBrightnessResult:
    brightness: float
    distance_km: float
    at_floor: bool = False


def _sk(s, length_km, det, cfg, alpha):
    ch = ChannelSpec.from_length(length_km, alpha)
    return rate_report(s, ch, det, cfg).sk


def golden_section_max(f, a: float, b: float, tol: float) -> tuple[float, float]:
    """Maximize f on [a, b]; returns (x, f(x)) at interval width tol."""
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def optimize_attenuation(
    s: PhotonStats,
    ch: ChannelSpec,
    det: DetectionParams,
    cfg: ProtocolConfig,
    n_grid: int = 200,
) -> tuple[float, float]:
    """Maximize SK over the sender attenuation eta_att in (0, 1].

    A log-spaced coarse grid guards against non-unimodal rate surfaces; the
    bracketing cell is then refined by golden-section search to a relative
    eta resolution of 1e-4.  Returns (1.0, SK(s)) when no interior optimum
    beats the unattenuated source.
    """

    def sk_of_log_eta(log_eta: float) -> float:
        return rate_report(attenuate(s, math.exp(log_eta)), ch, det, cfg).sk

    sk_full = rate_report(s, ch, det, cfg).sk
    log_lo = math.log(ETA_ATT_FLOOR)
    grid = [log_lo * (1.0 - i / (n_grid - 1)) for i in range(n_grid)]
    values = [sk_of_log_eta(g) for g in grid]
    best = max(range(n_grid), key=values.__getitem__)
    if values[best] <= sk_full:
        return 1.0, sk_full
    a = grid[max(best - 1, 0)]
    b = grid[min(best + 1, n_grid - 1)]
    # log-interval width ~ relative eta resolution
    x, fx = golden_section_max(sk_of_log_eta, a, b, tol=1e-4)
    if fx <= sk_full:
        return 1.0, sk_full
    return math.exp(x), fx


def max_distance(
    s: PhotonStats,
    det: DetectionParams,
    cfg: ProtocolConfig,
    alpha: float = 0.17,
    optimize_att: bool = False,
    cap_km: float = DISTANCE_CAP_KM,
    resolution_km: float = 0.01,
) -> MaxDistanceResult:
    """Largest channel length with SK above the protocol threshold delta.

    Bisection keeps the predicate true on the left bracket and false on the
    right; with ``optimize_att`` every probe first optimizes the sender
    attenuation.  An unbounded search returns the cap, flagged.
    """

    def sk_at(d: float) -> float:
        if optimize_att:
            ch = ChannelSpec.from_length(d, alpha)
            return optimize_attenuation(s, ch, det, cfg)[1]
        return _sk(s, d, det, cfg, alpha)

    if sk_at(0.0) <= cfg.delta:
        raise DomainError("no key at zero distance")
    if sk_at(cap_km) > cfg.delta:
        return MaxDistanceResult(distance_km=cap_km, at_cap=True)
    lo, hi = 0.0, cap_km
    while hi - lo > resolution_km:
        mid = 0.5 * (lo + hi)
        if sk_at(mid) > cfg.delta:
            lo = mid
        else:
            hi = mid
    return MaxDistanceResult(distance_km=lo)


def rule_of_thumb(m: SourceMeasurement, y0: float, alpha: float = 0.17) -> tuple[float, float]:
    """Closed-form minimal transmission and distance estimate.

    eta_ch_min = B*g2/2 + Y0 and the dB conversion to km.  Overestimates
    the numeric maximum distance (typically by a few tens of km) because it
    ignores the error-correction cost.
    """
    eta_min = m.brightness * m.g2 / 2.0 + y0
    if eta_min >= 1.0:
        raise DomainError(f"eta_ch_min {eta_min!r} >= 1; no positive distance")
    if eta_min <= 0.0:
        return 0.0, math.inf
    return eta_min, transmission_to_length(eta_min, alpha)


def optimal_brightness(
    g2: float,
    det: DetectionParams,
    cfg: ProtocolConfig,
    alpha: float = 0.17,
    b_floor: float = BRIGHTNESS_FLOOR,
    n_grid: int = 40,
) -> OptimalBrightnessResult:
    """Brightness maximizing the attainable distance at fixed g2.

    Scalar search over log B in [b_floor, 1]: coarse grid, then
    golden-section refinement to 1e-3 relative.  When the dark-count floor
    is absent the distance grows monotonically as B shrinks and the search
    pins to b_floor, flagged.
    """
    if not (0.0 < g2 < 1.0):
        raise DomainError(f"g2 {g2!r} outside (0, 1)")

    def dist_of_log_b(log_b: float) -> float:
        m = SourceMeasurement(brightness=min(math.exp(log_b), 1.0), g2=g2)
        try:
            return max_distance(infer_stats(m), det, cfg, alpha).distance_km
        except DomainError:  # no key even at zero distance
            return 0.0

    log_lo, log_hi = math.log(b_floor), 0.0
    grid = [log_lo + (log_hi - log_lo) * (i / (n_grid - 1)) for i in range(n_grid)]
    values = [dist_of_log_b(g) for g in grid]
    best = max(range(n_grid), key=values.__getitem__)
    a = grid[max(best - 1, 0)]
    b = grid[min(best + 1, n_grid - 1)]
    x, fx = golden_section_max(dist_of_log_b, a, b, tol=1e-3)
    if values[best] > fx:
        x, fx = grid[best], values[best]
    b_opt = math.exp(x)
    at_floor = best == 0 and values[0] >= fx
    if at_floor:
        b_opt, fx = b_floor, values[0]
    return OptimalBrightnessResult(brightness=b_opt, distance_km=fx, at_floor=at_floor)


def distance_curve(
    s: PhotonStats,
    det: DetectionParams,
    cfg: ProtocolConfig,
    alpha: float,
    lengths_km,
    optimize_att: bool = False,
) -> DistanceCurve:
    """Sample SK (optionally attenuation-optimized) over channel lengths."""
    points = []
    for d in lengths_km:
        ch = ChannelSpec.from_length(float(d), alpha)
        if optimize_att:
            eta_opt, sk = optimize_attenuation(s, ch, det, cfg)
            reason = rate_report(attenuate(s, eta_opt), ch, det, cfg).reason
        else:
            report = rate_report(s, ch, det, cfg)
            eta_opt, sk, reason = 1.0, report.sk, report.reason
        points.append(CurvePoint(length_km=float(d), sk=sk, eta_att_opt=eta_opt, reason=reason))
    return DistanceCurve(points=tuple(points))
