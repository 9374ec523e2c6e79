"""Temporal post-selection of the source emission.

Gating every repetition period with a window of width tau_A trades
brightness for a proportional cut in the receiver's dark-count exposure,

    Y0(tau_A) = Y0 * tau_A / T_rep,

and, for an exponential decay trace, a transmitted fraction of about
1 - exp(-tau_A/T1).  On histograms the acceptance region per period is
|delay - (n*T_rep + t0)| <= tau_A, clipped to the period: on the
difference-of-exponentials side peaks this captures exactly the single-arm
fraction, which is what makes the windowed side-peak area the right
brightness correction, and at tau_A = T_rep it degenerates to the plain
full-period analysis bin for bin.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .correlation import CoincidenceHistogram, CountRates, G2Result, _g2_ratio, period_areas, blink_corrected_reference
from .errors import DomainError, ValidationError
from .keyrate import ProtocolConfig, rate_report
from .link_model import ChannelSpec, DetectionParams
from .photon_stats import SourceMeasurement, infer_stats

DEFAULT_LIFETIME = 1.07e-9  # mono-exponential decay time of the synthetic model


@dataclass(frozen=True)
class FilterWindow:
    """Acceptance gate per repetition period.

    The receiver window is taken equal to the sender window (tau_B = tau_A),
    the tightest arrangement still satisfying tau_B >= tau_A.
    """

    tau_a: float
    rep_period: float
    t0: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.tau_a <= self.rep_period):
            raise ValidationError(
                f"tau_a {self.tau_a!r} outside (0, rep_period={self.rep_period!r}]"
            )

    @property
    def is_full(self) -> bool:
        return self.tau_a >= self.rep_period


@dataclass(frozen=True)
class DecayModel:
    """Mono-exponential emission decay with the gate opening at the peak."""

    lifetime: float = DEFAULT_LIFETIME
    window_start_at_peak: bool = True

    def __post_init__(self):
        if self.lifetime <= 0.0:
            raise ValidationError(f"lifetime {self.lifetime!r} not positive")

    def transmitted_fraction(self, tau_a: float, rep_period: float) -> float:
        """Share of one period's decay trace inside a gate of width tau_a.

        Normalized to the one-period capture so a full window transmits
        exactly 1.
        """
        full = 1.0 - math.exp(-rep_period / self.lifetime)
        return (1.0 - math.exp(-tau_a / self.lifetime)) / full


def filtered_dark(y0: float, w: FilterWindow) -> float:
    """Dark-count probability inside the acceptance window."""
    return y0 * w.tau_a / w.rep_period


def filtered_brightness(
    b: float,
    w: FilterWindow,
    h: CoincidenceHistogram | None = None,
    decay: DecayModel | None = None,
    blink_far_peaks: int = 5,
) -> float:
    """Brightness after the gate.

    Histogram path: scale by the windowed over full blinking-corrected
    side-peak area.  Model path: scale by the decay fraction inside the
    window.  Exactly one of ``h`` and ``decay`` must be given.
    """
    if (h is None) == (decay is None):
        raise DomainError("provide exactly one of a histogram or a decay model")
    if decay is not None:
        return b * decay.transmitted_fraction(w.tau_a, w.rep_period)
    if w.is_full:
        return b
    idx, full_areas, _ = period_areas(h)
    _, win_areas, _ = period_areas(h, window=(w.tau_a, w.t0))
    ref_full = blink_corrected_reference(idx, full_areas, blink_far_peaks)
    ref_win = blink_corrected_reference(idx, win_areas, blink_far_peaks)
    if ref_full <= 0.0:
        raise DomainError("full-window reference side-peak area is zero")
    return b * ref_win / ref_full


def filtered_g2(
    h: CoincidenceHistogram,
    c: CountRates,
    w: FilterWindow,
    blink_far_peaks: int = 5,
) -> G2Result:
    """Windowed g2(0): the gate applies to the central and all side peaks."""
    if w.is_full:
        return _g2_ratio(h, c, window=None, blink_far_peaks=blink_far_peaks)
    return _g2_ratio(h, c, window=(w.tau_a, w.t0), blink_far_peaks=blink_far_peaks)


@dataclass(frozen=True)
class StrategyPoint:
    distance_km: float
    sk_power: float
    power_at_opt: float
    sk_filter: float
    tau_a_at_opt: float

    @property
    def winner(self) -> str:
        if self.sk_filter > self.sk_power:
            return "filter"
        if self.sk_power > self.sk_filter:
            return "power"
        return "tie"


@dataclass(frozen=True)
class StrategyComparison:
    points: tuple[StrategyPoint, ...]
    crossover_km: float | None  # first sampled distance where filtering wins


def _tau_grid(rep_period: float, n: int = 50, tau_min: float = 0.05e-9):
    lo, hi = math.log(tau_min), math.log(rep_period)
    return [
        min(math.exp(lo + (hi - lo) * (i / (n - 1))), rep_period) for i in range(n)
    ]


def optimize_window(
    b: float,
    g2: float,
    det: DetectionParams,
    cfg: ProtocolConfig,
    ch: ChannelSpec,
    decay: DecayModel,
    rep_period: float,
    n_grid: int = 50,
    tau_min: float = 0.05e-9,
) -> tuple[float, float]:
    """Best (tau_a, SK) for a gated source at one operating point.

    Coarse log grid over [tau_min, rep_period], refined once with a finer
    grid across the bracketing cells.
    """

    def sk_of(tau: float) -> float:
        w = FilterWindow(tau_a=tau, rep_period=rep_period)
        b_f = filtered_brightness(b, w, decay=decay)
        y0_f = filtered_dark(det.y0, w)
        det_f = DetectionParams(eta_d=det.eta_d, y0=y0_f, e_d=det.e_d, e_0=det.e_0)
        stats = infer_stats(SourceMeasurement(brightness=b_f, g2=g2))
        return rate_report(stats, ch, det_f, cfg).sk

    grid = _tau_grid(rep_period, n_grid, tau_min)
    values = [sk_of(t) for t in grid]
    best = max(range(len(grid)), key=values.__getitem__)
    lo = grid[max(best - 1, 0)]
    hi = grid[min(best + 1, len(grid) - 1)]
    fine = [lo * (hi / lo) ** (i / 19.0) for i in range(20)]
    fine_vals = [sk_of(t) for t in fine]
    i = max(range(20), key=fine_vals.__getitem__)
    if fine_vals[i] >= values[best]:
        return fine[i], fine_vals[i]
    return grid[best], values[best]


def compare_strategies(
    rows: Sequence[tuple[float, float, float]],
    det: DetectionParams,
    cfg: ProtocolConfig,
    alpha: float,
    distances_km: Sequence[float],
    decay: DecayModel,
    rep_period: float,
    n_grid: int = 50,
) -> StrategyComparison:
    """Pump-power tuning versus time filtering over distance.

    ``rows`` are (power, brightness, g2) samples at one fixed detuning.
    Strategy (a) picks the best row per distance at the full window;
    strategy (b) stays at the maximal-power row and tunes the gate width.
    """
    if not rows:
        raise DomainError("no excitation rows supplied")
    by_power = sorted(rows, key=lambda r: r[0])
    p_max, b_max, g2_max = by_power[-1]

    points = []
    crossover = None
    for d in distances_km:
        ch = ChannelSpec.from_length(float(d), alpha)
        sk_pow, pow_at = 0.0, by_power[0][0]
        for power, b, g2 in by_power:
            sk = rate_report(infer_stats(SourceMeasurement(b, g2)), ch, det, cfg).sk
            if sk > sk_pow:
                sk_pow, pow_at = sk, power
        tau_opt, sk_flt = optimize_window(
            b_max, g2_max, det, cfg, ch, decay, rep_period, n_grid
        )
        points.append(
            StrategyPoint(
                distance_km=float(d),
                sk_power=sk_pow,
                power_at_opt=pow_at,
                sk_filter=sk_flt,
                tau_a_at_opt=tau_opt,
            )
        )
        if crossover is None and sk_flt > sk_pow and sk_flt > cfg.delta:
            crossover = float(d)
    return StrategyComparison(points=tuple(points), crossover_km=crossover)
