"""Stochastic per-pulse oracle for the analytic link model.

Every pulse draws a photon number from the source distribution; each photon
independently survives the combined detector-and-channel transmission, a
dark count fires with probability Y0, and any surviving photon or dark
count produces a click.  Clicked pulses record an error from one uniformly
chosen detected photon (each photon errs independently with probability
e_d) or, for dark-only clicks, a coin flip.

Pulses are processed in fixed-size blocks, each with its own counter-based
Philox stream keyed by (seed, block index), so results are bit-identical
for any worker count and any traversal order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .errors import DomainError, ValidationError
from .link_model import ChannelSpec, DetectionParams
from .photon_stats import PhotonStats

#: Pulses per RNG block; fixed so that stream assignment never depends on
#: how the blocks are scheduled.
BLOCK_SIZE = 1_000_000

#: Default pulse repetition period (75.95 MHz clock).
DEFAULT_REP_PERIOD = 1.0 / 75.95e6


@dataclass(frozen=True)
class SimConfig:
    n_pulses: int
    seed: int
    stats: PhotonStats
    ch: ChannelSpec
    det: DetectionParams
    lifetime: float | None = None  # emission decay time for timestamped runs

    def __post_init__(self):
        if self.n_pulses < 1:
            raise ValidationError(f"n_pulses {self.n_pulses!r} < 1")
        if self.lifetime is not None and self.lifetime <= 0.0:
            raise ValidationError(f"lifetime {self.lifetime!r} not positive")


@dataclass(frozen=True)
class SimResult:
    q_hat: float
    e_hat: float
    sigma_q: float
    sigma_e: float
    n_pulses: int
    n_clicks: int
    n_errors: int


def _block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed).jumped(block))


def _simulate_block(seed: int, block: int, n: int, cum, eta: float, det: DetectionParams):
    rng = _block_rng(seed, block)
    k = np.searchsorted(cum, rng.random(n), side="right")
    survivors = rng.binomial(k, eta)
    dark = rng.random(n) < det.y0
    clicks = (survivors > 0) | dark
    # error of the recorded bit: one uniformly chosen detected photon, each
    # photon wrong independently with probability e_d; coin flip if dark-only
    wrong_photons = rng.binomial(survivors, det.e_d)
    pick = rng.random(n) * np.maximum(survivors, 1)
    photon_error = pick < wrong_photons
    dark_error = rng.random(n) < det.e_0
    errors = np.where(survivors > 0, photon_error, dark_error) & clicks
    return int(clicks.sum()), int(errors.sum())


def simulate(cfg: SimConfig, workers: int = 1) -> SimResult:
    """Estimate (Q, E) with binomial standard errors.

    Deterministic for a given (seed, config) regardless of ``workers``.
    """
    s = cfg.stats
    cum = np.cumsum([s.p0, s.p1, s.p2, s.p3])
    cum[-1] = 1.0  # guard the float tail
    eta = cfg.det.eta_d * cfg.ch.transmission

    n_blocks = (cfg.n_pulses + BLOCK_SIZE - 1) // BLOCK_SIZE
    sizes = [
        min(BLOCK_SIZE, cfg.n_pulses - b * BLOCK_SIZE) for b in range(n_blocks)
    ]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(
                pool.map(
                    lambda b: _simulate_block(cfg.seed, b, sizes[b], cum, eta, cfg.det),
                    range(n_blocks),
                )
            )
    else:
        parts = [
            _simulate_block(cfg.seed, b, sizes[b], cum, eta, cfg.det)
            for b in range(n_blocks)
        ]
    n_clicks = sum(p[0] for p in parts)
    n_errors = sum(p[1] for p in parts)

    n = cfg.n_pulses
    q_hat = n_clicks / n
    sigma_q = math.sqrt(max(q_hat * (1.0 - q_hat), 0.0) / n)
    if n_clicks > 0:
        e_hat = n_errors / n_clicks
        sigma_e = math.sqrt(max(e_hat * (1.0 - e_hat), 0.0) / n_clicks)
    else:
        e_hat, sigma_e = math.nan, math.inf
    return SimResult(q_hat, e_hat, sigma_q, sigma_e, n, n_clicks, n_errors)


def synth_histogram(
    cfg: SimConfig,
    bin_width: float = 100e-12,
    n_periods: int = 13,
    rep_period: float = DEFAULT_REP_PERIOD,
    blink_p_on: float = 1.0,
    blink_mean_pulses: float = 0.0,
):
    """Simulated two-detector coincidence histogram of the bare source.

    Photon timestamps are pulse_index*rep_period plus an exponential decay
    delay with the configured lifetime; each photon lands on one of two
    virtual detectors with probability 1/2, and all pairwise delays within
    the histogram span are accumulated.  Optional on/off intermittency
    (``blink_p_on`` < 1, Markov telegraph with mean dwell
    ``blink_mean_pulses``) bunches nearby side peaks for exercising the
    blinking-corrected analysis.

    Returns a :class:`qdkey.correlation.CoincidenceHistogram`.
    """
    from .correlation import CoincidenceHistogram  # local import: no cycle at runtime

    if cfg.lifetime is None:
        raise DomainError("synth_histogram requires a lifetime in SimConfig")
    if n_periods % 2 == 0 or n_periods < 3:
        raise DomainError(f"n_periods {n_periods!r} must be odd and >= 3")
    if not (0.0 < blink_p_on <= 1.0):
        raise DomainError(f"blink_p_on {blink_p_on!r} outside (0, 1]")

    s = cfg.stats
    cum = np.cumsum([s.p0, s.p1, s.p2, s.p3])
    cum[-1] = 1.0
    half_span = (n_periods / 2.0) * rep_period
    n_bins = 2 * int(round(half_span / bin_width)) + 1
    edges = (np.arange(n_bins + 1) - n_bins / 2.0) * bin_width
    counts = np.zeros(n_bins, dtype=np.int64)

    n_blocks = (cfg.n_pulses + BLOCK_SIZE - 1) // BLOCK_SIZE
    for b in range(n_blocks):
        n = min(BLOCK_SIZE, cfg.n_pulses - b * BLOCK_SIZE)
        rng = _block_rng(cfg.seed, b)
        k = np.searchsorted(cum, rng.random(n), side="right")
        if blink_p_on < 1.0:
            k = k * _telegraph(rng, n, blink_p_on, blink_mean_pulses)
        total = int(k.sum())
        if total == 0:
            continue
        pulse_idx = np.repeat(np.arange(n, dtype=np.float64), k)
        times = pulse_idx * rep_period + rng.exponential(cfg.lifetime, total)
        detector = rng.random(total) < 0.5
        t1 = np.sort(times[detector])
        t2 = np.sort(times[~detector])
        if t1.size == 0 or t2.size == 0:
            continue
        lo = np.searchsorted(t2, t1 - half_span, side="left")
        hi = np.searchsorted(t2, t1 + half_span, side="right")
        m = hi - lo
        take = m > 0
        if not take.any():
            continue
        starts = lo[take]
        reps = m[take]
        cum_reps = np.cumsum(reps)
        pair_idx = np.arange(cum_reps[-1])
        row = np.searchsorted(cum_reps, pair_idx, side="right")
        within = pair_idx - (cum_reps[row] - reps[row])
        delays = t2[starts[row] + within] - t1[take][row]
        counts += np.histogram(delays, bins=edges)[0]

    return CoincidenceHistogram(
        bin_width=bin_width,
        rep_period=rep_period,
        counts=counts,
        center_index=n_bins // 2,
    )


def _telegraph(rng: np.random.Generator, n: int, p_on: float, mean_pulses: float):
    """Markov on/off gate per pulse with stationary on-probability p_on."""
    if mean_pulses <= 0.0:
        return (rng.random(n) < p_on).astype(np.int64)
    # flip rates chosen so dwell times average mean_pulses at stationarity
    p_off_to_on = p_on / mean_pulses
    p_on_to_off = (1.0 - p_on) / mean_pulses
    u = rng.random(n)
    state = np.empty(n, dtype=np.int64)
    cur = 1 if rng.random() < p_on else 0
    for i in range(n):
        if cur == 1:
            if u[i] < p_on_to_off:
                cur = 0
        else:
            if u[i] < p_off_to_on:
                cur = 1
        state[i] = cur
    return state
