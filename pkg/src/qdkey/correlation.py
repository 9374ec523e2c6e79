"""Coincidence-histogram analytics for two-detector autocorrelation data.

Covers the click-counting corrections needed to turn raw detector rates
into a source brightness (summing two channels double-counts multi-photon
states), the accidental-coincidence background expected from dark counts,
and the evaluation of g2(0) as the ratio of the central repetition period's
area to a blinking-corrected reference side-peak area.  The full central
period is always integrated: everything the source emits within one clock
cycle is available to an adversary, so no sub-window may be discarded when
quoting the source purity (time filtering is a separate, explicit analysis).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import curve_fit

from .errors import DomainError, ParseError, ValidationError
from .photon_stats import PhotonStats

#: Histograms must span at least this many complete repetition periods
#: (the central peak plus five side peaks on either side).
MIN_PERIODS = 11


@dataclass(frozen=True, eq=False)
class CoincidenceHistogram:
    """Binned coincidence delays between the two detectors.

    counts[i] holds coincidences with delay in the bin centred at
    (i - center_index) * bin_width; center_index is the zero-delay bin.
    """

    bin_width: float
    rep_period: float
    counts: np.ndarray
    center_index: int

    def __post_init__(self):
        counts = np.asarray(self.counts)
        if counts.ndim != 1 or len(counts) == 0:
            raise ValidationError("counts must be a non-empty 1-d array")
        if np.any(counts < 0):
            raise ValidationError("histogram counts must be non-negative")
        if self.bin_width <= 0.0 or self.rep_period <= 0.0:
            raise ValidationError("bin_width and rep_period must be positive")
        if self.rep_period / self.bin_width < 10.0:
            raise ValidationError("need at least 10 bins per repetition period")
        if not (0 <= self.center_index < len(counts)):
            raise ValidationError("center_index outside the histogram")
        object.__setattr__(self, "counts", counts)

    def delays(self) -> np.ndarray:
        """Bin-centre delay axis in seconds."""
        return (np.arange(len(self.counts)) - self.center_index) * self.bin_width

    def n_side_peaks(self) -> int:
        """Complete side peaks available on the weaker side of the centre."""
        left = self.center_index * self.bin_width
        right = (len(self.counts) - 1 - self.center_index) * self.bin_width
        usable = min(left, right) / self.rep_period + 0.5
        return max(int(math.floor(usable)) - 1, 0)


@dataclass(frozen=True)
class CountRates:
    """Raw detector rates of one acquisition run (all in Hz).

    ``cc12`` is the coincidence rate within one repetition period;
    ``duration_s`` (when known) converts the dark-coincidence rate product
    into expected counts per bin. If omitted it is inferred from the
    uncorrelated side-peak area.
    """

    r1: float
    r2: float
    r1_dark: float = 0.0
    r2_dark: float = 0.0
    cc12: float = 0.0
    nu_rep: float = 75.95e6
    eta_setup: float = 0.15
    eta_d: float = 0.86
    duration_s: float | None = None

    def __post_init__(self):
        for name in ("r1", "r2", "r1_dark", "r2_dark", "cc12", "nu_rep"):
            if getattr(self, name) < 0.0:
                raise ValidationError(f"{name} must be non-negative")
        for name in ("eta_setup", "eta_d"):
            if not (0.0 < getattr(self, name) <= 1.0):
                raise ValidationError(f"{name} outside (0, 1]")
        if self.duration_s is not None and self.duration_s <= 0.0:
            raise ValidationError("duration_s must be positive when given")


@dataclass(frozen=True)
class G2Result:
    value: float
    sigma: float
    central_area: float
    reference_area: float
    clamped: bool = False  # background subtraction hit the zero floor somewhere


def expected_double_count(s: PhotonStats) -> float:
    """Summed two-channel click rate per pulse, B + p2/2 + 3*p3/4.

    A k-photon state fires both detectors of a 50:50 splitter with
    probability 1 - 2^(1-k), inflating the naive sum of channel rates above
    the brightness.
    """
    return s.brightness + 0.5 * s.p2 + 0.75 * s.p3


def measured_brightness(c: CountRates) -> float:
    """Brightness from raw rates with the double-count correction.

    B = (R1 + R2 - CC12) / (nu_rep * eta_setup * eta_d).
    """
    b = (c.r1 + c.r2 - c.cc12) / (c.nu_rep * c.eta_setup * c.eta_d)
    if not (0.0 <= b <= 1.0):
        raise DomainError(f"measured brightness {b!r} outside [0, 1]")
    return b


def dark_coincidences(c: CountRates) -> float:
    """Accidental coincidence rate involving at least one dark count.

    R1*R2d + R2*R1d + R1d*R2d, in s^-2; the caller scales by bin width and
    acquisition time for a per-bin expectation.
    """
    return c.r1 * c.r2_dark + c.r2 * c.r1_dark + c.r1_dark * c.r2_dark


# -- histogram machinery ----------------------------------------------------


def period_areas(h: CoincidenceHistogram, window=None):
    """Integrated counts per complete repetition period.

    Bins belong to the period whose centre n*rep_period is nearest; with a
    ``window`` (tau_a, t0) only bins with |delay - (n*rep_period + t0)| <=
    tau_a contribute (clipped to the period).  Returns (indices, areas,
    bins_used) as arrays sorted by period index.
    """
    delays = h.delays()
    n_of_bin = np.round(delays / h.rep_period).astype(int)
    n_max = h.n_side_peaks()
    areas, used, idx = [], [], []
    for n in range(-n_max, n_max + 1):
        mask = n_of_bin == n
        if window is not None:
            tau_a, t0 = window
            mask = mask & (np.abs(delays - (n * h.rep_period + t0)) <= tau_a)
        idx.append(n)
        areas.append(float(h.counts[mask].sum()))
        used.append(int(mask.sum()))
    return np.array(idx), np.array(areas), np.array(used)


def _infer_duration(c: CountRates, mean_side_area: float, h: CoincidenceHistogram) -> float:
    # uncorrelated-peak identity: A_side = R1*R2*T_rep*T_meas
    denom = c.r1 * c.r2 * h.rep_period
    if denom <= 0.0:
        raise DomainError("cannot infer acquisition time from zero count rates")
    return mean_side_area / denom


def blink_corrected_reference(indices, areas, blink_far_peaks: int = 5):
    """Reference side-peak area with the intermittency envelope removed.

    Fits A(n) = A_inf * (1 - c*exp(-|n|/n_b)) to the side-peak areas and
    returns the asymptote A_inf; falls back to the mean of peaks with
    |n| >= blink_far_peaks when the fit is ill-conditioned (including the
    blink-free case where the envelope is flat).
    """
    if blink_far_peaks < 1:
        raise DomainError(f"blink_far_peaks {blink_far_peaks!r} < 1")
    side = indices != 0
    n_abs = np.abs(indices[side]).astype(float)
    a = areas[side]
    if len(a) == 0:
        raise DomainError("no side peaks available")
    far = a[np.abs(indices[side]) >= blink_far_peaks]
    fallback = float(np.mean(far)) if len(far) else float(np.mean(a))
    mean_a = float(np.mean(a))
    if mean_a <= 0.0:
        return fallback
    if float(np.std(a)) / mean_a < 1e-9 or len(np.unique(n_abs)) < 4:
        return fallback

    def envelope(n, a_inf, c, n_b):
        return a_inf * (1.0 - c * np.exp(-n / n_b))

    try:
        popt, pcov = curve_fit(
            envelope,
            n_abs,
            a,
            p0=(fallback, 0.1, 2.0),
            bounds=([0.0, -10.0, 0.05], [np.inf, 1.0, 100.0]),
            maxfev=5000,
        )
    except (RuntimeError, ValueError):
        return fallback
    a_inf = float(popt[0])
    if not np.all(np.isfinite(pcov)) or a_inf <= 0.0:
        return fallback
    # a flat or span-limited envelope leaves the asymptote unidentified
    if math.sqrt(abs(pcov[0][0])) > 0.3 * a_inf:
        return fallback
    return a_inf


def g2_zero(h: CoincidenceHistogram, c: CountRates, blink_far_peaks: int = 5) -> G2Result:
    """g2(0) from a coincidence histogram.

    Subtracts the expected per-bin dark-coincidence background, integrates
    the full central repetition period, and divides by the blinking-corrected
    reference side-peak area.  The quoted sigma propagates Poisson counting
    noise of the central and side areas.
    """
    return _g2_ratio(h, c, window=None, blink_far_peaks=blink_far_peaks)


def _g2_ratio(h, c, window, blink_far_peaks) -> G2Result:
    if h.n_side_peaks() < blink_far_peaks:
        raise DomainError(
            f"histogram spans only {h.n_side_peaks()} side peaks per side; "
            f"need at least {blink_far_peaks}"
        )
    if h.n_side_peaks() * 2 + 1 < MIN_PERIODS:
        raise DomainError(
            f"histogram must span at least {MIN_PERIODS} complete periods"
        )
    idx, raw_areas, bins_used = period_areas(h, window)

    bg_per_bin = 0.0
    cc_d = dark_coincidences(c)
    if cc_d > 0.0:
        duration = c.duration_s
        if duration is None:
            side_raw = raw_areas[idx != 0]
            duration = _infer_duration(c, float(np.mean(side_raw)), h)
        bg_per_bin = cc_d * h.bin_width * duration

    areas = raw_areas - bg_per_bin * bins_used
    clamped = bool(np.any(areas < 0.0))
    areas = np.maximum(areas, 0.0)

    central = float(areas[idx == 0][0])
    central_raw = float(raw_areas[idx == 0][0])
    reference = blink_corrected_reference(idx, areas, blink_far_peaks)
    if reference <= 0.0:
        raise DomainError("reference side-peak area is zero")

    side_raw_total = float(raw_areas[idx != 0].sum())
    n_side = int((idx != 0).sum())
    var_central = max(central_raw, 1.0)
    var_ref = max(side_raw_total, 1.0) / (n_side * n_side)
    value = central / reference
    sigma = math.sqrt(var_central / reference**2 + (central / reference**2) ** 2 * var_ref)
    return G2Result(
        value=value,
        sigma=sigma,
        central_area=central,
        reference_area=reference,
        clamped=clamped,
    )


# -- delimited-text histogram format ----------------------------------------


def write_histogram(h: CoincidenceHistogram, path) -> None:
    """Two columns (delay_s, counts) under a `# bin_width= rep_period=` header."""
    delays = h.delays()
    with open(path, "w") as fh:
        fh.write(f"# bin_width={float(h.bin_width)!r} rep_period={float(h.rep_period)!r}\n")
        for d, n in zip(delays, h.counts):
            fh.write(f"{float(d)!r}\t{int(n)}\n")


def read_histogram(path) -> CoincidenceHistogram:
    """Parse the delimited-text histogram format written by write_histogram."""
    with open(path) as fh:
        header = fh.readline()
        if not header.startswith("#"):
            raise ParseError(f"{path}: missing header line")
        fields = dict(
            item.split("=", 1) for item in header[1:].split() if "=" in item
        )
        try:
            bin_width = float(fields["bin_width"])
            rep_period = float(fields["rep_period"])
        except (KeyError, ValueError) as exc:
            raise ParseError(f"{path}: header must give bin_width and rep_period") from exc
        delays, counts = [], []
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ParseError(f"{path}:{lineno}: expected two columns")
            try:
                delays.append(float(parts[0]))
                counts.append(int(float(parts[1])))
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from exc
    if not delays:
        raise ParseError(f"{path}: no data rows")
    darr = np.asarray(delays)
    center = int(np.argmin(np.abs(darr)))
    return CoincidenceHistogram(
        bin_width=bin_width,
        rep_period=rep_period,
        counts=np.asarray(counts, dtype=np.int64),
        center_index=center,
    )
