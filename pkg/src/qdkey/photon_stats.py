"""Photon-number statistics of a sub-Poissonian pulsed source.

The source is described by a truncated per-pulse photon-number distribution
{p0, p1, p2, p3} (four or more photons are assumed absent).  From the two
measurable quantities, brightness B and second-order autocorrelation g2(0),
an upper bound on the multi-photon probability is available in closed form,
which is tight when p3 = 0.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from .errors import DomainError, ValidationError

# |p0+p1+p2+p3 - 1| beyond this is an input error, not float noise.
NORM_TOL = 1e-12

# Below this value of B*g2 the closed form loses all significant digits to
# cancellation (numerator is O((B*g2)^2)); switch to the series expansion.
SERIES_SWITCH = 1e-6


@dataclass(frozen=True)
class PhotonStats:
    """Truncated photon-number distribution of one excitation pulse."""

    p0: float
    p1: float
    p2: float
    p3: float = 0.0

    def __post_init__(self):
        for name in ("p0", "p1", "p2", "p3"):
            p = getattr(self, name)
            if not math.isfinite(p) or p < -NORM_TOL or p > 1.0 + NORM_TOL:
                raise ValidationError(f"{name}={p!r} is not a probability")
        total = self.p0 + self.p1 + self.p2 + self.p3
        if abs(total - 1.0) > NORM_TOL:
            raise ValidationError(f"probabilities sum to {total!r}, not 1")

    @property
    def brightness(self) -> float:
        """Probability that the pulse delivers at least one photon."""
        return self.p1 + self.p2 + self.p3

    @property
    def p_m(self) -> float:
        """Multi-photon probability p2 + p3."""
        return self.p2 + self.p3

    @property
    def mean_photon_number(self) -> float:
        return self.p1 + 2.0 * self.p2 + 3.0 * self.p3


@dataclass(frozen=True)
class SourceMeasurement:
    """The two directly measurable source quantities.

    Attributes
    ----------
    brightness : float
        Probability per excitation pulse of emitting at least one photon.
    g2 : float
        Second-order autocorrelation at zero delay; must be sub-Poissonian
        (g2 < 1) and satisfy brightness*g2 < 1/2 so the multi-photon bound
        is defined.
    """

    brightness: float
    g2: float

    def __post_init__(self):
        if not (0.0 <= self.brightness <= 1.0):
            raise DomainError(f"brightness {self.brightness!r} outside [0, 1]")
        if not (0.0 <= self.g2 < 1.0):
            raise DomainError(f"g2 {self.g2!r} outside the sub-Poissonian range [0, 1)")
        if 2.0 * self.brightness * self.g2 >= 1.0:
            raise DomainError(
                f"brightness*g2 = {self.brightness * self.g2!r} >= 1/2; "
                "multi-photon bound undefined"
            )

    @property
    def purity(self) -> float:
        return 1.0 - self.g2


def bound_multi_photon(m: SourceMeasurement) -> float:
    """Upper bound on the multi-photon emission probability.

    Evaluates (1 - B*g2 - sqrt(1 - 2*B*g2)) / g2, switching to its
    second-order expansion B^2*g2/2 when B*g2 < SERIES_SWITCH to avoid
    catastrophic cancellation.  The result lies in [0, B] and is exact for
    sources with p3 = 0.
    """
    b, g2 = m.brightness, m.g2
    x = b * g2
    if x < SERIES_SWITCH:
        return b * b * g2 / 2.0
    return (1.0 - x - math.sqrt(1.0 - 2.0 * x)) / g2


def infer_stats(m: SourceMeasurement) -> PhotonStats:
    """Photon-number distribution consistent with (B, g2).

    Uses p0 = 1 - B and assigns the whole multi-photon bound to p2
    (the bound's tightness case), so p1 = B - p_m and p3 = 0.
    """
    pm = bound_multi_photon(m)
    p1 = m.brightness - pm
    if p1 < -NORM_TOL:
        raise ValidationError(
            f"multi-photon bound {pm!r} exceeds brightness {m.brightness!r}"
        )
    p1 = max(p1, 0.0)
    if p1 <= pm and pm > 0.0:
        warnings.warn(
            "single-photon probability does not dominate the multi-photon "
            f"bound (p1={p1:.3g} <= p_m={pm:.3g}); estimates may be loose",
            RuntimeWarning,
            stacklevel=2,
        )
    return PhotonStats(p0=1.0 - m.brightness, p1=p1, p2=pm, p3=0.0)


def g2_of_stats(s: PhotonStats) -> float:
    """Exact g2(0) of a truncated distribution.

    g2 = (2*p2 + 6*p3) / (p1 + 2*p2 + 3*p3)^2.  Serves as the brute-force
    oracle for the tightness of :func:`bound_multi_photon`.
    """
    mu = s.mean_photon_number
    if mu <= 0.0:
        raise DomainError("g2 undefined for a source with zero mean photon number")
    return (2.0 * s.p2 + 6.0 * s.p3) / (mu * mu)


def attenuate(s: PhotonStats, eta_att: float) -> PhotonStats:
    """Distribution after a beam splitter of transmission eta_att.

    Each photon survives independently with probability eta_att, with the
    multi-photon component treated as exactly two photons (requires p3 = 0).
    The multi-photon probability maps to p_m * eta_att^2 exactly, so
    attenuation never increases it, and the transform composes:
    attenuate(attenuate(s, a), b) == attenuate(s, a*b).
    """
    if not (0.0 <= eta_att <= 1.0):
        raise DomainError(f"eta_att {eta_att!r} outside [0, 1]")
    if s.p3 > NORM_TOL:
        raise DomainError("attenuation model assumes p3 = 0")
    pm = s.p_m
    p1 = s.p1 * eta_att + 2.0 * eta_att * (1.0 - eta_att) * pm
    pm_out = pm * eta_att * eta_att
    return PhotonStats(p0=1.0 - p1 - pm_out, p1=p1, p2=pm_out, p3=0.0)
