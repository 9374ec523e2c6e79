"""Excitation-parameter grids and secure-key maps.

An excitation grid holds (detuning, power) -> (brightness, g2) measurements;
the map runs the full estimation pipeline per cell at a given channel length
and annotates the result with argmax markers (brightest cell, purest cell,
best SK cell) and equipotential contours at fixed fractions of the SK
maximum, extracted by marching squares on the rasterized grid.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ParseError, ValidationError
from .keyrate import ProtocolConfig, RateReport, rate_report
from .link_model import ChannelSpec, DetectionParams
from .photon_stats import SourceMeasurement, infer_stats

GRID_HEADER = ("detuning_nm", "power", "brightness", "g2")
CONTOUR_FRACTIONS = (0.99, 0.95, 0.90)
THREADS_ENV_VAR = "QDKEY_THREADS"


@dataclass(frozen=True)
class GridCell:
    detuning_nm: float
    power: float
    brightness: float
    g2: float


@dataclass(frozen=True)
class ExcitationGrid:
    cells: tuple[GridCell, ...]

    def __post_init__(self):
        seen = set()
        for cell in self.cells:
            key = (cell.detuning_nm, cell.power)
            if key in seen:
                raise ValidationError(f"duplicate grid key {key!r}")
            seen.add(key)

    def __len__(self):
        return len(self.cells)

    @property
    def detunings(self) -> np.ndarray:
        return np.array(sorted({c.detuning_nm for c in self.cells}))

    @property
    def powers(self) -> np.ndarray:
        return np.array(sorted({c.power for c in self.cells}))

    def rows_at_detuning(self, detuning_nm: float, atol: float = 1e-9):
        """(power, brightness, g2) rows at one detuning, sorted by power."""
        rows = [
            (c.power, c.brightness, c.g2)
            for c in self.cells
            if abs(c.detuning_nm - detuning_nm) <= atol
        ]
        if not rows:
            raise DomainError(f"no grid rows at detuning {detuning_nm!r}")
        return sorted(rows)


@dataclass(frozen=True)
class IngestReport:
    grid: ExcitationGrid
    n_rows: int
    rejected: tuple[tuple[int, str], ...]  # (line number, reason)


def _validate_cell(detuning, power, brightness, g2) -> str | None:
    if not all(math.isfinite(v) for v in (detuning, power, brightness, g2)):
        return "non-finite value"
    try:
        SourceMeasurement(brightness=brightness, g2=g2)
    except (DomainError, ValidationError) as exc:
        return str(exc)
    return None


def ingest_grid(path, strict: bool = False) -> IngestReport:
    """Read and validate an excitation grid file.

    Format: delimited text with header ``detuning_nm,power,brightness,g2``;
    commas or whitespace separate columns.  Malformed lines raise
    :class:`ParseError` with their line number.  Rows violating the source
    invariants are rejected into the report, or raise when ``strict``.
    """
    cells = []
    rejected = []
    seen = {}
    with open(path) as fh:
        header = fh.readline().strip().lower().replace(" ", "")
        cols = tuple(header.split(","))
        if cols != GRID_HEADER:
            raise ParseError(
                f"{path}:1: header must be {','.join(GRID_HEADER)!r}, got {header!r}"
            )
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.replace(",", " ").split()
            if len(parts) != 4:
                raise ParseError(f"{path}:{lineno}: expected 4 columns, got {len(parts)}")
            try:
                detuning, power, brightness, g2 = (float(p) for p in parts)
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from exc
            reason = _validate_cell(detuning, power, brightness, g2)
            if reason is None and (detuning, power) in seen:
                reason = f"duplicate key (first at line {seen[(detuning, power)]})"
            if reason is not None:
                rejected.append((lineno, reason))
                continue
            seen[(detuning, power)] = lineno
            cells.append(
                GridCell(detuning_nm=detuning, power=power, brightness=brightness, g2=g2)
            )
    if strict and rejected:
        listing = "; ".join(f"line {ln}: {why}" for ln, why in rejected)
        raise ValidationError(f"{path}: invalid rows: {listing}")
    return IngestReport(
        grid=ExcitationGrid(cells=tuple(cells)),
        n_rows=len(cells) + len(rejected),
        rejected=tuple(rejected),
    )


@dataclass(frozen=True)
class Marker:
    detuning_nm: float
    power: float
    i_detuning: int
    i_power: int


@dataclass(frozen=True, eq=False)
class SKMap:
    """Secure-key map over an excitation grid at one channel length.

    Arrays are indexed [i_power, i_detuning]; cells absent from a scattered
    grid hold NaN and an empty reason.
    """

    detunings: np.ndarray
    powers: np.ndarray
    sk: np.ndarray
    q_tot: np.ndarray
    e_tot: np.ndarray
    q1: np.ndarray
    e1: np.ndarray
    reason: np.ndarray
    brightness: np.ndarray
    g2: np.ndarray
    distance_km: float
    max_sk: float
    argmax_brightness: Marker
    argmax_purity: Marker
    argmax_sk: Marker
    contour_levels: tuple[float, ...]
    contours: dict = field(repr=False)


def _threads() -> int:
    try:
        return max(int(os.environ.get(THREADS_ENV_VAR, "1")), 1)
    except ValueError:
        return 1


def make_sk_map(
    grid: ExcitationGrid,
    det: DetectionParams,
    cfg: ProtocolConfig,
    distance_km: float,
    alpha: float = 0.17,
) -> SKMap:
    """Run the per-cell pipeline and assemble markers and contours."""
    if len(grid) == 0:
        raise DomainError("grid is empty")
    dets = grid.detunings
    pows = grid.powers
    nd, npow = len(dets), len(pows)
    d_index = {v: i for i, v in enumerate(dets)}
    p_index = {v: i for i, v in enumerate(pows)}

    shape = (npow, nd)
    sk = np.full(shape, np.nan)
    q_tot = np.full(shape, np.nan)
    e_tot = np.full(shape, np.nan)
    q1 = np.full(shape, np.nan)
    e1 = np.full(shape, np.nan)
    brightness = np.full(shape, np.nan)
    g2 = np.full(shape, np.nan)
    reason = np.full(shape, "", dtype=object)

    ch = ChannelSpec.from_length(distance_km, alpha)

    def cell_report(cell: GridCell) -> RateReport:
        stats = infer_stats(SourceMeasurement(cell.brightness, cell.g2))
        return rate_report(stats, ch, det, cfg)

    workers = _threads()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(cell_report, grid.cells))
    else:
        reports = [cell_report(c) for c in grid.cells]

    for cell, rep in zip(grid.cells, reports):
        i, j = p_index[cell.power], d_index[cell.detuning_nm]
        sk[i, j] = rep.sk
        q_tot[i, j] = rep.q_tot
        e_tot[i, j] = rep.e_tot
        q1[i, j] = rep.q1
        e1[i, j] = rep.e1
        reason[i, j] = rep.reason
        brightness[i, j] = cell.brightness
        g2[i, j] = cell.g2

    def argmax_marker(values: np.ndarray) -> Marker:
        flat = np.where(np.isnan(values), -np.inf, values)
        i, j = np.unravel_index(int(np.argmax(flat)), shape)
        return Marker(detuning_nm=float(dets[j]), power=float(pows[i]), i_detuning=int(j), i_power=int(i))

    max_sk = float(np.nanmax(sk))
    levels = tuple(frac * max_sk for frac in CONTOUR_FRACTIONS)
    contours = {
        frac: marching_squares(dets, pows, sk, level)
        for frac, level in zip(CONTOUR_FRACTIONS, levels)
    }
    return SKMap(
        detunings=dets,
        powers=pows,
        sk=sk,
        q_tot=q_tot,
        e_tot=e_tot,
        q1=q1,
        e1=e1,
        reason=reason,
        brightness=brightness,
        g2=g2,
        distance_km=distance_km,
        max_sk=max_sk,
        argmax_brightness=argmax_marker(brightness),
        argmax_purity=argmax_marker(-g2),
        argmax_sk=argmax_marker(sk),
        contour_levels=levels,
        contours=contours,
    )


# -- marching squares --------------------------------------------------------


def _interp(x0, x1, v0, v1, level):
    if v1 == v0:
        return 0.5 * (x0 + x1)
    t = (level - v0) / (v1 - v0)
    return x0 + t * (x1 - x0)


def marching_squares(xs: np.ndarray, ys: np.ndarray, values: np.ndarray, level: float):
    """Iso-level polylines of values[y, x] sampled at (xs, ys).

    Classic 16-case cell walk with linear edge interpolation; saddle cells
    are disambiguated by the cell-centre average.  Cells touching NaN are
    skipped.  Returns a list of (N, 2) arrays of (x, y) vertices; closed
    loops repeat their first vertex.
    """
    ny, nx = values.shape
    segments = []
    for i in range(ny - 1):
        for j in range(nx - 1):
            v = (
                values[i, j],
                values[i, j + 1],
                values[i + 1, j + 1],
                values[i + 1, j],
            )
            if any(map(math.isnan, v)):
                continue
            x0, x1 = xs[j], xs[j + 1]
            y0, y1 = ys[i], ys[i + 1]
            case = int(
                (v[0] >= level)
                | (v[1] >= level) << 1
                | (v[2] >= level) << 2
                | (v[3] >= level) << 3
            )
            if case in (0, 15):
                continue
            # edge midpoints: bottom(0-1), right(1-2), top(2-3... between
            # corners 3-2), left(0-3)
            bottom = (_interp(x0, x1, v[0], v[1], level), y0)
            right = (x1, _interp(y0, y1, v[1], v[2], level))
            top = (_interp(x0, x1, v[3], v[2], level), y1)
            left = (x0, _interp(y0, y1, v[0], v[3], level))
            lut = {
                1: [(left, bottom)],
                2: [(bottom, right)],
                3: [(left, right)],
                4: [(right, top)],
                6: [(bottom, top)],
                7: [(left, top)],
                8: [(top, left)],
                9: [(top, bottom)],
                11: [(top, right)],
                12: [(right, left)],
                13: [(right, bottom)],
                14: [(bottom, left)],
            }
            if case in (5, 10):
                center_above = sum(v) / 4.0 >= level
                if (case == 5) == center_above:
                    segs = [(left, top), (right, bottom)]
                else:
                    segs = [(left, bottom), (right, top)]
            else:
                segs = lut[case]
            segments.extend(segs)
    return _join_segments(segments)


def _join_segments(segments):
    """Chain shared-endpoint segments (undirected) into polylines."""

    def key(pt):
        return (round(pt[0], 12), round(pt[1], 12))

    # degenerate zero-length segments arise when the level passes exactly
    # through a grid node; they only corrupt the endpoint adjacency
    segments = [s for s in segments if key(s[0]) != key(s[1])]
    adjacency = {}
    for idx, (a, b) in enumerate(segments):
        adjacency.setdefault(key(a), []).append((idx, 0))
        adjacency.setdefault(key(b), []).append((idx, 1))
    used = [False] * len(segments)
    polylines = []
    for start in range(len(segments)):
        if used[start]:
            continue
        used[start] = True
        path = list(segments[start])
        for at_tail in (True, False):
            while key(path[0]) != key(path[-1]) or len(path) == 2:
                point = path[-1] if at_tail else path[0]
                candidates = [
                    (i, e) for i, e in adjacency.get(key(point), []) if not used[i]
                ]
                if not candidates:
                    break
                i, end = candidates[0]
                used[i] = True
                follow = segments[i][1 - end]
                if at_tail:
                    path.append(follow)
                else:
                    path.insert(0, follow)
        polylines.append(np.array(path))
    return polylines
