"""Deterministic file emitters: schemas, provenance headers, byte identity."""

import numpy as np
import pytest

from qdkey import (
    DetectionParams,
    ExcitationGrid,
    GridCell,
    Protocol,
    ProtocolConfig,
    SourceMeasurement,
    distance_curve,
    infer_stats,
    make_sk_map,
    rate_report,
)
from qdkey import emit
from qdkey.link_model import ChannelSpec

DET = DetectionParams()
BB84 = ProtocolConfig(protocol=Protocol.BB84_G2BOUND)


def small_grid():
    cells = []
    for dt in (1.1, 1.5):
        for pw in (11.0, 22.0):
            cells.append(
                GridCell(
                    detuning_nm=dt,
                    power=pw,
                    brightness=0.02 + 0.002 * pw / 11,
                    g2=0.015 + 0.001 * pw / 11,
                )
            )
    return ExcitationGrid(cells=tuple(cells))


def test_map_file_deterministic_and_annotated(tmp_path):
    m = make_sk_map(small_grid(), DET, BB84, 50.0)
    p1 = tmp_path / "a.csv"
    p2 = tmp_path / "b.csv"
    emit.write_map(m, DET, BB84, 0.17, p1)
    emit.write_map(m, DET, BB84, 0.17, p2)
    assert p1.read_bytes() == p2.read_bytes()
    text = p1.read_text()
    for key in ("protocol=bb84", "eta_d=0.86", "y0=1.6e-06", "e_d=0.02", "f=1.2",
                "alpha_db_km=0.17", "delta=1e-08", "distance_km=50.0"):
        assert key in text, key
    header = [l for l in text.splitlines() if not l.startswith("#")][0]
    assert header == "detuning_nm,power,brightness,g2,q_tot,e_tot,q1,e1,sk,reason"


def test_curve_file_schema(tmp_path):
    s = infer_stats(SourceMeasurement(0.025, 0.018))
    curve = distance_curve(s, DET, BB84, 0.17, [0.0, 50.0, 100.0])
    path = tmp_path / "curve.csv"
    emit.write_curve(curve, DET, BB84, 0.17, path)
    lines = [l for l in path.read_text().splitlines() if not l.startswith("#")]
    assert lines[0] == "distance_km,sk,eta_att_opt,reason"
    assert len(lines) == 4
    first = lines[1].split(",")
    assert float(first[0]) == 0.0
    assert float(first[2]) == 1.0
    assert first[3] == "ok"


def test_report_file(tmp_path):
    r = rate_report(
        infer_stats(SourceMeasurement(0.025, 0.018)), ChannelSpec.from_length(0.0), DET, BB84
    )
    path = tmp_path / "report.txt"
    emit.write_report(r, DET, BB84, 0.17, path)
    text = path.read_text()
    assert f"sk={r.sk!r}" in text
    assert "reason=ok" in text


def test_contour_file(tmp_path):
    m = make_sk_map(small_grid(), DET, BB84, 0.0)
    path = tmp_path / "contours.csv"
    emit.write_contours(m, path)
    text = path.read_text()
    assert "fraction,x_detuning_nm,y_power" in text


def test_map_figure_renders(tmp_path):
    m = make_sk_map(small_grid(), DET, BB84, 0.0)
    path = tmp_path / "map.svg"
    emit.plot_map(m, str(path))
    assert path.exists()
    assert path.stat().st_size > 0


def test_curve_figure_renders(tmp_path):
    s = infer_stats(SourceMeasurement(0.025, 0.018))
    curve = distance_curve(s, DET, BB84, 0.17, np.linspace(0.0, 150.0, 16))
    path = tmp_path / "curve.svg"
    emit.plot_curves([curve], ["demo"], str(path))
    assert path.exists()


def test_map_file_energy_detuning_column(tmp_path):
    m = make_sk_map(small_grid(), DET, BB84, 0.0)
    path = tmp_path / "map.csv"
    emit.write_map(m, DET, BB84, 0.17, path, center_wavelength_nm=1550.0)
    lines = [l for l in path.read_text().splitlines() if not l.startswith("#")]
    assert lines[0].startswith("detuning_nm,detuning_mev,")
    first = lines[1].split(",")
    assert float(first[1]) == pytest.approx(
        emit.detuning_nm_to_mev(1.1, 1550.0), rel=1e-12
    )
    # 1.5 nm blue detuning at 1550 nm is ~0.8 meV; 1.1 nm scales accordingly
    assert 0.5 < float(first[1]) < 0.65


def test_comparison_file(tmp_path):
    from qdkey import DecayModel, compare_strategies

    rows = [(11.0, 0.02, 0.018), (22.0, 0.025, 0.03)]
    comp = compare_strategies(
        rows, DET, BB84, 0.17, [0.0, 100.0], DecayModel(), 1.0 / 75.95e6
    )
    path = tmp_path / "compare.csv"
    emit.write_comparison(comp, DET, BB84, 0.17, path)
    lines = [l for l in path.read_text().splitlines() if not l.startswith("#")]
    assert lines[0] == "distance_km,sk_power,power_at_opt,sk_filter,tau_a_at_opt,winner"
    assert len(lines) == 3
