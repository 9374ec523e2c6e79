"""Deterministic file emitters for maps, curves and reports.

Data files are delimited text with `# key=value` provenance headers listing
every detector and protocol parameter that entered the computation; given
identical inputs the bytes are identical.  Figures (SVG via matplotlib) are
optional companions, not part of the stable output contract.
"""
from __future__ import annotations

from .keyrate import ProtocolConfig, RateReport
from .link_model import DetectionParams
from .optimize import DistanceCurve
from .gridmap import SKMap
from .timefilter import StrategyComparison


def _fmt(x: float) -> str:
    return repr(float(x))


def _param_header(det: DetectionParams, cfg: ProtocolConfig, alpha: float, **extra) -> str:
    items = {
        "protocol": cfg.protocol.value,
        "eta_sif": cfg.eta_sif,
        "f": cfg.f,
        "delta": cfg.delta,
        "eta_d": det.eta_d,
        "y0": det.y0,
        "e_d": det.e_d,
        "e_0": det.e_0,
        "alpha_db_km": alpha,
    }
    items.update(extra)
    lines = [f"# {k}={v}" for k, v in items.items()]
    return "\n".join(lines) + "\n"


# hc in meV*nm, for the optional detuning energy axis
_HC_MEV_NM = 1239841.984


def detuning_nm_to_mev(detuning_nm: float, center_wavelength_nm: float) -> float:
    """Energy detuning of a laser blue-shifted by detuning_nm from the line."""
    return _HC_MEV_NM * detuning_nm / (
        center_wavelength_nm * (center_wavelength_nm - detuning_nm)
    )


def write_map(
    m: SKMap,
    det: DetectionParams,
    cfg: ProtocolConfig,
    alpha: float,
    path,
    center_wavelength_nm: float | None = None,
) -> None:
    """Map file: provenance header, marker lines, then one row per cell.

    With ``center_wavelength_nm`` an extra presentation column converts the
    wavelength detuning into an energy detuning.
    """
    with open(path, "w") as fh:
        extra = {}
        if center_wavelength_nm is not None:
            extra["center_wavelength_nm"] = center_wavelength_nm
        fh.write(
            _param_header(
                det, cfg, alpha, distance_km=m.distance_km, max_sk=m.max_sk, **extra
            )
        )
        for name, marker in (
            ("brightness", m.argmax_brightness),
            ("purity", m.argmax_purity),
            ("sk", m.argmax_sk),
        ):
            fh.write(
                f"# argmax_{name}: detuning_nm={marker.detuning_nm} power={marker.power}\n"
            )
        columns = "detuning_nm,power,brightness,g2,q_tot,e_tot,q1,e1,sk,reason"
        if center_wavelength_nm is not None:
            columns = "detuning_nm,detuning_mev," + columns.split(",", 1)[1]
        fh.write(columns + "\n")
        for i, power in enumerate(m.powers):
            for j, det_nm in enumerate(m.detunings):
                if m.reason[i, j] == "" and m.sk[i, j] != m.sk[i, j]:
                    continue  # absent cell of a scattered grid
                fields = [_fmt(det_nm)]
                if center_wavelength_nm is not None:
                    fields.append(_fmt(detuning_nm_to_mev(det_nm, center_wavelength_nm)))
                fields += [
                    _fmt(power),
                    _fmt(m.brightness[i, j]),
                    _fmt(m.g2[i, j]),
                    _fmt(m.q_tot[i, j]),
                    _fmt(m.e_tot[i, j]),
                    _fmt(m.q1[i, j]),
                    _fmt(m.e1[i, j]),
                    _fmt(m.sk[i, j]),
                    str(m.reason[i, j]),
                ]
                fh.write(",".join(fields) + "\n")


def write_contours(m: SKMap, path) -> None:
    """Contour polylines, one vertex per row, blank line between polylines."""
    with open(path, "w") as fh:
        fh.write(f"# contour_fractions={','.join(str(f) for f in m.contours)}\n")
        fh.write("fraction,x_detuning_nm,y_power\n")
        for frac, polylines in m.contours.items():
            for line in polylines:
                for x, y in line:
                    fh.write(f"{frac},{_fmt(x)},{_fmt(y)}\n")
                fh.write("\n")


def write_curve(
    curve: DistanceCurve, det: DetectionParams, cfg: ProtocolConfig, alpha: float, path
) -> None:
    with open(path, "w") as fh:
        fh.write(_param_header(det, cfg, alpha))
        fh.write("distance_km,sk,eta_att_opt,reason\n")
        for p in curve.points:
            fh.write(f"{_fmt(p.length_km)},{_fmt(p.sk)},{_fmt(p.eta_att_opt)},{p.reason}\n")


def write_report(
    r: RateReport, det: DetectionParams, cfg: ProtocolConfig, alpha: float, path
) -> None:
    with open(path, "w") as fh:
        fh.write(_param_header(det, cfg, alpha))
        for name in ("q_tot", "e_tot", "q1", "e1", "sk"):
            fh.write(f"{name}={_fmt(getattr(r, name))}\n")
        fh.write(f"reason={r.reason}\n")


def write_comparison(
    comparison: StrategyComparison,
    det: DetectionParams,
    cfg: ProtocolConfig,
    alpha: float,
    path,
) -> None:
    with open(path, "w") as fh:
        crossover = (
            _fmt(comparison.crossover_km) if comparison.crossover_km is not None else "none"
        )
        fh.write(_param_header(det, cfg, alpha, crossover_km=crossover))
        fh.write("distance_km,sk_power,power_at_opt,sk_filter,tau_a_at_opt,winner\n")
        for p in comparison.points:
            fh.write(
                f"{_fmt(p.distance_km)},{_fmt(p.sk_power)},{_fmt(p.power_at_opt)},"
                f"{_fmt(p.sk_filter)},{_fmt(p.tau_a_at_opt)},{p.winner}\n"
            )


# -- optional static figures -------------------------------------------------


def plot_map(m: SKMap, path) -> None:
    """Heatmap with contours and argmax markers (vector output)."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    mesh = ax.pcolormesh(m.detunings, m.powers, m.sk, shading="nearest", cmap="viridis")
    fig.colorbar(mesh, ax=ax, label="secure key bits / pulse")
    for polylines in m.contours.values():
        for line in polylines:
            ax.plot(line[:, 0], line[:, 1], color="white", linewidth=0.8)
    for marker, style, label in (
        (m.argmax_brightness, "o", "max B"),
        (m.argmax_purity, "s", "max purity"),
        (m.argmax_sk, "h", "max SK"),
    ):
        ax.plot(
            marker.detuning_nm, marker.power, style, mfc="none", mec="white", label=label
        )
    ax.legend(loc="upper right", fontsize=7)
    ax.set_xlabel("detuning (nm)")
    ax.set_ylabel("power")
    ax.set_title(f"SK map at {m.distance_km:g} km")
    fig.savefig(path, metadata={"Date": None} if str(path).endswith(".svg") else None)
    plt.close(fig)


def plot_curves(curves, labels, path) -> None:
    """Log-scale SK versus distance for one or more curves."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    for curve, label in zip(curves, labels):
        xs = [p.length_km for p in curve.points]
        ys = [p.sk for p in curve.points]
        ax.plot(xs, ys, label=label)
    ax.set_yscale("log")
    ax.set_xlabel("distance (km)")
    ax.set_ylabel("secure key bits / pulse")
    ax.legend(fontsize=8)
    fig.savefig(path, metadata={"Date": None} if str(path).endswith(".svg") else None)
    plt.close(fig)
