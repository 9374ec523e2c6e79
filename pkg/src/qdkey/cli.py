"""Command surface tying the library together.

Every command is a pure function of its input files, flags and seed.  Exit
codes: 0 success, 1 usage error, 2 parse/validation error, 3 no grid cell
clears the secure-key threshold.
"""
from __future__ import annotations

import sys

import click

from . import emit
from .correlation import CountRates, g2_zero, read_histogram
from .errors import DomainError, ParseError, ValidationError
from .gridmap import ingest_grid, make_sk_map
from .keyrate import Protocol, ProtocolConfig, rate_report
from .link_model import ChannelSpec, DetectionParams
from .mc_oracle import SimConfig, simulate
from .optimize import (
    distance_curve,
    max_distance,
    optimal_brightness,
    optimize_attenuation,
    rule_of_thumb,
)
from .photon_stats import SourceMeasurement, bound_multi_photon, infer_stats
from .timefilter import DecayModel, FilterWindow, filtered_brightness, filtered_dark

EXIT_USAGE = 1
EXIT_INVALID = 2
EXIT_INSECURE = 3

_shared = [
    click.option("--eta-d", default=0.86, show_default=True, help="Detector efficiency."),
    click.option("--y0", default=1.6e-6, show_default=True, help="Dark-count probability per pulse."),
    click.option("--e-d", default=0.02, show_default=True, help="Detection error probability."),
    click.option("--f", "f_ec", default=1.2, show_default=True, help="Error-correction inefficiency."),
    click.option("--alpha", default=0.17, show_default=True, help="Fiber attenuation (dB/km)."),
    click.option(
        "--protocol",
        type=click.Choice([p.value for p in Protocol]),
        default=Protocol.BB84_G2BOUND.value,
        show_default=True,
    ),
    click.option("--delta", default=1e-8, show_default=True, help="Secure-key threshold."),
]


def shared_options(fn):
    for opt in reversed(_shared):
        fn = opt(fn)
    return fn


def _det_cfg(eta_d, y0, e_d, f_ec, protocol, delta):
    det = DetectionParams(eta_d=eta_d, y0=y0, e_d=e_d)
    cfg = ProtocolConfig(protocol=Protocol(protocol), f=f_ec, delta=delta)
    return det, cfg


def _channel(distance_km, eta_ch, alpha):
    if eta_ch is not None:
        return ChannelSpec.from_transmission(eta_ch)
    return ChannelSpec.from_length(distance_km or 0.0, alpha)


@click.group()
def cli():
    """Secure-key modelling for single-photon-source BB84."""


@cli.command("infer-stats")
@click.option("--brightness", "-b", required=True, type=float)
@click.option("--g2", "-g", required=True, type=float)
def cmd_infer_stats(brightness, g2):
    """Photon-number distribution and multi-photon bound from (B, g2)."""
    m = SourceMeasurement(brightness=brightness, g2=g2)
    s = infer_stats(m)
    click.echo(f"p0={s.p0!r}")
    click.echo(f"p1={s.p1!r}")
    click.echo(f"p2={s.p2!r}")
    click.echo(f"p3={s.p3!r}")
    click.echo(f"p_m_bound={bound_multi_photon(m)!r}")


@cli.command("rate")
@click.option("--brightness", "-b", required=True, type=float)
@click.option("--g2", "-g", required=True, type=float)
@click.option("--distance-km", "-d", type=float, default=0.0, show_default=True)
@click.option("--eta-ch", type=float, default=None, help="Direct channel transmission (overrides distance).")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@shared_options
def cmd_rate(brightness, g2, distance_km, eta_ch, out, eta_d, y0, e_d, f_ec, alpha, protocol, delta):
    """Gain, error rates and secure key at one operating point."""
    det, cfg = _det_cfg(eta_d, y0, e_d, f_ec, protocol, delta)
    ch = _channel(distance_km, eta_ch, alpha)
    report = rate_report(infer_stats(SourceMeasurement(brightness, g2)), ch, det, cfg)
    if out:
        emit.write_report(report, det, cfg, alpha, out)
    for name in ("q_tot", "e_tot", "q1", "e1", "sk"):
        click.echo(f"{name}={getattr(report, name)!r}")
    click.echo(f"reason={report.reason}")


@cli.command("map")
@click.option("--grid", "grid_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--distance-km", "-d", type=float, default=0.0, show_default=True)
@click.option("--out", required=True, help="Output prefix; writes <out>.map.csv and <out>.contours.csv.")
@click.option("--figure", is_flag=True, help="Also write <out>.svg.")
@click.option(
    "--center-wavelength-nm",
    type=float,
    default=None,
    help="Transition wavelength; adds an energy-detuning presentation column.",
)
@shared_options
def cmd_map(grid_path, distance_km, out, figure, center_wavelength_nm, eta_d, y0, e_d, f_ec, alpha, protocol, delta):
    """Secure-key map over an excitation grid."""
    det, cfg = _det_cfg(eta_d, y0, e_d, f_ec, protocol, delta)
    report = ingest_grid(grid_path)
    for lineno, why in report.rejected:
        click.echo(f"rejected line {lineno}: {why}", err=True)
    if len(report.grid) == 0:
        raise ValidationError(f"{grid_path}: no valid rows")
    m = make_sk_map(report.grid, det, cfg, distance_km, alpha)
    emit.write_map(m, det, cfg, alpha, f"{out}.map.csv", center_wavelength_nm=center_wavelength_nm)
    emit.write_contours(m, f"{out}.contours.csv")
    if figure:
        emit.plot_map(m, f"{out}.svg")
    click.echo(f"cells={len(report.grid)} max_sk={m.max_sk!r}")
    click.echo(
        f"argmax_sk: detuning_nm={m.argmax_sk.detuning_nm} power={m.argmax_sk.power}"
    )
    if m.max_sk <= cfg.delta:
        click.echo("no cell above the secure-key threshold", err=True)
        sys.exit(EXIT_INSECURE)


@cli.command("curve")
@click.option("--brightness", "-b", required=True, type=float)
@click.option("--g2", "-g", required=True, type=float)
@click.option("--max-km", default=200.0, show_default=True)
@click.option("--step-km", default=1.0, show_default=True)
@click.option("--optimize-attenuation", "opt_att", is_flag=True)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--figure", is_flag=True, help="Also write <out>.svg.")
@shared_options
def cmd_curve(brightness, g2, max_km, step_km, opt_att, out, figure, eta_d, y0, e_d, f_ec, alpha, protocol, delta):
    """Secure key versus distance, optionally attenuation-optimized."""
    det, cfg = _det_cfg(eta_d, y0, e_d, f_ec, protocol, delta)
    s = infer_stats(SourceMeasurement(brightness, g2))
    n = int(max_km / step_km)
    lengths = [i * step_km for i in range(n + 1)]
    curve = distance_curve(s, det, cfg, alpha, lengths, optimize_att=opt_att)
    emit.write_curve(curve, det, cfg, alpha, out)
    if figure:
        emit.plot_curves([curve], ["SK"], f"{out}.svg")
    click.echo(f"points={len(curve.points)}")


@cli.command("optimize-attenuation")
@click.option("--brightness", "-b", required=True, type=float)
@click.option("--g2", "-g", required=True, type=float)
@click.option("--distance-km", "-d", type=float, default=0.0, show_default=True)
@shared_options
def cmd_opt_att(brightness, g2, distance_km, eta_d, y0, e_d, f_ec, alpha, protocol, delta):
    """Best sender attenuation at one distance."""
    det, cfg = _det_cfg(eta_d, y0, e_d, f_ec, protocol, delta)
    s = infer_stats(SourceMeasurement(brightness, g2))
    ch = ChannelSpec.from_length(distance_km, alpha)
    eta_opt, sk_opt = optimize_attenuation(s, ch, det, cfg)
    click.echo(f"eta_att_opt={eta_opt!r}")
    click.echo(f"sk_opt={sk_opt!r}")


@cli.command("max-distance")
@click.option("--brightness", "-b", required=True, type=float)
@click.option("--g2", "-g", required=True, type=float)
@click.option("--optimize-attenuation", "opt_att", is_flag=True)
@click.option("--rule-of-thumb", "rot", is_flag=True, help="Also print the closed-form estimate.")
@shared_options
def cmd_max_distance(brightness, g2, opt_att, rot, eta_d, y0, e_d, f_ec, alpha, protocol, delta):
    """Numeric maximum distance with SK above the threshold."""
    det, cfg = _det_cfg(eta_d, y0, e_d, f_ec, protocol, delta)
    m = SourceMeasurement(brightness, g2)
    result = max_distance(infer_stats(m), det, cfg, alpha, optimize_att=opt_att)
    click.echo(f"distance_km={result.distance_km!r}")
    click.echo(f"at_cap={result.at_cap}")
    if rot:
        eta_min, d_approx = rule_of_thumb(m, y0, alpha)
        click.echo(f"eta_ch_min={eta_min!r}")
        click.echo(f"d_approx_km={d_approx!r}")


@cli.command("optimal-brightness")
@click.option("--g2", "-g", required=True, type=float)
@shared_options
def cmd_optimal_brightness(g2, eta_d, y0, e_d, f_ec, alpha, protocol, delta):
    """Brightness maximizing the attainable distance at fixed g2."""
    det, cfg = _det_cfg(eta_d, y0, e_d, f_ec, protocol, delta)
    result = optimal_brightness(g2, det, cfg, alpha)
    click.echo(f"b_opt={result.brightness!r}")
    click.echo(f"distance_km={result.distance_km!r}")
    click.echo(f"at_floor={result.at_floor}")


@cli.command("time-filter")
@click.option("--brightness", "-b", type=float, default=None)
@click.option("--g2", "-g", type=float, default=None)
@click.option("--tau-ns", type=float, default=None, help="Acceptance window width (ns).")
@click.option("--lifetime-ns", default=1.07, show_default=True)
@click.option("--rep-mhz", default=75.95, show_default=True)
@click.option("--distance-km", "-d", type=float, default=0.0, show_default=True)
@click.option(
    "--compare-grid",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help="Excitation grid for the power-tuning vs time-filtering comparison.",
)
@click.option("--detuning", type=float, default=None, help="Fixed detuning row set for --compare-grid.")
@click.option("--max-km", default=220.0, show_default=True)
@click.option("--step-km", default=10.0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@shared_options
def cmd_time_filter(brightness, g2, tau_ns, lifetime_ns, rep_mhz, distance_km,
                    compare_grid, detuning, max_km, step_km, out,
                    eta_d, y0, e_d, f_ec, alpha, protocol, delta):
    """Filtered source parameters and secure key, or the strategy comparison."""
    det, cfg = _det_cfg(eta_d, y0, e_d, f_ec, protocol, delta)
    rep_period = 1.0 / (rep_mhz * 1e6)
    decay = DecayModel(lifetime=lifetime_ns * 1e-9)
    if compare_grid is not None:
        from .timefilter import compare_strategies

        if detuning is None:
            raise click.UsageError("--compare-grid requires --detuning")
        rows = ingest_grid(compare_grid).grid.rows_at_detuning(detuning)
        distances = [i * step_km for i in range(int(max_km / step_km) + 1)]
        comp = compare_strategies(rows, det, cfg, alpha, distances, decay, rep_period)
        if out:
            emit.write_comparison(comp, det, cfg, alpha, out)
        for pt in comp.points:
            click.echo(
                f"{pt.distance_km:g},{pt.sk_power!r},{pt.sk_filter!r},{pt.winner}"
            )
        click.echo(f"crossover_km={comp.crossover_km}")
        return
    if brightness is None or g2 is None or tau_ns is None:
        raise click.UsageError("time-filter needs --brightness, --g2 and --tau-ns")
    w = FilterWindow(tau_a=tau_ns * 1e-9, rep_period=rep_period)
    b_f = filtered_brightness(brightness, w, decay=decay)
    y0_f = filtered_dark(y0, w)
    det_f = DetectionParams(eta_d=eta_d, y0=y0_f, e_d=e_d)
    ch = ChannelSpec.from_length(distance_km, alpha)
    report = rate_report(infer_stats(SourceMeasurement(b_f, g2)), ch, det_f, cfg)
    click.echo(f"brightness_filtered={b_f!r}")
    click.echo(f"y0_filtered={y0_f!r}")
    click.echo(f"sk={report.sk!r}")
    click.echo(f"reason={report.reason}")


@cli.command("simulate")
@click.option("--brightness", "-b", required=True, type=float)
@click.option("--g2", "-g", required=True, type=float)
@click.option("--distance-km", "-d", type=float, default=0.0, show_default=True)
@click.option("--eta-ch", type=float, default=None)
@click.option("--pulses", "-n", default=1_000_000, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@shared_options
def cmd_simulate(brightness, g2, distance_km, eta_ch, pulses, seed, eta_d, y0, e_d, f_ec, alpha, protocol, delta):
    """Monte Carlo check of the analytic totals at one operating point."""
    from .link_model import totals

    det, cfg = _det_cfg(eta_d, y0, e_d, f_ec, protocol, delta)
    ch = _channel(distance_km, eta_ch, alpha)
    stats = infer_stats(SourceMeasurement(brightness, g2))
    result = simulate(SimConfig(n_pulses=pulses, seed=seed, stats=stats, ch=ch, det=det))
    q_tot, e_tot = totals(stats, ch, det)
    click.echo(f"q_hat={result.q_hat!r} sigma_q={result.sigma_q!r}")
    click.echo(f"e_hat={result.e_hat!r} sigma_e={result.sigma_e!r}")
    click.echo(f"q_tot_analytic={q_tot!r}")
    click.echo(f"e_tot_analytic={e_tot!r}")


@cli.command("g2")
@click.option("--histogram", "hist_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--r1", default=0.0, show_default=True, help="Detector 1 count rate (Hz).")
@click.option("--r2", default=0.0, show_default=True, help="Detector 2 count rate (Hz).")
@click.option("--r1-dark", default=0.0, show_default=True)
@click.option("--r2-dark", default=0.0, show_default=True)
@click.option("--duration-s", type=float, default=None, help="Acquisition time for background scaling.")
@click.option("--tau-ns", type=float, default=None, help="Optional post-selection window (ns).")
@click.option("--blink-far-peaks", default=5, show_default=True, type=int)
def cmd_g2(hist_path, r1, r2, r1_dark, r2_dark, duration_s, tau_ns, blink_far_peaks):
    """g2(0) from a coincidence histogram file."""
    from .timefilter import FilterWindow, filtered_g2

    h = read_histogram(hist_path)
    rates = CountRates(
        r1=r1, r2=r2, r1_dark=r1_dark, r2_dark=r2_dark, duration_s=duration_s,
        nu_rep=1.0 / h.rep_period,
    )
    if tau_ns is None:
        result = g2_zero(h, rates, blink_far_peaks=blink_far_peaks)
    else:
        w = FilterWindow(tau_a=tau_ns * 1e-9, rep_period=h.rep_period)
        result = filtered_g2(h, rates, w, blink_far_peaks=blink_far_peaks)
    click.echo(f"g2={result.value!r}")
    click.echo(f"sigma={result.sigma!r}")
    click.echo(f"central_area={result.central_area!r}")
    click.echo(f"reference_area={result.reference_area!r}")
    if result.clamped:
        click.echo("note: background subtraction clamped at zero", err=True)


def main(argv=None) -> int:
    """Entry point with the documented exit-code mapping."""
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Abort:
        return EXIT_USAGE
    except click.exceptions.UsageError as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        return EXIT_USAGE
    except (ParseError, ValidationError, DomainError) as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_INVALID
    except SystemExit as exc:
        return int(exc.code or 0)
    return 0


if __name__ == "__main__":
    sys.exit(main())
