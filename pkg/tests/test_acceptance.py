"""Acceptance gate: every criterion at its stated tolerance.

Each test prints one `ACCEPTANCE n [PASS|FAIL]` line (visible with -s or in
captured output).  Run the whole suite with:

    pytest tests/test_acceptance.py -v -s
"""
import math

import numpy as np

from qdkey import (
    ChannelSpec,
    DetectionParams,
    ExcitationGrid,
    FilterWindow,
    GridCell,
    PhotonStats,
    Protocol,
    ProtocolConfig,
    SimConfig,
    SourceMeasurement,
    attenuate,
    bb84_rate,
    bound_multi_photon,
    decoy_rate,
    filtered_dark,
    filtered_g2,
    g2_of_stats,
    g2_zero,
    infer_stats,
    make_sk_map,
    max_distance,
    optimal_brightness,
    optimize_attenuation,
    rate_report,
    rule_of_thumb,
    simulate,
    synth_histogram,
    totals,
)
from qdkey.correlation import CountRates

PAPER_DET = DetectionParams(eta_d=0.86, y0=1.6e-6, e_d=0.02)
BB84 = ProtocolConfig(protocol=Protocol.BB84_G2BOUND)
DECOY = ProtocolConfig(protocol=Protocol.BB84_DECOY2)
ALPHA = 0.17
NO_DARKS = CountRates(r1=0.0, r2=0.0)


def report(n: int, description: str, ok: bool, detail: str = ""):
    status = "PASS" if ok else "FAIL"
    print(f"ACCEPTANCE {n:2d} [{status}] {description}  {detail}")
    assert ok, f"criterion {n} failed: {description} {detail}"


def test_criterion_01_decoy_penalty_at_zero_distance():
    s = infer_stats(SourceMeasurement(0.025, 0.018))
    ch = ChannelSpec.from_length(0.0)
    ratio = bb84_rate(s, ch, PAPER_DET, BB84).sk / decoy_rate(s, ch, PAPER_DET, DECOY).sk
    report(
        1,
        "SK_BB84 / SK_decoy at d=0 in [2.5, 3.5]",
        2.5 <= ratio <= 3.5,
        f"ratio={ratio:.4f}",
    )


def test_criterion_02_time_filtered_dark_counts():
    w = FilterWindow(tau_a=0.2e-9, rep_period=1.0 / 75.95e6)
    y0f = filtered_dark(1.6e-6, w)
    ok = abs(y0f - 2.4e-8) / 2.4e-8 <= 0.05
    report(2, "Y0(tau_A=0.2 ns) = 2.4e-8 within 5%", ok, f"y0f={y0f:.4e}")


def test_criterion_03_rule_of_thumb_overestimation():
    results = []
    for g2 in (0.018, 0.03, 0.043):
        m = SourceMeasurement(0.025, g2)
        _, d_approx = rule_of_thumb(m, PAPER_DET.y0, ALPHA)
        d_num = max_distance(infer_stats(m), PAPER_DET, BB84, ALPHA).distance_km
        results.append((g2, d_approx - d_num))
    ok = all(20.0 <= over <= 40.0 for _, over in results)
    detail = " ".join(f"g2={g2}:{over:.1f}km" for g2, over in results)
    report(3, "rule-of-thumb overestimation in [20, 40] km", ok, detail)


def test_criterion_04_ideal_long_distance_brightness():
    det = DetectionParams(eta_d=0.86, y0=1e-7, e_d=0.02)
    result = optimal_brightness(0.02, det, BB84, ALPHA)
    ok = 0.006 <= result.brightness <= 0.012
    report(
        4,
        "optimal brightness in [0.6%, 1.2%] for Y0=1e-7, g2=0.02",
        ok,
        f"B_opt={result.brightness:.4%} d={result.distance_km:.1f}km",
    )


def test_criterion_05_three_region_envelope():
    s = infer_stats(SourceMeasurement(1.0, 0.043))
    transition = None
    for d in np.arange(40.0, 110.0, 2.5):
        ch = ChannelSpec.from_length(float(d), ALPHA)
        eta_opt, sk_opt = optimize_attenuation(s, ch, PAPER_DET, BB84)
        sk_full = rate_report(s, ch, PAPER_DET, BB84).sk
        if eta_opt < 0.999 and sk_opt > sk_full * (1 + 1e-6):
            transition = float(d)
            break
    end = max_distance(s, PAPER_DET, BB84, ALPHA, optimize_att=True).distance_km
    ok = transition is not None and 60.0 <= transition <= 90.0 and 155.0 <= end <= 185.0
    report(
        5,
        "eta_att=1 up to 75+-15 km; envelope ends at 170+-15 km",
        ok,
        f"transition={transition} end={end:.1f}",
    )


def test_criterion_06_bound_tightness_oracle():
    rng = np.random.default_rng(2024)
    n_tight = n_exceed = 0
    worst = 0.0
    while n_tight < 10_000:
        p1 = rng.uniform(1e-4, 0.9)
        p2 = rng.uniform(0.0, min(0.3 * p1, 1.0 - p1))
        s = PhotonStats(1.0 - p1 - p2, p1, p2, 0.0)
        g2 = g2_of_stats(s)
        if g2 >= 1.0 or s.brightness * g2 >= 0.4999:
            continue
        pm = bound_multi_photon(SourceMeasurement(s.brightness, g2))
        worst = max(worst, abs(pm - p2))
        n_tight += 1
    ok_tight = worst <= 1e-10
    while n_exceed < 2_000:
        p1 = rng.uniform(0.05, 0.8)
        p2 = rng.uniform(0.0, 0.1 * p1)
        p3 = rng.uniform(1e-6, 0.05 * p1)
        s = PhotonStats(1.0 - p1 - p2 - p3, p1, p2, p3)
        g2 = g2_of_stats(s)
        if g2 >= 1.0 or s.brightness * g2 >= 0.4999:
            continue
        if bound_multi_photon(SourceMeasurement(s.brightness, g2)) < s.p_m - 1e-12:
            report(6, "bound tightness oracle", False, f"bound below p_m at {s}")
        n_exceed += 1
    report(
        6,
        "bound == p2 within 1e-10 for p3=0 (1e4 samples); bound >= p_m for p3>0",
        ok_tight,
        f"worst |bound-p2|={worst:.2e}",
    )


def test_criterion_07_monte_carlo_agreement():
    rng = np.random.default_rng(77)
    n_points = 10
    n_pulses = 10_000_000
    worst_z = 0.0
    ok = True
    details = []
    for i in range(n_points):
        b = rng.uniform(0.01, 0.8)
        g2 = rng.uniform(0.002, min(0.45 / b, 0.25))
        s = infer_stats(SourceMeasurement(b, g2))
        det = DetectionParams(
            eta_d=rng.uniform(0.5, 0.95),
            y0=10.0 ** rng.uniform(-7, -5),
            e_d=rng.uniform(0.005, 0.1),
        )
        ch = ChannelSpec.from_transmission(10.0 ** rng.uniform(-3, 0))
        r = simulate(SimConfig(n_pulses=n_pulses, seed=1000 + i, stats=s, ch=ch, det=det))
        q_tot, e_tot = totals(s, ch, det)
        zq = abs(r.q_hat - q_tot) / r.sigma_q
        ze = abs(r.e_hat - e_tot) / r.sigma_e
        worst_z = max(worst_z, zq, ze)
        if zq > 3.0 or ze > 3.0:
            ok = False
            details.append(f"point {i}: zq={zq:.2f} ze={ze:.2f}")
    # attenuation equivalence at 3 points
    for i in range(3):
        b = rng.uniform(0.1, 0.5)
        s = infer_stats(SourceMeasurement(b, 0.05))
        eta_att = rng.uniform(0.2, 0.8)
        base = rng.uniform(0.2, 0.9)
        r1 = simulate(
            SimConfig(
                n_pulses=4_000_000,
                seed=2000 + i,
                stats=attenuate(s, eta_att),
                ch=ChannelSpec.from_transmission(base),
                det=PAPER_DET,
            )
        )
        r2 = simulate(
            SimConfig(
                n_pulses=4_000_000,
                seed=3000 + i,
                stats=s,
                ch=ChannelSpec.from_transmission(base * eta_att),
                det=PAPER_DET,
            )
        )
        zq = abs(r1.q_hat - r2.q_hat) / math.hypot(r1.sigma_q, r2.sigma_q)
        ze = abs(r1.e_hat - r2.e_hat) / math.hypot(r1.sigma_e, r2.sigma_e)
        worst_z = max(worst_z, zq, ze)
        if zq > 3.0 or ze > 3.0:
            ok = False
            details.append(f"equivalence {i}: zq={zq:.2f} ze={ze:.2f}")
    report(
        7,
        "MC (1e7 pulses) matches totals within 3 sigma at 10 points; "
        "attenuation equivalence at 3 points",
        ok,
        f"worst z={worst_z:.2f} {' '.join(details)}",
    )


def test_criterion_08_histogram_roundtrip():
    # Lifetime chosen so the exponential tail leaking past the period
    # boundary (exp(-T_rep/2T1)) sits far below the statistical resolution;
    # at 1.07 ns that leakage (~0.2%) is real stream physics the estimator
    # correctly reports, which is not the source's g2.
    lifetime = 0.4e-9
    ok = True
    details = []
    for g2_target in (0.0, 0.02, 0.1):
        b = 0.2
        p2 = g2_target * b * b / 2.0
        s = PhotonStats(1.0 - b, b - p2, p2, 0.0)
        cfg = SimConfig(
            n_pulses=800_000,
            seed=int(40 + 100 * g2_target),
            stats=s,
            ch=ChannelSpec.from_transmission(1.0),
            det=PAPER_DET,
            lifetime=lifetime,
        )
        h = synth_histogram(cfg)
        got = g2_zero(h, NO_DARKS)
        true = 0.0 if p2 == 0.0 else g2_of_stats(s)
        z = abs(got.value - true) / got.sigma
        if z > 3.0:
            ok = False
        details.append(f"g2={g2_target}: got {got.value:.4f}+-{got.sigma:.4f} (z={z:.2f})")
        w = FilterWindow(tau_a=h.rep_period, rep_period=h.rep_period)
        if filtered_g2(h, NO_DARKS, w).value != got.value:
            ok = False
            details.append(f"g2={g2_target}: full-window inequality")
    report(8, "synth histogram g2 recovery within 3 sigma; full window exact", ok, "; ".join(details))


def test_criterion_09_property_suites():
    rng = np.random.default_rng(99)
    worst_comp = 0.0
    for _ in range(1000):
        p1 = rng.uniform(1e-4, 0.9)
        p2 = rng.uniform(0.0, min(0.3 * p1, 1.0 - p1))
        s = PhotonStats(1.0 - p1 - p2, p1, p2, 0.0)
        a, b = rng.uniform(0.0, 1.0, size=2)
        two = attenuate(attenuate(s, a), b)
        one = attenuate(s, a * b)
        worst_comp = max(
            worst_comp,
            max(abs(getattr(two, f) - getattr(one, f)) for f in ("p0", "p1", "p2", "p3")),
        )
    ok_comp = worst_comp <= 1e-12

    ok_mono = True
    for _ in range(1000):
        b = rng.uniform(0.005, 1.0)
        g2 = rng.uniform(0.001, min(0.45 / b, 0.2))
        s = infer_stats(SourceMeasurement(b, g2))
        d1 = rng.uniform(0.0, 200.0)
        d2 = d1 + rng.uniform(0.1, 50.0)
        protocol = BB84 if rng.random() < 0.5 else DECOY
        sk1 = rate_report(s, ChannelSpec.from_length(d1, ALPHA), PAPER_DET, protocol).sk
        sk2 = rate_report(s, ChannelSpec.from_length(d2, ALPHA), PAPER_DET, protocol).sk
        if sk2 > sk1 + 1e-15:
            ok_mono = False
            break
    report(
        9,
        "composition law (1e3 cases, 1e-12) and SK distance monotonicity (1e3 cases)",
        ok_comp and ok_mono,
        f"worst composition residual={worst_comp:.2e}",
    )


def test_criterion_10_map_argmax_migration():
    cells = []
    for dt in np.linspace(0.6, 2.4, 13):
        for pw in np.linspace(1.0, 41.0, 13):
            b = 0.04 * math.exp(-(((dt - 1.5) / 0.65) ** 2) - (((pw - 28.0) / 16.0) ** 2))
            g2 = 0.012 + 0.09 * ((pw - 8.0) / 33.0) ** 2 + 0.03 * ((dt - 1.5) / 0.9) ** 2
            cells.append(
                GridCell(detuning_nm=float(dt), power=float(pw), brightness=b, g2=g2)
            )
    grid = ExcitationGrid(cells=tuple(cells))
    m0 = make_sk_map(grid, PAPER_DET, BB84, 0.0, ALPHA)
    m170 = make_sk_map(grid, PAPER_DET, BB84, 170.0, ALPHA)
    p_bright = m0.argmax_brightness.power
    p_pure = m0.argmax_purity.power
    starts_bright = m0.argmax_sk.power == p_bright
    migrated = m170.argmax_sk.power != p_bright and abs(
        m170.argmax_sk.power - p_pure
    ) < abs(p_bright - p_pure)
    report(
        10,
        "SK argmax starts in the brightness region and migrates toward purity by 170 km",
        starts_bright and migrated,
        f"power: d0={m0.argmax_sk.power:.1f} d170={m170.argmax_sk.power:.1f} "
        f"(B at {p_bright:.1f}, purity at {p_pure:.1f})",
    )
