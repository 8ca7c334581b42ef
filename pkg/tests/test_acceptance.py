"""Acceptance suite: one test per release criterion, at paper scale.

Each test prints a single PASS/FAIL line with the measured quantity so the
whole gate can be read off the report.  Monte-Carlo criteria use
unit-modulus channel gains (the transmit-SNR convention keeps SNR as the
only knob, and 1/|gain|^2 under Rayleigh draws has no finite mean, which
would make pooled bound comparisons ill-posed).
"""

import time
from dataclasses import replace

import numpy as np
import pytest

from aerothz.channel import EvolutionRates, Scenario, SquintModel, random_links, scenario_links
from aerothz.config import ExperimentConfig, GeometryConfig, RoughConfig
from aerothz.constants import SPEED_OF_LIGHT
from aerothz.crlb import BoundInputs, crlb_angles, crlb_doppler, fim_numerical_check
from aerothz.esprit import SnapshotMatrix, tls_esprit_1d
from aerothz.estimators import (
    PipelineConfig,
    algorithm1_angles,
    algorithm2_doppler,
    make_pilot_plan,
    run_initial_estimation,
    snr_db_to_sigma,
    _make_module,
)
from aerothz.harness import (
    run_angle_rmse,
    run_smoke,
    run_throughput,
    stage_gamma_aligned,
    stage_gamma_angles,
    write_outputs,
)
from aerothz.manifold import VirtualAngles, make_geometry, upa_vector, upa_squint_vector
from aerothz.selection import make_pattern
from aerothz.stages import LinkGeometry
from aerothz.tracking import SessionConfig, run_data_session
from aerothz.ttdu import DelayModule, ideal_ttdu_vector

GEO = make_geometry(200, 200, 0.1e12, 1e9, 2048, 128)
LG = LinkGeometry(bs=GEO, ac=GEO)


def report(name: str, ok: bool, detail: str):
    print(f"\n[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


def draw(seed, off_deg=0.2, off_dop=0.0):
    rng = np.random.default_rng(seed)
    links = scenario_links(Scenario(), GEO, rng, unit_gain_modulus=True)
    plan = make_pilot_plan(GEO, links, rng, off_deg, off_dop)
    return rng, links, plan


def test_criterion_lemma1_exactness():
    """Ideal delay module at the true angles strips beam squint to 1e-12."""
    t0 = time.time()
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(4):
        va = VirtualAngles(rng.uniform(-2.7, 2.7), rng.uniform(-2.7, 2.7))
        for k in (1, 511, 1024, 2048):
            u = upa_vector(va, 64, 64) * upa_squint_vector(va, 64, 64, k, GEO)
            comp = ideal_ttdu_vector(va, 64, 64, k, GEO)
            worst = max(worst, float(np.max(np.abs(u * np.conj(comp) - upa_vector(va, 64, 64)))))
    dt = time.time() - t0
    report(
        "lemma1-exactness",
        worst < 1e-12 and dt < 1.0,
        f"max |compensated - squint-free| = {worst:.2e} on 64x64 ({dt:.2f} s)",
    )


def test_criterion_noiseless_pipeline_oracle():
    """Squint-free noiseless initial estimation recovers every parameter to
    relative error < 1e-6 in one trial within 5 s."""
    t0 = time.time()
    rng, links, plan = draw(1, off_deg=5.0, off_dop=0.0)
    cfg = PipelineConfig(ttdu_mode="none", i_max_bs=1, i_max_ac=1, i_max_do=0)
    rec = run_initial_estimation(LG, links, plan, cfg, rng, SquintModel.none())
    worst = 0.0
    for lp, est in zip(links, rec.links):
        for t, e in (
            (lp.theta_bs, est.theta_bs),
            (lp.phi_bs, est.phi_bs),
            (lp.theta_ac, est.theta_ac),
            (lp.phi_ac, est.phi_ac),
            (lp.psi_z, est.psi_z),
            (lp.tau, est.tau),
            (lp.alpha_bar, est.alpha_bar),
        ):
            worst = max(worst, abs(e - t) / abs(t))
    dt = time.time() - t0
    report(
        "noiseless-pipeline-oracle",
        worst < 1e-6 and dt < 5.0,
        f"worst relative error = {worst:.2e} ({dt:.2f} s)",
    )


def test_criterion_remark2_sparse_gain():
    """Closed-form CRLB ratio is exactly Omega^2; the empirical RMSE gain of
    Omega=4 over Omega=1 at matched mid-SNR lands within 20lg4 +- 1.5 dB."""
    t0 = time.time()
    # closed form, all else equal
    pilots = np.exp(1j * np.linspace(0, 2, 64))
    base = crlb_angles(
        BoundInputs(gamma=1.0, sigma_n2=1.0, pilots=pilots, grid=(5, 5), omega=1,
                    mu_bar=0.7, nu_bar=-0.4)
    )
    exact_ok = True
    for om in (2, 4, 16):
        got = crlb_angles(
            BoundInputs(gamma=1.0, sigma_n2=1.0, pilots=pilots, grid=(5, 5), omega=om,
                        mu_bar=0.7 * om, nu_bar=-0.4 * om)
        )
        exact_ok = exact_ok and abs(base[0] / got[0] - om**2) < 1e-9 * om**2

    snr_db = -10.0
    sq1, sq4 = [], []
    n_trials = 500
    model = SquintModel()
    for t in range(n_trials):
        rng, links, plan = draw(10_000 + t)
        for l, lp in enumerate(links):
            rough = plan.rough[l]
            mod_bs = DelayModule("ideal", rough.va_bs)
            mod_ac = DelayModule("ideal", rough.va_ac)
            pat1 = make_pattern(200, 200, 5, 5, 1)
            est1 = algorithm1_angles(
                "bs", LG, lp, mod_bs, mod_ac, pat1, rough.va_bs, rough.va_ac,
                plan.subcarrier_sets[l], plan.pilots[l], rough.psi_z, rough.va_bs,
                2, snr_db_to_sigma(snr_db), rng, model,
            )
            sq1.append((est1.theta - lp.theta_bs) ** 2)
            pat4 = make_pattern(200, 200, 5, 5, 4)
            est4 = algorithm1_angles(
                "bs", LG, lp, mod_bs, mod_ac, pat4, rough.va_bs, rough.va_ac,
                plan.subcarrier_sets[l], plan.pilots[l], rough.psi_z,
                VirtualAngles(est1.mu, est1.nu), 2, snr_db_to_sigma(snr_db), rng, model,
            )
            sq4.append((est4.theta - lp.theta_bs) ** 2)
    gain_db = 10.0 * np.log10(np.mean(sq1) / np.mean(sq4))
    target = 20.0 * np.log10(4.0)
    dt = time.time() - t0
    report(
        "remark2-sparse-gain",
        exact_ok and abs(gain_db - target) <= 1.5 and dt < 300,
        f"closed-form ratio exact: {exact_ok}; empirical gain {gain_db:.2f} dB "
        f"vs {target:.2f} +- 1.5 over {n_trials} trials ({dt:.0f} s)",
    )


def test_criterion_crlb_tightness_angles():
    """Algorithm 1 (i_max = 2, ideal module) theta RMSE within 3 dB of the
    bound at transmit SNR 0, 10 and 20 dB."""
    t0 = time.time()
    gaps = []
    model = SquintModel()
    for snr_db, n_trials in ((0.0, 500), (10.0, 250), (20.0, 250)):
        sq, cr = [], []
        for t in range(n_trials):
            rng, links, plan = draw(20_000 + t)
            for l, lp in enumerate(links):
                rough = plan.rough[l]
                mod_bs = DelayModule("ideal", rough.va_bs)
                mod_ac = DelayModule("ideal", rough.va_ac)
                pat = make_pattern(200, 200, 5, 5, 1)
                est = algorithm1_angles(
                    "bs", LG, lp, mod_bs, mod_ac, pat, rough.va_bs, rough.va_ac,
                    plan.subcarrier_sets[l], plan.pilots[l], rough.psi_z, rough.va_bs,
                    2, snr_db_to_sigma(snr_db), rng, model,
                )
                sq.append((est.theta - lp.theta_bs) ** 2)
                gamma = stage_gamma_angles(LG, lp, rough, pat, "bs")
                bi = BoundInputs(
                    gamma=gamma, sigma_n2=10.0 ** (-snr_db / 10.0), pilots=plan.pilots[l],
                    grid=(5, 5), mu_bar=lp.va_bs.mu, nu_bar=lp.va_bs.nu,
                )
                cr.append(crlb_angles(bi)[0])
        gaps.append(10.0 * np.log10(np.mean(sq) / np.mean(cr)))
    dt = time.time() - t0
    ok = all(abs(g) <= 3.0 for g in gaps)
    report(
        "crlb-tightness-angles",
        ok,
        "RMSE/bound gaps at {0,10,20} dB = "
        + ", ".join(f"{g:+.2f} dB" for g in gaps)
        + f" ({dt:.0f} s)",
    )


def test_criterion_squint_floor():
    """At SNR 10 dB, 1 GHz, 200x200: conventional no-module estimation shows
    at least 10x the angle RMSE of the grouped-module i_max=2 pipeline."""
    t0 = time.time()
    sq_none, sq_gt = [], []
    model = SquintModel()
    for t in range(200):
        rng, links, plan = draw(30_000 + t)
        for l, lp in enumerate(links):
            rough = plan.rough[l]
            pat = make_pattern(200, 200, 5, 5, 1)
            for mode, imax, acc in (("none", 1, sq_none), ("gttdu", 2, sq_gt)):
                mod_bs = _make_module(mode, rough.va_bs, (5, 5))
                mod_ac = _make_module(mode, rough.va_ac, (5, 5))
                est = algorithm1_angles(
                    "bs", LG, lp, mod_bs, mod_ac, pat, rough.va_bs, rough.va_ac,
                    plan.subcarrier_sets[l], plan.pilots[l], rough.psi_z, rough.va_bs,
                    imax, snr_db_to_sigma(10.0), rng, model,
                )
                acc.append((est.theta - lp.theta_bs) ** 2)
    ratio = np.sqrt(np.mean(sq_none) / np.mean(sq_gt))
    dt = time.time() - t0
    report(
        "squint-floor",
        ratio >= 10.0 and dt < 300,
        f"no-module RMSE / grouped-module RMSE = {ratio:.1f}x over 200 trials ({dt:.0f} s)",
    )


def test_criterion_doppler_low_snr_tightness():
    """Algorithm 2 (i_max = 2) within 3 dB of the Doppler bound at transmit
    SNR -60 dB, riding on the beam-alignment gain of fine angle estimates."""
    t0 = time.time()
    snr_db = -60.0
    sq, cr = [], []
    model = SquintModel()
    for t in range(200):
        rng, links, plan = draw(40_000 + t, off_dop=0.01)
        pc = PipelineConfig(
            ttdu_mode="gttdu", snr_angles_bs_db=0.0, snr_angles_ac_db=0.0,
            snr_doppler_db=None, snr_delay_db=None,
        )
        rec = run_initial_estimation(LG, links, plan, pc, rng, model)
        for l, lp in enumerate(links):
            est = rec.links[l]
            mod_bs = _make_module("gttdu", est.va_bs, (5, 5))
            mod_ac = _make_module("gttdu", est.va_ac, (5, 5))
            psi_hat, _ = algorithm2_doppler(
                LG, lp, mod_bs, mod_ac, est.va_ac, est.va_bs, plan.rough[l].psi_z,
                plan.subcarrier_sets[l], plan.pilots[l], 6, 2,
                snr_db_to_sigma(snr_db), rng, model,
            )
            sq.append((psi_hat - lp.psi_z) ** 2)
            bi = BoundInputs(
                gamma=stage_gamma_aligned(LG, lp, est.va_bs, est.va_ac),
                sigma_n2=10.0 ** (-snr_db / 10.0), pilots=plan.pilots[l], grid=6,
                nu_psi=2 * np.pi * lp.psi_z * GEO.t_sym, t_sym=GEO.t_sym,
            )
            cr.append(crlb_doppler(bi))
    gap = 10.0 * np.log10(np.mean(sq) / np.mean(cr))
    dt = time.time() - t0
    report(
        "doppler-low-snr-tightness",
        abs(gap) <= 3.0,
        f"RMSE {np.sqrt(np.mean(sq)):.2f} Hz vs bound {np.sqrt(np.mean(cr)):.2f} Hz, "
        f"gap {gap:+.2f} dB at -60 dB over 200 trials ({dt:.0f} s)",
    )


def test_criterion_delay_feasibility():
    """Across 1e4 random delays, the recovered rotation L*mu_tau never
    approaches the aliasing boundary: |omega| <= 2*pi*L*n_cp/K = 0.7854."""
    t0 = time.time()
    rng = np.random.default_rng(7)
    L = 2
    k_set = np.arange(1, GEO.K + 1, L)
    idx = k_set - 1
    bound = 2 * np.pi * L * GEO.n_cp / GEO.K
    assert bound == pytest.approx(0.7854, abs=1e-4)
    worst = 0.0
    for _ in range(10_000):
        tau = rng.uniform(0.0, GEO.n_cp * GEO.t_s)
        mu_tau = -2 * np.pi * GEO.f_s * tau / GEO.K
        col = np.exp(1j * idx * mu_tau)
        y = np.outer(col, np.exp(2j * np.pi * rng.uniform(size=2)))
        (om,) = tls_esprit_1d(SnapshotMatrix(y, idx.size), 1)
        worst = max(worst, abs(om))
    dt = time.time() - t0
    report(
        "delay-feasibility",
        worst <= bound + 1e-9 and worst < np.pi,
        f"max |omega| = {worst:.4f} <= {bound:.4f} < pi over 1e4 draws ({dt:.0f} s)",
    )


def test_criterion_throughput_shape():
    """With estimated CSI, grouped/ideal module throughput grows within 5
    percent of linear in occupied bandwidth while the no-module curve's
    final-quarter slope drops below half its initial-quarter slope."""
    t0 = time.time()
    cfg = ExperimentConfig(
        experiment="throughput", trials=8, seed=9, data_snr_db=-70.0, gain_modulus="unit",
        scenario_mode="random_angles",
        geometry=GeometryConfig(f_s=5e9),
        rough=RoughConfig(angle_offset_deg=0.2, doppler_offset_frac=0.0),
    )
    cfg = replace(cfg, sweep=replace(cfg.sweep, n_subcarriers=tuple(int(v) for v in np.linspace(256, 2048, 8))))
    recs = run_throughput(cfg)
    series = {}
    for r in recs:
        series.setdefault(r.series, []).append((r.n_subcarriers, r.value))
    stats = {}
    for name, pts in series.items():
        pts.sort()
        ns = np.array([p[0] for p in pts], dtype=float)
        th = np.array([p[1] for p in pts])
        q = len(ns) // 4
        slope_ratio = ((th[-1] - th[-1 - q]) / (ns[-1] - ns[-1 - q])) / (
            (th[q] - th[0]) / (ns[q] - ns[0])
        )
        lin = th[0] + (th[-1] - th[0]) * (ns - ns[0]) / (ns[-1] - ns[0])
        lin_dev = float(np.max(np.abs(th - lin)) / np.max(th))
        stats[name] = (slope_ratio, lin_dev)
    ok = (
        stats["ideal_ttdu"][1] <= 0.05
        and stats["gttdu"][1] <= 0.05
        and stats["no_ttdu"][0] < 0.5
    )
    dt = time.time() - t0
    report(
        "throughput-shape",
        ok,
        f"lin-dev ideal {stats['ideal_ttdu'][1]:.3f}, gttdu {stats['gttdu'][1]:.3f}; "
        f"no-module slope ratio {stats['no_ttdu'][0]:.3f} ({dt:.0f} s)",
    )


def test_criterion_dadd_tracking():
    """Noiseless drifting channel: decision-directed tracking holds the
    effective-channel NMSE under -40 dB for at least 10 TIs while the frozen
    initial estimate degrades monotonically."""
    t0 = time.time()
    rng, links, plan = draw(11, off_deg=5.0)
    pc = PipelineConfig(ttdu_mode="gttdu")
    model = SquintModel()
    rec = run_initial_estimation(LG, links, plan, pc, rng, model)
    rates = EvolutionRates.paper_defaults(links[0], GEO, n_c=20)
    scfg = SessionConfig(n_ti=12, n_c=20, snr_db=None, drift_sign=+1)
    res = run_data_session(LG, links, rec, rates, scfg, rng, model)
    tracked = res.nmse_tracked_db[:10]
    mono = bool(np.all(np.diff(res.nmse_frozen_db) > 0))
    ok = len(tracked) == 10 and max(tracked) < -40.0 and mono
    dt = time.time() - t0
    report(
        "dadd-tracking",
        ok,
        f"tracked NMSE max {max(tracked):.1f} dB over 10 TIs; frozen monotone: {mono} "
        f"(frozen {res.nmse_frozen_db[0]:.1f} -> {res.nmse_frozen_db[-1]:.1f} dB) ({dt:.0f} s)",
    )


def test_criterion_fim_cross_check():
    """Finite-difference Fisher information matches the closed form within
    1e-4 relative on a 3x3 grid."""
    t0 = time.time()
    bi = BoundInputs(
        gamma=1.5 * np.exp(0.3j), sigma_n2=0.01,
        pilots=np.exp(1j * np.linspace(0, 3, 64)), grid=(3, 3),
        mu_bar=0.7, nu_bar=-0.4,
    )
    dev = fim_numerical_check(bi)
    dt = time.time() - t0
    report("fim-cross-check", dev < 1e-4, f"max relative deviation {dev:.2e} ({dt:.1f} s)")


def test_criterion_determinism(tmp_path):
    """Identical config and seed produce byte-identical metrics.csv."""
    t0 = time.time()
    base = ExperimentConfig(
        experiment="angle_rmse", trials=2, seed=42, gain_modulus="unit",
        geometry=GeometryConfig(n_bs=(32, 32), n_ac=(32, 32), K=256, n_cp=16),
        rough=RoughConfig(angle_offset_deg=0.2, doppler_offset_frac=0.0),
        variants=({"label": "ideal_i2", "ttdu_mode": "ideal", "i_max": 2},),
    )
    base = replace(base, sweep=replace(base.sweep, snr_db=(0.0, 10.0)))
    blobs = []
    for sub in ("a", "b"):
        cfg = replace(base, out_dir=str(tmp_path / sub))
        recs = run_angle_rmse(cfg)
        blobs.append(write_outputs(recs, cfg).read_bytes())
    ok = blobs[0] == blobs[1]
    dt = time.time() - t0
    report("determinism", ok, f"two runs byte-identical: {ok} ({dt:.1f} s)")


def test_criterion_smoke_gate():
    """The CLI smoke gate passes (noiseless verification with exit status)."""
    cfg = ExperimentConfig(experiment="smoke", seed=1, out_dir="unused")
    records, ok = run_smoke(cfg)
    worst = max(r.value for r in records if r.metric.startswith("smoke_relerr"))
    report("smoke-gate", ok, f"worst relative error {worst:.2e}")
