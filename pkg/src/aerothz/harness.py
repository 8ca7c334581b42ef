"""Monte-Carlo experiment orchestration.

Each experiment kind reproduces one figure family: parameter RMSE vs SNR
with CRLB overlays, channel NMSE, spectral efficiency, throughput vs
occupied bandwidth, and tracking vs TI.  Trials are independent with
per-trial RNG streams derived from the master seed, so results are
deterministic regardless of execution order; outputs are a fixed-schema
``metrics.csv`` plus a ``config.json`` sidecar with every resolved knob and
interpretation flag.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .channel import EvolutionRates, LinkParams, Scenario, SquintModel, random_links, scenario_links
from .config import ExperimentConfig, config_to_dict
from .constants import SPEED_OF_LIGHT
from .crlb import BoundInputs, crlb_angles, crlb_delay, crlb_doppler
from .estimators import (
    EstimateRecord,
    PilotPlan,
    PipelineConfig,
    algorithm1_angles,
    algorithm2_doppler,
    make_pilot_plan,
    run_initial_estimation,
    pilot_aided_tracking,
    snr_db_to_sigma,
)
from .manifold import ArrayGeometry, VirtualAngles, make_geometry, steering_vector_1d
from .selection import make_pattern
from .stages import LinkGeometry, effective_channel_base
from .tracking import CodecSpec, SessionConfig, run_data_session
from .ttdu import DelayModule

CSV_COLUMNS = (
    "metric",
    "series",
    "snr_db",
    "omega",
    "f_s_hz",
    "ti",
    "n_subcarriers",
    "value",
    "trials",
    "variance",
)


@dataclass
class MetricRecord:
    """One aggregated measurement at one sweep coordinate."""

    metric: str
    value: float
    trials: int
    variance: float = 0.0
    series: str = ""
    snr_db: float | None = None
    omega: int | None = None
    f_s_hz: float | None = None
    ti: int | None = None
    n_subcarriers: int | None = None

    def row(self) -> list[str]:
        def fmt(v):
            if v is None or v == "":
                return ""
            if isinstance(v, str):
                return v
            if isinstance(v, (int, np.integer)):
                return str(int(v))
            return f"{float(v):.12g}"

        return [
            self.metric,
            self.series,
            fmt(self.snr_db),
            fmt(self.omega),
            fmt(self.f_s_hz),
            fmt(self.ti),
            fmt(self.n_subcarriers),
            fmt(self.value),
            str(self.trials),
            fmt(self.variance),
        ]


def write_outputs(records: list[MetricRecord], cfg: ExperimentConfig, extra_meta: dict | None = None):
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lines = [",".join(CSV_COLUMNS)]
    lines += [",".join(r.row()) for r in records]
    (out / "metrics.csv").write_text("\n".join(lines) + "\n")
    meta = {"config": config_to_dict(cfg), "interpretation": _interpretation_flags(cfg)}
    if extra_meta:
        meta.update(extra_meta)
    (out / "config.json").write_text(json.dumps(meta, indent=2, default=_json_default) + "\n")
    return out / "metrics.csv"


def _json_default(v):
    if isinstance(v, complex):
        return {"re": v.real, "im": v.imag}
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(f"not serializable: {type(v)}")


def _interpretation_flags(cfg: ExperimentConfig) -> dict:
    return {
        "heading_distribution": "uniform inside the center-to-BS ground sector",
        "group_center_rule": "ceil(m/2), lower-left candidate for even groups",
        "gttdu_flat_phase": "frequency-flat in-group deviations live in the beam weights",
        "interference_power": "expected power: sum of cross-gain magnitudes squared plus noise",
        "throughput_axis": "occupied subcarriers grow symmetrically from the band center at fixed K",
        "monitor_trigger": cfg.tracking.monitor_mode + "-links-exceed",
        "codec": "rate-1/2 convolutional (133,171) with hard Viterbi replaces Turbo coding",
        "uplink_delay_phase": "uplink frame timing assumed delay-compensated (per-column inert)",
        "crlb_averaging": "per-link bounds averaged over links and trials",
    }


# ---------------------------------------------------------------------------
# Shared per-trial plumbing
# ---------------------------------------------------------------------------


def build_geometries(cfg: ExperimentConfig, f_s: float | None = None) -> LinkGeometry:
    g = cfg.geometry
    fs = g.f_s if f_s is None else f_s
    return LinkGeometry(
        bs=make_geometry(*g.n_bs, g.f_z, fs, g.K, g.n_cp),
        ac=make_geometry(*g.n_ac, g.f_z, fs, g.K, g.n_cp),
    )


def draw_trial(cfg: ExperimentConfig, lg: LinkGeometry, trial: int):
    rng = np.random.default_rng([cfg.seed, trial])
    if cfg.scenario_mode == "geometric":
        links = scenario_links(
            cfg.scenario,
            lg.grid,
            rng,
            unit_gain_modulus=(cfg.gain_modulus == "unit"),
        )
    else:
        links = random_links(
            lg.grid,
            cfg.scenario.L,
            rng,
            v_max=cfg.scenario.v_ac,
            unit_gain_modulus=(cfg.gain_modulus == "unit"),
        )
    plan = make_pilot_plan(
        lg.grid, links, rng, cfg.rough.angle_offset_deg, cfg.rough.doppler_offset_frac
    )
    return rng, links, plan


def pipeline_cfg(cfg: ExperimentConfig, sweep_snr_db: float | None, **over) -> PipelineConfig:
    p = cfg.pipeline
    base = PipelineConfig(
        i_bs=p.i_bs,
        i_ac=p.i_ac,
        omega=p.omega,
        ttdu_mode=p.ttdu_mode,
        group_bs=p.group,
        group_ac=p.group,
        ttdu_basis=p.ttdu_basis,
        i_max_bs=p.i_max_bs,
        i_max_ac=p.i_max_ac,
        i_max_do=p.i_max_do,
        n_do=p.n_do,
        n_de=p.n_de,
        method=p.method,
        method_floor_db=p.method_floor_db,
        snr_angles_bs_db=cfg.stage_snr.resolve("angles_bs", sweep_snr_db),
        snr_angles_ac_db=cfg.stage_snr.resolve("angles_ac", sweep_snr_db),
        snr_doppler_db=cfg.stage_snr.resolve("doppler", sweep_snr_db),
        snr_delay_db=cfg.stage_snr.resolve("delay", sweep_snr_db),
    )
    return replace(base, **over) if over else base


def _dirichlet_gain(delta: float, m: int) -> complex:
    """sum_{x=0}^{m-1} e^{j x delta} / sqrt(m) (matched-filter axis gain)."""
    return np.sum(np.exp(1j * delta * np.arange(m))) / np.sqrt(m)


def stage_gamma_angles(
    lg: LinkGeometry, lp: LinkParams, plan_rough, pattern, side: str
) -> complex:
    """Effective gain of an angle stage: squint-free combined beam products
    with the rough-angle weights actually used by the stage."""
    if side == "bs":
        rx_geo, mu, nu = lg.bs, lp.va_bs, None
        d_rx_h = lp.va_bs.mu - plan_rough.va_bs.mu
        d_rx_v = lp.va_bs.nu - plan_rough.va_bs.nu
        d_tx_h = lp.va_ac.mu - plan_rough.va_ac.mu
        d_tx_v = lp.va_ac.nu - plan_rough.va_ac.nu
        tx_geo = lg.ac
    else:
        d_rx_h = lp.va_ac.mu - plan_rough.va_ac.mu
        d_rx_v = lp.va_ac.nu - plan_rough.va_ac.nu
        d_tx_h = lp.va_bs.mu - plan_rough.va_bs.mu
        d_tx_v = lp.va_bs.nu - plan_rough.va_bs.nu
        tx_geo = lg.bs
    rx = _dirichlet_gain(d_rx_h, pattern.sub_h) * _dirichlet_gain(d_rx_v, pattern.sub_v)
    tx = _dirichlet_gain(d_tx_h, tx_geo.n_h) * _dirichlet_gain(d_tx_v, tx_geo.n_v)
    if side == "ac":
        # BS transmit beam is unnormalized steering: scale back by sqrt(N)
        tx = tx * np.sqrt(tx_geo.n_h * tx_geo.n_v)
    return lp.alpha_bar * rx * tx


def stage_gamma_aligned(
    lg: LinkGeometry, lp: LinkParams, est_bs: VirtualAngles, est_ac: VirtualAngles
) -> complex:
    """Effective gain of the beam-aligned Doppler/delay stages."""
    rx = _dirichlet_gain(lp.va_ac.mu - est_ac.mu, lg.ac.n_h) * _dirichlet_gain(
        lp.va_ac.nu - est_ac.nu, lg.ac.n_v
    )
    tx = _dirichlet_gain(lp.va_bs.mu - est_bs.mu, lg.bs.n_h) * _dirichlet_gain(
        lp.va_bs.nu - est_bs.nu, lg.bs.n_v
    ) * np.sqrt(lg.bs.n_h * lg.bs.n_v)
    return lp.alpha_bar * rx * tx


# ---------------------------------------------------------------------------
# Metric helpers
# ---------------------------------------------------------------------------


def _axis_cross_sum(n: int, mu_a: float, mu_b: float, zetas: np.ndarray, squint: bool) -> np.ndarray:
    """(K,) inner products sum_x conj(a_b[x,k]) a_a[x,k] along one axis."""
    x = np.arange(n)
    if squint:
        phase = np.outer(x, (mu_a - mu_b) * (1.0 + zetas))
    else:
        phase = np.outer(x, np.full(zetas.shape, mu_a - mu_b))
    return np.exp(1j * phase).sum(axis=0)


def nmse_dl(
    lg: LinkGeometry,
    links: list[LinkParams],
    rec: EstimateRecord,
    model: SquintModel,
    symbol_index: int = 2,
) -> float:
    """Eq.-46-style NMSE of the raw DL channel at one OFDM symbol, computed
    through rank-1 identities (no dense matrices)."""
    geo = lg.grid
    ks = np.arange(1, geo.K + 1)
    zetas = np.asarray(geo.squint_ratio(ks), dtype=float)
    offsets = np.asarray(geo.subcarrier_offset(ks), dtype=float)
    n_ac = lg.ac.n_h * lg.ac.n_v
    n_bs = lg.bs.n_h * lg.bs.n_v
    total = 0.0
    for lp, est in zip(links, rec.links):
        c = lp.alpha_bar * np.exp(-2j * np.pi * offsets * lp.tau)
        psi_k = lp.psi_z + (lp.v / SPEED_OF_LIGHT * offsets if model.doppler else 0.0)
        c = c * np.exp(2j * np.pi * psi_k * (symbol_index - 1) * geo.t_sym)
        v_hat = est.psi_z * geo.lambda_z
        psi_hat_k = est.psi_z + (v_hat / SPEED_OF_LIGHT * offsets if model.doppler else 0.0)
        c_hat = est.alpha_bar * np.exp(-2j * np.pi * offsets * est.tau)
        c_hat = c_hat * np.exp(2j * np.pi * psi_hat_k * (symbol_index - 1) * geo.t_sym)
        uu = _axis_cross_sum(lg.ac.n_h, lp.va_ac.mu, est.mu_ac, zetas, model.beam) * _axis_cross_sum(
            lg.ac.n_v, lp.va_ac.nu, est.nu_ac, zetas, model.beam
        )
        ww = _axis_cross_sum(lg.bs.n_h, est.mu_bs, lp.va_bs.mu, zetas, model.beam) * _axis_cross_sum(
            lg.bs.n_v, est.nu_bs, lp.va_bs.nu, zetas, model.beam
        )
        h2 = np.abs(c) ** 2 * n_ac * n_bs
        hhat2 = np.abs(c_hat) ** 2 * n_ac * n_bs
        cross = 2.0 * np.real(np.conj(c_hat) * c * uu * ww)
        total += float(np.sum(h2 + hhat2 - cross) / np.sum(h2))
    return total / len(links)


def ase_and_throughput(
    h: np.ndarray,
    cross: np.ndarray,
    sigma_n2: float,
    f_s: float,
    K: int,
    n_occupied: int | None = None,
) -> tuple[float, float]:
    """Average spectral efficiency and throughput from per-subcarrier gains.

    ``h`` is (L, K) aligned gains, ``cross`` (L, L, K) leakage; the
    interference-plus-noise power is the expected power of independent
    unit-power data streams.  Throughput occupies ``n_occupied`` subcarriers
    symmetric about the band center with spacing f_s / K.
    """
    L, n_k = h.shape
    inter = np.sum(np.abs(cross) ** 2, axis=1)
    sinr = np.abs(h) ** 2 / (inter + sigma_n2)
    rate = np.log2(1.0 + sinr)
    ase = float(np.sum(rate.mean(axis=1)))
    if n_occupied is None:
        n_occupied = n_k
    center = K // 2
    order = np.argsort(np.abs(np.arange(n_k) - center), kind="stable")
    occ = order[:n_occupied]
    thr = float(f_s / K * np.sum(rate[:, occ]))
    return ase, thr


def data_stage_gains(
    lg: LinkGeometry, links: list[LinkParams], rec: EstimateRecord, model: SquintModel
) -> tuple[np.ndarray, np.ndarray]:
    """Aligned and cross gains (second OFDM symbol) with beams and modules
    from the estimate record."""
    from .tracking import _link_bases, _doppler_ramp

    h_base, cross = _link_bases(lg, links, rec, model)
    ramps = np.stack(
        [_doppler_ramp(lg, links[l], rec.links[l].psi_z, 2, model) for l in range(len(links))]
    )
    return h_base * ramps, cross * ramps[None, :, :]


def perfect_record(links: list[LinkParams], meta: dict | None = None) -> EstimateRecord:
    """Estimate record holding the true parameters (perfect-CSI reference)."""
    from .estimators import LinkEstimate

    out = []
    for lp in links:
        out.append(
            LinkEstimate(
                mu_bs=lp.va_bs.mu,
                nu_bs=lp.va_bs.nu,
                theta_bs=lp.theta_bs,
                phi_bs=lp.phi_bs,
                mu_ac=lp.va_ac.mu,
                nu_ac=lp.va_ac.nu,
                theta_ac=lp.theta_ac,
                phi_ac=lp.phi_ac,
                psi_z=lp.psi_z,
                tau=lp.tau,
                alpha_bar=lp.alpha_bar,
            )
        )
    return EstimateRecord(links=out, meta=meta or {"ttdu_mode": "none"})


# ---------------------------------------------------------------------------
# Aggregation
# ---------------------------------------------------------------------------


class RunningStats:
    """Mean/variance accumulator over per-trial scalars."""

    def __init__(self):
        self.values = []

    def add(self, v: float):
        self.values.append(float(v))

    @property
    def n(self) -> int:
        return len(self.values)

    @property
    def mean(self) -> float:
        return float(np.mean(self.values)) if self.values else float("nan")

    @property
    def var(self) -> float:
        return float(np.var(self.values, ddof=1)) if len(self.values) > 1 else 0.0


def _run_trials(worker, n_trials: int, n_workers: int):
    """Run trial-indexed work deterministically, optionally in processes."""
    if n_workers <= 1:
        return [worker(t) for t in range(n_trials)]
    with ProcessPoolExecutor(max_workers=n_workers) as pool:
        return list(pool.map(worker, range(n_trials)))


# ---------------------------------------------------------------------------
# Experiments
# ---------------------------------------------------------------------------


DEFAULT_ANGLE_VARIANTS = (
    {"label": "conventional_no_ttdu", "ttdu_mode": "none", "i_max": 1, "omega": 1},
    {"label": "gttdu_i1", "ttdu_mode": "gttdu", "i_max": 1, "omega": 1},
    {"label": "gttdu_i2", "ttdu_mode": "gttdu", "i_max": 2, "omega": 1},
    {"label": "ideal_ttdu_i2", "ttdu_mode": "ideal", "i_max": 2, "omega": 1},
)


def _angle_trial(cfg: ExperimentConfig, snr_db: float, variants, trial: int):
    lg = build_geometries(cfg)
    rng, links, plan = draw_trial(cfg, lg, trial)
    side = cfg.side
    out = {}
    crlb_th = crlb_ph = 0.0
    for l, lp in enumerate(links):
        pattern = make_pattern(
            *( (lg.bs.n_h, lg.bs.n_v) if side == "bs" else (lg.ac.n_h, lg.ac.n_v) ),
            *(cfg.pipeline.i_bs if side == "bs" else cfg.pipeline.i_ac),
            1,
        )
        gamma = stage_gamma_angles(lg, lp, plan.rough[l], pattern, side)
        va = lp.va_bs if side == "bs" else lp.va_ac
        theta = lp.theta_bs if side == "bs" else lp.theta_ac
        bi = BoundInputs(
            gamma=gamma,
            sigma_n2=10.0 ** (-snr_db / 10.0),
            pilots=plan.pilots[l],
            grid=(pattern.i_h, pattern.i_v),
            omega=1,
            mu_bar=va.mu,
            nu_bar=va.nu,
        )
        c_th, c_ph = crlb_angles(bi)
        crlb_th += c_th / len(links)
        crlb_ph += c_ph / len(links)
    out["crlb_theta"] = crlb_th
    out["crlb_phi"] = crlb_ph

    for var in variants:
        pc = pipeline_cfg(
            cfg,
            snr_db,
            ttdu_mode=var.get("ttdu_mode", cfg.pipeline.ttdu_mode),
            ttdu_basis=var.get("ttdu_basis", cfg.pipeline.ttdu_basis),
            i_max_bs=var.get("i_max", cfg.pipeline.i_max_bs),
            i_max_ac=var.get("i_max", cfg.pipeline.i_max_ac),
            omega=var.get("omega", 1),
            snr_angles_bs_db=snr_db,
            snr_angles_ac_db=snr_db,
        )
        sq_th = sq_ph = 0.0
        for l, lp in enumerate(links):
            err_th, err_ph = _one_side_angle_error(lg, lp, plan, l, pc, side, rng, cfg.squint)
            sq_th += err_th**2 / len(links)
            sq_ph += err_ph**2 / len(links)
        out[f"{var['label']}::theta"] = sq_th
        out[f"{var['label']}::phi"] = sq_ph
    return out


def _one_side_angle_error(lg, lp, plan: PilotPlan, l: int, pc: PipelineConfig, side, rng, model):
    """Angle stage for one link/side; sparse runs use a dense pass as prior."""
    from .estimators import _make_module

    rough = plan.rough[l]
    mod_bs = _make_module(pc.ttdu_mode, lp.va_bs if pc.ttdu_basis == "true" else rough.va_bs, pc.group_bs)
    mod_ac = _make_module(pc.ttdu_mode, lp.va_ac if pc.ttdu_basis == "true" else rough.va_ac, pc.group_ac)
    geo_sel = lg.bs if side == "bs" else lg.ac
    i_dims = pc.i_bs if side == "bs" else pc.i_ac
    sigma = snr_db_to_sigma(pc.snr_angles_bs_db if side == "bs" else pc.snr_angles_ac_db)
    k_set, pilots = plan.subcarrier_sets[l], plan.pilots[l]
    va_w = rough.va_bs if side == "bs" else rough.va_ac
    va_o = rough.va_ac if side == "bs" else rough.va_bs
    i_max = pc.i_max_bs if side == "bs" else pc.i_max_ac
    prior = va_w
    if pc.omega > 1:
        dense = make_pattern(geo_sel.n_h, geo_sel.n_v, *i_dims, 1)
        est0 = algorithm1_angles(
            side, lg, lp, mod_bs, mod_ac, dense, va_w, va_o, k_set, pilots,
            rough.psi_z, prior, i_max, sigma, rng, model,
        )
        prior = VirtualAngles(est0.mu, est0.nu)
    pattern = make_pattern(geo_sel.n_h, geo_sel.n_v, *i_dims, pc.omega)
    est = algorithm1_angles(
        side, lg, lp, mod_bs, mod_ac, pattern, va_w, va_o, k_set, pilots,
        rough.psi_z, prior, i_max, sigma, rng, model,
    )
    truth_th = lp.theta_bs if side == "bs" else lp.theta_ac
    truth_ph = lp.phi_bs if side == "bs" else lp.phi_ac
    return est.theta - truth_th, est.phi - truth_ph


def run_angle_rmse(cfg: ExperimentConfig) -> list[MetricRecord]:
    variants = [dict(v) for v in (cfg.variants or DEFAULT_ANGLE_VARIANTS)]
    records = []
    side = cfg.side
    for snr_db in cfg.sweep.snr_db:
        stats = {k: RunningStats() for v in variants for k in (f"{v['label']}::theta", f"{v['label']}::phi")}
        stats["crlb_theta"] = RunningStats()
        stats["crlb_phi"] = RunningStats()
        res = _run_trials(partial(_angle_trial, cfg, snr_db, variants), cfg.trials, cfg.n_workers)
        for r in res:
            for k, v in r.items():
                stats[k].add(v)
        for var in variants:
            lbl = var["label"]
            om = var.get("omega", 1)
            for ang in ("theta", "phi"):
                st = stats[f"{lbl}::{ang}"]
                records.append(
                    MetricRecord(
                        metric=f"rmse_{ang}_{side}",
                        series=lbl,
                        snr_db=snr_db,
                        omega=om,
                        value=float(np.sqrt(st.mean)),
                        trials=st.n,
                        variance=st.var,
                    )
                )
        for ang in ("theta", "phi"):
            st = stats[f"crlb_{ang}"]
            records.append(
                MetricRecord(
                    metric=f"crlb_{ang}_{side}",
                    series="crlb",
                    snr_db=snr_db,
                    omega=1,
                    value=float(np.sqrt(st.mean)),
                    trials=st.n,
                    variance=st.var,
                )
            )
    return records


def _doppler_trial(cfg: ExperimentConfig, snr_db: float, variants, trial: int):
    lg = build_geometries(cfg)
    rng, links, plan = draw_trial(cfg, lg, trial)
    pc0 = pipeline_cfg(cfg, snr_db)
    rec = run_initial_estimation(
        lg, links, plan, replace(pc0, snr_doppler_db=None, snr_delay_db=None), rng, cfg.squint
    )
    out = {}
    crlb_sum = 0.0
    geo = lg.grid
    for l, lp in enumerate(links):
        est = rec.links[l]
        gamma = stage_gamma_aligned(lg, lp, est.va_bs, est.va_ac)
        bi = BoundInputs(
            gamma=gamma,
            sigma_n2=10.0 ** (-snr_db / 10.0),
            pilots=plan.pilots[l],
            grid=cfg.pipeline.n_do,
            nu_psi=2.0 * np.pi * lp.psi_z * geo.t_sym,
            t_sym=geo.t_sym,
        )
        crlb_sum += crlb_doppler(bi) / len(links)
    out["crlb_psi"] = crlb_sum
    sigma = snr_db_to_sigma(snr_db)
    for var in variants:
        model = SquintModel(beam=cfg.squint.beam, doppler=var.get("doppler_squint", True))
        sq = 0.0
        for l, lp in enumerate(links):
            est = rec.links[l]
            from .estimators import _make_module

            mod_bs = _make_module(cfg.pipeline.ttdu_mode, est.va_bs, cfg.pipeline.group)
            mod_ac = _make_module(cfg.pipeline.ttdu_mode, est.va_ac, cfg.pipeline.group)
            psi_hat, _ = algorithm2_doppler(
                lg, lp, mod_bs, mod_ac, est.va_ac, est.va_bs, plan.rough[l].psi_z,
                plan.subcarrier_sets[l], plan.pilots[l], cfg.pipeline.n_do,
                var.get("i_max", cfg.pipeline.i_max_do), sigma, rng, model,
            )
            sq += (psi_hat - lp.psi_z) ** 2 / len(links)
        out[var["label"]] = sq
    return out


DEFAULT_DOPPLER_VARIANTS = (
    {"label": "alg2_i0", "i_max": 0},
    {"label": "alg2_i1", "i_max": 1},
    {"label": "alg2_i2", "i_max": 2},
    {"label": "no_doppler_squint", "i_max": 0, "doppler_squint": False},
)


def run_doppler_rmse(cfg: ExperimentConfig) -> list[MetricRecord]:
    variants = [dict(v) for v in (cfg.variants or DEFAULT_DOPPLER_VARIANTS)]
    records = []
    for snr_db in cfg.sweep.snr_db:
        stats = {v["label"]: RunningStats() for v in variants}
        stats["crlb_psi"] = RunningStats()
        for r in _run_trials(partial(_doppler_trial, cfg, snr_db, variants), cfg.trials, cfg.n_workers):
            for k, v in r.items():
                stats[k].add(v)
        for v in variants:
            st = stats[v["label"]]
            records.append(
                MetricRecord(
                    metric="rmse_psi_z",
                    series=v["label"],
                    snr_db=snr_db,
                    value=float(np.sqrt(st.mean)),
                    trials=st.n,
                    variance=st.var,
                )
            )
        st = stats["crlb_psi"]
        records.append(
            MetricRecord(
                metric="crlb_psi_z",
                series="crlb",
                snr_db=snr_db,
                value=float(np.sqrt(st.mean)),
                trials=st.n,
                variance=st.var,
            )
        )
    return records


def _delay_trial(cfg: ExperimentConfig, snr_db: float, variants, trial: int):
    lg = build_geometries(cfg)
    rng, links, plan = draw_trial(cfg, lg, trial)
    geo = lg.grid
    out = {}
    for var in variants:
        model = SquintModel.none() if var.get("no_squint") else cfg.squint
        pc = pipeline_cfg(cfg, snr_db, snr_delay_db=snr_db)
        rec = run_initial_estimation(lg, links, plan, pc, rng, model)
        sq = 0.0
        for lp, est in zip(links, rec.links):
            sq += (geo.f_s * (est.tau - lp.tau)) ** 2 / len(links)
        out[var["label"]] = sq
    crlb_sum = 0.0
    pc = pipeline_cfg(cfg, snr_db)
    rec = run_initial_estimation(
        lg, links, plan, replace(pc, snr_delay_db=None), rng, cfg.squint
    )
    for l, lp in enumerate(links):
        est = rec.links[l]
        gamma = stage_gamma_aligned(lg, lp, est.va_bs, est.va_ac)
        bi = BoundInputs(
            gamma=gamma,
            sigma_n2=10.0 ** (-snr_db / 10.0),
            pilots=np.ones(cfg.pipeline.n_de),
            grid=plan.subcarrier_sets[l],
            mu_tau=-2.0 * np.pi * geo.f_s * lp.tau / geo.K,
            n_fft=geo.K,
        )
        crlb_sum += crlb_delay(bi) / len(links)
    out["crlb_tau"] = crlb_sum
    return out


DEFAULT_DELAY_VARIANTS = (
    {"label": "triple_squint"},
    {"label": "no_triple_squint", "no_squint": True},
)


def run_delay_rmse(cfg: ExperimentConfig) -> list[MetricRecord]:
    variants = [dict(v) for v in (cfg.variants or DEFAULT_DELAY_VARIANTS)]
    records = []
    for snr_db in cfg.sweep.snr_db:
        stats = {v["label"]: RunningStats() for v in variants}
        stats["crlb_tau"] = RunningStats()
        for r in _run_trials(partial(_delay_trial, cfg, snr_db, variants), cfg.trials, cfg.n_workers):
            for k, v in r.items():
                stats[k].add(v)
        for v in variants:
            st = stats[v["label"]]
            records.append(
                MetricRecord(
                    metric="rmse_tau_norm",
                    series=v["label"],
                    snr_db=snr_db,
                    value=float(np.sqrt(st.mean)),
                    trials=st.n,
                    variance=st.var,
                )
            )
        st = stats["crlb_tau"]
        records.append(
            MetricRecord(
                metric="crlb_tau_norm",
                series="crlb",
                snr_db=snr_db,
                value=float(np.sqrt(st.mean)),
                trials=st.n,
                variance=st.var,
            )
        )
    return records


def _nmse_trial(cfg: ExperimentConfig, snr_db: float, f_s: float, trial: int):
    lg = build_geometries(cfg, f_s)
    rng, links, plan = draw_trial(cfg, lg, trial)
    pc = pipeline_cfg(cfg, snr_db)
    rec = run_initial_estimation(lg, links, plan, pc, rng, cfg.squint)
    return nmse_dl(lg, links, rec, cfg.squint)


def run_nmse(cfg: ExperimentConfig) -> list[MetricRecord]:
    records = []
    f_s_list = cfg.sweep.f_s or (cfg.geometry.f_s,)
    for f_s in f_s_list:
        for snr_db in cfg.sweep.snr_db:
            st = RunningStats()
            for v in _run_trials(partial(_nmse_trial, cfg, snr_db, f_s), cfg.trials, cfg.n_workers):
                st.add(v)
            records.append(
                MetricRecord(
                    metric="nmse_h_dl",
                    series=f"fs_{f_s:g}",
                    snr_db=snr_db,
                    f_s_hz=f_s,
                    value=10.0 * np.log10(max(st.mean, 1e-300)),
                    trials=st.n,
                    variance=st.var,
                )
            )
    return records


def _ase_trial(cfg: ExperimentConfig, snr_db: float, series: str, trial: int):
    lg = build_geometries(cfg)
    rng, links, plan = draw_trial(cfg, lg, trial)
    model = SquintModel.none() if series.endswith("no_squint") else cfg.squint
    if series.startswith("perfect"):
        rec = perfect_record(links, {"ttdu_mode": cfg.pipeline.ttdu_mode, "group": cfg.pipeline.group})
    else:
        pc = pipeline_cfg(cfg, snr_db)
        rec = run_initial_estimation(lg, links, plan, pc, rng, model)
        rec.meta["group"] = cfg.pipeline.group
    h, cross = data_stage_gains(lg, links, rec, model)
    ase, _ = ase_and_throughput(h, cross, 10.0 ** (-snr_db / 10.0), lg.grid.f_s, lg.grid.K)
    return ase


DEFAULT_ASE_SERIES = ("estimated_csi", "perfect_csi", "estimated_csi_no_squint")


def run_ase(cfg: ExperimentConfig) -> list[MetricRecord]:
    series_list = cfg.variants or DEFAULT_ASE_SERIES
    records = []
    for series in series_list:
        label = series if isinstance(series, str) else series["label"]
        for snr_db in cfg.sweep.snr_db:
            st = RunningStats()
            for v in _run_trials(partial(_ase_trial, cfg, snr_db, label), cfg.trials, cfg.n_workers):
                st.add(v)
            records.append(
                MetricRecord(
                    metric="ase",
                    series=label,
                    snr_db=snr_db,
                    value=st.mean,
                    trials=st.n,
                    variance=st.var,
                )
            )
    return records


DEFAULT_THROUGHPUT_SERIES = (
    {"label": "ideal_ttdu", "ttdu_mode": "ideal"},
    {"label": "gttdu", "ttdu_mode": "gttdu"},
    {"label": "no_ttdu", "ttdu_mode": "none"},
)


def _throughput_trial(cfg: ExperimentConfig, var: dict, trial: int):
    lg = build_geometries(cfg)
    rng, links, plan = draw_trial(cfg, lg, trial)
    snr_db = cfg.data_snr_db
    pc = pipeline_cfg(
        cfg, snr_db,
        ttdu_mode=var.get("ttdu_mode", cfg.pipeline.ttdu_mode),
        snr_angles_bs_db=snr_db, snr_angles_ac_db=snr_db,
        snr_doppler_db=snr_db, snr_delay_db=snr_db,
    )
    rec = run_initial_estimation(lg, links, plan, pc, rng, cfg.squint)
    rec.meta["group"] = cfg.pipeline.group
    h, cross = data_stage_gains(lg, links, rec, cfg.squint)
    sweep = cfg.sweep.n_subcarriers or tuple(
        int(v) for v in np.linspace(lg.grid.K // 8, lg.grid.K, 8)
    )
    out = {}
    for n_occ in sweep:
        _, thr = ase_and_throughput(
            h, cross, 10.0 ** (-snr_db / 10.0), lg.grid.f_s, lg.grid.K, int(n_occ)
        )
        out[int(n_occ)] = thr
    return out


def run_throughput(cfg: ExperimentConfig) -> list[MetricRecord]:
    variants = [dict(v) for v in (cfg.variants or DEFAULT_THROUGHPUT_SERIES)]
    records = []
    for var in variants:
        agg: dict[int, RunningStats] = {}
        for r in _run_trials(partial(_throughput_trial, cfg, var), cfg.trials, cfg.n_workers):
            for n_occ, thr in r.items():
                agg.setdefault(n_occ, RunningStats()).add(thr)
        for n_occ in sorted(agg):
            st = agg[n_occ]
            records.append(
                MetricRecord(
                    metric="throughput_bps",
                    series=var["label"],
                    snr_db=cfg.data_snr_db,
                    n_subcarriers=n_occ,
                    f_s_hz=cfg.geometry.f_s,
                    value=st.mean,
                    trials=st.n,
                    variance=st.var,
                )
            )
    return records


def _tracking_trial(cfg: ExperimentConfig, trial: int):
    lg = build_geometries(cfg)
    rng, links, plan = draw_trial(cfg, lg, trial)
    tc = cfg.tracking
    pc = pipeline_cfg(cfg, tc.data_snr_db)
    rec = run_initial_estimation(lg, links, plan, pc, rng, cfg.squint)
    rec.meta["group"] = cfg.pipeline.group
    rates = EvolutionRates.paper_defaults(links[0], lg.grid, n_c=tc.n_c)
    scfg = SessionConfig(
        n_ti=tc.n_ti,
        n_c=tc.n_c,
        epsilon=tc.epsilon,
        k_tilde_max=tc.k_tilde_max,
        snr_db=tc.data_snr_db,
        monitor_mode=tc.monitor_mode,
        drift_sign=tc.drift_sign,
        codec=CodecSpec(
            constraint_len=cfg.codec.constraint_len,
            polys=cfg.codec.polys,
            interleaver_seed=cfg.codec.interleaver_seed,
        ),
    )

    def retrack(cur_links):
        return pilot_aided_tracking(rec, cfg.pipeline.omega, lg, cur_links, plan, pc, rng, cfg.squint)

    return run_data_session(lg, links, rec, rates, scfg, rng, cfg.squint, retrack=retrack)


def run_tracking(cfg: ExperimentConfig) -> list[MetricRecord]:
    results = _run_trials(partial(_tracking_trial, cfg), cfg.trials, cfg.n_workers)
    records = []
    n_ti = min(len(r.nmse_tracked_db) for r in results)
    for ti in range(n_ti):
        for name, get in (
            ("nmse_h_tracked_db", lambda r: r.nmse_tracked_db[ti]),
            ("nmse_h_frozen_db", lambda r: r.nmse_frozen_db[ti]),
            ("amplitude_true", lambda r: r.amplitude_true[ti]),
            ("amplitude_tracked", lambda r: r.amplitude_tracked[ti]),
        ):
            st = RunningStats()
            for r in results:
                st.add(get(r))
            records.append(
                MetricRecord(
                    metric=name,
                    series="dadd",
                    ti=ti + 1,
                    snr_db=cfg.tracking.data_snr_db,
                    value=st.mean,
                    trials=st.n,
                    variance=st.var,
                )
            )
    return records


# ---------------------------------------------------------------------------
# Smoke check and dispatch
# ---------------------------------------------------------------------------


def run_smoke(cfg: ExperimentConfig) -> tuple[list[MetricRecord], bool]:
    """Single noiseless squint-free trial: every parameter must come back to
    relative error < 1e-6 and the channel NMSE below -120 dB.

    The rough Doppler offset is pinned to zero: the uplink pilot model keeps
    no residual Doppler ramp (pre-compensation is treated as exact there),
    and a nonzero offset would re-introduce it as a bias unrelated to the
    estimators under verification.  Rough angle offsets keep their
    configured value; they do not bias the squint-free pipeline.
    """
    cfg = replace(cfg, trials=1, rough=replace(cfg.rough, doppler_offset_frac=0.0))
    lg = build_geometries(cfg)
    rng, links, plan = draw_trial(cfg, lg, 0)
    pc = pipeline_cfg(
        cfg, None,
        ttdu_mode="none",
        snr_angles_bs_db=None, snr_angles_ac_db=None,
        snr_doppler_db=None, snr_delay_db=None,
        i_max_bs=1, i_max_ac=1, i_max_do=0,
    )
    model = SquintModel.none()
    rec = run_initial_estimation(lg, links, plan, pc, rng, model)
    records = []
    ok = True
    for name, get_t, get_e in (
        ("theta_bs", lambda l: l.theta_bs, lambda e: e.theta_bs),
        ("phi_bs", lambda l: l.phi_bs, lambda e: e.phi_bs),
        ("theta_ac", lambda l: l.theta_ac, lambda e: e.theta_ac),
        ("phi_ac", lambda l: l.phi_ac, lambda e: e.phi_ac),
        ("psi_z", lambda l: l.psi_z, lambda e: e.psi_z),
        ("tau", lambda l: l.tau, lambda e: e.tau),
        ("alpha_bar", lambda l: l.alpha_bar, lambda e: e.alpha_bar),
    ):
        rel = max(
            abs(get_e(e) - get_t(l)) / max(abs(get_t(l)), 1e-30)
            for l, e in zip(links, rec.links)
        )
        ok = ok and rel < 1e-6
        records.append(MetricRecord(metric=f"smoke_relerr_{name}", value=float(rel), trials=1))
    nm = nmse_dl(lg, links, rec, model)
    nm_db = 10.0 * np.log10(max(nm, 1e-300))
    ok = ok and nm_db < -120.0
    records.append(MetricRecord(metric="smoke_nmse_db", value=float(nm_db), trials=1))
    return records, ok


EXPERIMENTS = {
    "angle_rmse": run_angle_rmse,
    "doppler_rmse": run_doppler_rmse,
    "delay_rmse": run_delay_rmse,
    "nmse": run_nmse,
    "ase": run_ase,
    "throughput": run_throughput,
    "tracking": run_tracking,
}


def run_sweep(cfg: ExperimentConfig) -> list[MetricRecord]:
    """Dispatch one experiment kind and return its metric records."""
    if cfg.experiment == "smoke":
        records, _ = run_smoke(cfg)
        return records
    return EXPERIMENTS[cfg.experiment](cfg)
