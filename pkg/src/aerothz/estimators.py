"""Initial channel estimation and pilot-aided tracking.

The pipeline follows the frame structure: BS angles in the uplink through the
equivalent-array selection network, aircraft angles in the downlink with
beams pointed by the fresh BS estimates, then Doppler, path delay and gain,
each stage compensating what the previous ones learned.  The same machinery
reruns with a sparse selection pattern (spacing Omega > 1) for pilot-aided
tracking, where the wrapped equivalent-array angles are de-aliased against
the previous estimates.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .channel import LinkParams, SquintModel
from .esprit import EstimationError, SnapshotMatrix, tdu_esprit_2d, tls_esprit_1d
from .manifold import VirtualAngles, physical_angles, virtual_angles
from .constants import SPEED_OF_LIGHT
from .selection import SelectionPattern, make_pattern
from .stages import (
    LinkGeometry,
    ac_angle_snapshots,
    beam_products,
    bs_angle_snapshots,
    delay_snapshots,
    doppler_snapshots,
)
from .ttdu import DelayModule, GroupingSpec


# ---------------------------------------------------------------------------
# Pilot plan
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RoughPriors:
    """Navigation-derived rough parameters of one link."""

    theta_bs: float
    phi_bs: float
    theta_ac: float
    phi_ac: float
    psi_z: float

    @property
    def va_bs(self) -> VirtualAngles:
        return virtual_angles(self.theta_bs, self.phi_bs)

    @property
    def va_ac(self) -> VirtualAngles:
        return virtual_angles(self.theta_ac, self.phi_ac)


@dataclass(frozen=True)
class PilotPlan:
    """OFDMA pilot allocation: alternating interval-L subcarrier sets, one
    unit-modulus pilot per subcarrier, plus the rough priors per link."""

    subcarrier_sets: list
    pilots: list
    rough: list

    def __post_init__(self):
        L = len(self.subcarrier_sets)
        seen = set()
        for l, ks in enumerate(self.subcarrier_sets):
            d = np.diff(ks)
            if ks.size and not np.all(d == L):
                raise ValueError("in-set subcarrier indices must differ by exactly L")
            if self.pilots[l].shape != ks.shape:
                raise ValueError("one pilot per allocated subcarrier")
            if not np.allclose(np.abs(self.pilots[l]), 1.0, atol=1e-12):
                raise ValueError("pilots must be unit modulus")
            if seen.intersection(ks.tolist()):
                raise ValueError("subcarrier sets must be disjoint")
            seen.update(ks.tolist())

    @property
    def n_links(self) -> int:
        return len(self.subcarrier_sets)


def make_pilot_plan(
    geo,
    links: list[LinkParams],
    rng: np.random.Generator,
    angle_offset_deg: float = 5.0,
    doppler_offset_frac: float = 0.01,
) -> PilotPlan:
    """Build the per-link pilot allocation and draw the rough priors.

    Also validates the delay-aliasing feasibility condition
    L * n_cp / K < 1/2 of the interval-L allocation.
    """
    L = len(links)
    if geo.K % L:
        raise ValueError("subcarrier count must divide evenly across links")
    if L * geo.n_cp / geo.K >= 0.5:
        raise ValueError("interval-L allocation would alias the delay estimate")
    off = np.deg2rad(angle_offset_deg)
    sets, pilots, rough = [], [], []
    for l, lp in enumerate(links):
        sets.append(np.arange(l + 1, geo.K + 1, L))
        pilots.append(np.exp(2j * np.pi * rng.uniform(size=geo.K // L)))
        rough.append(
            RoughPriors(
                theta_bs=lp.theta_bs + rng.uniform(-off, off),
                phi_bs=lp.phi_bs + rng.uniform(-off, off),
                theta_ac=lp.theta_ac + rng.uniform(-off, off),
                phi_ac=lp.phi_ac + rng.uniform(-off, off),
                psi_z=lp.psi_z * (1.0 + rng.uniform(-doppler_offset_frac, doppler_offset_frac)),
            )
        )
    return PilotPlan(subcarrier_sets=sets, pilots=pilots, rough=rough)


# ---------------------------------------------------------------------------
# Estimate records
# ---------------------------------------------------------------------------


@dataclass
class LinkEstimate:
    """Estimated parameters of one link with per-stage iteration counts."""

    mu_bs: float = 0.0
    nu_bs: float = 0.0
    theta_bs: float = 0.0
    phi_bs: float = 0.0
    mu_ac: float = 0.0
    nu_ac: float = 0.0
    theta_ac: float = 0.0
    phi_ac: float = 0.0
    psi_z: float = 0.0
    tau: float = 0.0
    alpha_bar: complex = 0.0
    iterations: dict = field(default_factory=dict)
    ttdu_basis: str = ""
    warnings: list = field(default_factory=list)

    @property
    def va_bs(self) -> VirtualAngles:
        return VirtualAngles(self.mu_bs, self.nu_bs)

    @property
    def va_ac(self) -> VirtualAngles:
        return VirtualAngles(self.mu_ac, self.nu_ac)


@dataclass
class EstimateRecord:
    links: list[LinkEstimate]
    meta: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# Ambiguity resolution
# ---------------------------------------------------------------------------


def resolve_ambiguity(omega_estimate: float, prior: float, omega_sp: int) -> float:
    """De-alias a sparse-array rotational phase against a prior estimate.

    Scans the 2*Omega + 1 candidates ``omega_estimate/Omega + b*pi`` for b in
    {-1, -1 + 1/Omega, ..., 1} and returns the one closest to the prior.
    """
    tilde = omega_estimate / omega_sp
    b = np.arange(-omega_sp, omega_sp + 1) / omega_sp
    cands = tilde + b * np.pi
    return float(cands[np.argmin(np.abs(cands - prior))])


# ---------------------------------------------------------------------------
# Algorithm stages
# ---------------------------------------------------------------------------


@dataclass
class AngleEstimate:
    mu: float
    nu: float
    theta: float
    phi: float
    history: list


def _angles_from_virtual(mu: float, nu: float) -> tuple[float, float]:
    theta, phi = physical_angles(VirtualAngles(np.clip(mu, -np.pi, np.pi),
                                               np.clip(nu, -np.pi, np.pi)))
    return theta, phi


def algorithm1_angles(
    side: str,
    lg: LinkGeometry,
    lp: LinkParams,
    mod_bs: DelayModule,
    mod_ac: DelayModule,
    pattern: SelectionPattern,
    va_weights: VirtualAngles,
    va_other: VirtualAngles,
    k_set: np.ndarray,
    pilots: np.ndarray,
    psi_ref_z: float,
    prior: VirtualAngles,
    i_max: int,
    sigma_n: float,
    rng: np.random.Generator,
    model: SquintModel = SquintModel(),
) -> AngleEstimate:
    """Prior-aided iterative angle estimation for one link and one side.

    Iteration 1 applies the 2D unitary estimator to the raw equivalent-array
    matrix; later iterations strip the residual equivalent-array squint
    predicted by the previous iterate relative to the delay module's tuning
    angles, then re-estimate.  Sparse patterns are de-aliased against the
    prior at every iteration.
    """
    if side == "bs":
        y = bs_angle_snapshots(
            lg, lp, mod_bs, mod_ac, pattern, va_weights, va_other,
            k_set, pilots, psi_ref_z, sigma_n, rng, model,
        )
        va_base = mod_bs.angles if mod_bs.mode != "none" else VirtualAngles(0.0, 0.0)
    elif side == "ac":
        y = ac_angle_snapshots(
            lg, lp, mod_bs, mod_ac, pattern, va_other, va_weights,
            k_set, pilots, psi_ref_z, sigma_n, rng, model,
        )
        va_base = mod_ac.angles if mod_ac.mode != "none" else VirtualAngles(0.0, 0.0)
    else:
        raise ValueError("side must be 'bs' or 'ac'")

    y = y / pilots[None, :]
    geo = lg.grid
    zetas = np.asarray(geo.squint_ratio(k_set), dtype=float)
    dh = pattern.omega * (np.arange(pattern.n_sets) % pattern.i_h)
    dv = pattern.omega * (np.arange(pattern.n_sets) // pattern.i_h)

    history = []
    mu_hat = nu_hat = None
    for it in range(1, i_max + 1):
        if it == 1:
            z = y
        else:
            resid = np.outer(dh * (mu_hat - va_base.mu) + dv * (nu_hat - va_base.nu), zetas)
            z = y * np.exp(-1j * resid)
        try:
            (om_mu, om_nu), = tdu_esprit_2d(SnapshotMatrix(z, (pattern.i_h, pattern.i_v)), 1)
        except EstimationError as exc:
            raise EstimationError(str(exc), stage=f"angles-{side}") from exc
        mu_hat = resolve_ambiguity(om_mu, prior.mu, pattern.omega)
        nu_hat = resolve_ambiguity(om_nu, prior.nu, pattern.omega)
        history.append((mu_hat, nu_hat))

    theta, phi = _angles_from_virtual(mu_hat, nu_hat)
    return AngleEstimate(mu=mu_hat, nu=nu_hat, theta=theta, phi=phi, history=history)


def extend_doppler(psi_z: float, geo, ks, model: SquintModel = SquintModel()) -> np.ndarray:
    """Extend a central-carrier Doppler estimate to arbitrary subcarriers."""
    if not model.doppler:
        return np.full(np.shape(ks), psi_z, dtype=float)
    v = psi_z * geo.lambda_z
    return psi_z + v / SPEED_OF_LIGHT * np.asarray(geo.subcarrier_offset(ks), dtype=float)


def algorithm2_doppler(
    lg: LinkGeometry,
    lp: LinkParams,
    mod_bs: DelayModule,
    mod_ac: DelayModule,
    va_w_ac: VirtualAngles,
    va_f_bs: VirtualAngles,
    psi_rough_z: float,
    k_set: np.ndarray,
    pilots: np.ndarray,
    n_do: int,
    i_max: int,
    sigma_n: float,
    rng: np.random.Generator,
    model: SquintModel = SquintModel(),
) -> tuple[float, list]:
    """Prior-aided iterative Doppler estimation for one link.

    Iteration 0 runs the 1D estimator on the raw symbol-by-subcarrier matrix
    (the rough pre-compensation having been removed); iterations >= 1 strip
    the Doppler-squint ramp predicted by the current radial-velocity guess,
    seeded from the rough prior, then re-estimate.
    """
    geo = lg.grid
    y = doppler_snapshots(
        lg, lp, mod_bs, mod_ac, va_w_ac, va_f_bs, n_do, k_set, pilots, sigma_n, rng, model
    )
    y = y / pilots[None, :]
    offsets = np.asarray(geo.subcarrier_offset(k_set), dtype=float)
    m = np.arange(n_do)[:, None]

    def run(z: np.ndarray) -> float:
        try:
            (om,) = tls_esprit_1d(SnapshotMatrix(z, n_do), 1)
        except EstimationError as exc:
            raise EstimationError(str(exc), stage="doppler") from exc
        if abs(om) > np.pi - 1e-3:
            raise EstimationError("virtual Doppler at the aliasing boundary", "doppler")
        return float(om) / (2.0 * np.pi * geo.t_sym)

    history = [run(y)]
    psi_hat = history[0]
    if i_max > 0 and model.doppler:
        v_hat = psi_rough_z * geo.lambda_z
        for _ in range(i_max):
            comp = np.exp(2j * np.pi * (v_hat / SPEED_OF_LIGHT) * offsets[None, :] * m * geo.t_sym)
            psi_hat = run(np.conj(comp) * y)
            v_hat = psi_hat * geo.lambda_z
            history.append(psi_hat)
    return psi_hat, history


def estimate_delay(
    lg: LinkGeometry,
    lp: LinkParams,
    mod_bs: DelayModule,
    mod_ac: DelayModule,
    va_w_ac: VirtualAngles,
    va_f_bs: VirtualAngles,
    psi_hat_z: float,
    k_set: np.ndarray,
    pilots: np.ndarray,
    n_de: int,
    sigma_n: float,
    rng: np.random.Generator,
    model: SquintModel = SquintModel(),
) -> tuple[float, float, np.ndarray]:
    """Path-delay estimation over the interval-L subcarrier grid.

    Returns (tau_hat, omega, Y_de).  The interval-L stride makes the
    recovered rotation omega = L * mu_tau with mu_tau = -2 pi f_s tau / K;
    feasibility (no aliasing over the cyclic prefix) is checked at plan
    construction.
    """
    geo = lg.grid
    stride = int(np.diff(k_set)[0]) if k_set.size > 1 else 1
    y = delay_snapshots(
        lg, lp, mod_bs, mod_ac, va_w_ac, va_f_bs, psi_hat_z, n_de,
        k_set, pilots, sigma_n, rng, model,
    )
    z = y / pilots[:, None]
    try:
        (om,) = tls_esprit_1d(SnapshotMatrix(z, int(k_set.size)), 1)
    except EstimationError as exc:
        raise EstimationError(str(exc), stage="delay") from exc
    tau_hat = -float(om) * geo.K / (2.0 * np.pi * geo.f_s * stride)
    return tau_hat, float(om), y


def reconstruct_delay_matrix(
    lg: LinkGeometry,
    est: LinkEstimate,
    tau_hat: float,
    va_w_ac: VirtualAngles,
    va_f_bs: VirtualAngles,
    k_set: np.ndarray,
    pilots: np.ndarray,
    n_de: int,
) -> np.ndarray:
    """Model matrix for the gain ratio: squint-free beam products at the
    estimated angles times the estimated delay steering and the pilots."""
    nosq = SquintModel.none()
    lp_hat = replace_link_angles(est)
    gains = beam_products(
        lg, lp_hat, DelayModule(), DelayModule(), va_w_ac, va_f_bs, k_set, nosq
    )
    offsets = np.asarray(lg.grid.subcarrier_offset(k_set), dtype=float)
    col = np.exp(-2j * np.pi * offsets * tau_hat) * gains * pilots
    return np.repeat(col[:, None], n_de, axis=1)


def replace_link_angles(est: LinkEstimate) -> LinkParams:
    """LinkParams stub carrying only the estimated angles (for beam algebra)."""
    return LinkParams(
        theta_bs=est.theta_bs,
        phi_bs=est.phi_bs,
        theta_ac=est.theta_ac,
        phi_ac=est.phi_ac,
        alpha=1.0 + 0.0j,
        g=1.0,
        p=1.0,
        tau=0.0,
        psi_z=0.0,
        v=0.0,
    )


def estimate_gain(y_de: np.ndarray, reconstructed: np.ndarray) -> complex:
    """Equivalent-gain estimate: mean of the elementwise observation/model
    ratios over the delay-stage matrix."""
    if np.any(np.abs(reconstructed) == 0.0):
        raise ValueError("reconstructed model matrix has zero entries")
    return complex(np.mean(y_de / reconstructed))


# ---------------------------------------------------------------------------
# Pipeline
# ---------------------------------------------------------------------------


@dataclass
class PipelineConfig:
    """Knobs of one initial-estimation (or tracking) pass.

    SNRs are transmit-SNR sigma_alpha^2/sigma_n^2 in dB; ``None`` runs the
    stage noiselessly.  ``ttdu_basis='true'`` tunes the delay modules at the
    true angles (performance upper bound); ``'rough'`` tunes at the priors
    and refines after each angle stage.
    """

    i_bs: tuple = (5, 5)
    i_ac: tuple = (5, 5)
    omega: int = 1
    ttdu_mode: str = "gttdu"
    group_bs: tuple = (5, 5)
    group_ac: tuple = (5, 5)
    ttdu_basis: str = "rough"
    i_max_bs: int = 2
    i_max_ac: int = 2
    i_max_do: int = 2
    n_do: int = 6
    n_de: int = 10
    method: int = 2
    method_floor_db: float = -20.0
    snr_angles_bs_db: float | None = None
    snr_angles_ac_db: float | None = None
    snr_doppler_db: float | None = None
    snr_delay_db: float | None = None


def snr_db_to_sigma(snr_db: float | None, sigma_alpha2: float = 1.0) -> float:
    """Transmit-SNR convention sigma_alpha^2 / sigma_n^2."""
    if snr_db is None:
        return 0.0
    return float(np.sqrt(sigma_alpha2 * 10.0 ** (-snr_db / 10.0)))


def _make_module(mode: str, angles: VirtualAngles, group: tuple) -> DelayModule:
    if mode == "none":
        return DelayModule()
    grouping = GroupingSpec(*group) if mode == "gttdu" else None
    return DelayModule(mode=mode, angles=angles, grouping=grouping)


def run_initial_estimation(
    lg: LinkGeometry,
    links: list[LinkParams],
    plan: PilotPlan,
    cfg: PipelineConfig,
    rng: np.random.Generator,
    model: SquintModel = SquintModel(),
    priors: EstimateRecord | None = None,
) -> EstimateRecord:
    """Run the full per-link estimation chain and return the record.

    With ``priors`` given (pilot-aided tracking) the prior estimates replace
    the navigation roughs as weights, module tuning and ambiguity anchors.
    """
    geo = lg.grid
    pattern_bs = make_pattern(lg.bs.n_h, lg.bs.n_v, *cfg.i_bs, cfg.omega)
    pattern_ac = make_pattern(lg.ac.n_h, lg.ac.n_v, *cfg.i_ac, cfg.omega)
    out = []
    for l, lp in enumerate(links):
        if priors is None:
            va_r_bs, va_r_ac = plan.rough[l].va_bs, plan.rough[l].va_ac
            psi_rough = plan.rough[l].psi_z
        else:
            pl = priors.links[l]
            va_r_bs, va_r_ac = pl.va_bs, pl.va_ac
            psi_rough = pl.psi_z
        basis_bs = lp.va_bs if cfg.ttdu_basis == "true" else va_r_bs
        basis_ac = lp.va_ac if cfg.ttdu_basis == "true" else va_r_ac
        mod_bs = _make_module(cfg.ttdu_mode, basis_bs, cfg.group_bs)
        mod_ac = _make_module(cfg.ttdu_mode, basis_ac, cfg.group_ac)
        k_set, pilots = plan.subcarrier_sets[l], plan.pilots[l]

        est = LinkEstimate(ttdu_basis=cfg.ttdu_basis)

        bs = algorithm1_angles(
            "bs", lg, lp, mod_bs, mod_ac, pattern_bs, va_r_bs, va_r_ac,
            k_set, pilots, psi_rough, va_r_bs, cfg.i_max_bs,
            snr_db_to_sigma(cfg.snr_angles_bs_db), rng, model,
        )
        est.mu_bs, est.nu_bs, est.theta_bs, est.phi_bs = bs.mu, bs.nu, bs.theta, bs.phi
        est.iterations["angles_bs"] = len(bs.history)
        if cfg.ttdu_basis == "rough":
            mod_bs = mod_bs.retuned(VirtualAngles(bs.mu, bs.nu))

        if cfg.method == 2 and cfg.snr_angles_ac_db is not None and (
            cfg.snr_angles_ac_db <= cfg.method_floor_db
        ):
            va_f_bs = va_r_bs
        else:
            va_f_bs = VirtualAngles(bs.mu, bs.nu)

        ac = algorithm1_angles(
            "ac", lg, lp, mod_bs, mod_ac, pattern_ac, va_r_ac, va_f_bs,
            k_set, pilots, psi_rough, va_r_ac, cfg.i_max_ac,
            snr_db_to_sigma(cfg.snr_angles_ac_db), rng, model,
        )
        est.mu_ac, est.nu_ac, est.theta_ac, est.phi_ac = ac.mu, ac.nu, ac.theta, ac.phi
        est.iterations["angles_ac"] = len(ac.history)
        if cfg.ttdu_basis == "rough":
            mod_ac = mod_ac.retuned(VirtualAngles(ac.mu, ac.nu))

        va_w = VirtualAngles(ac.mu, ac.nu)
        va_f = VirtualAngles(bs.mu, bs.nu)
        psi_hat, dop_hist = algorithm2_doppler(
            lg, lp, mod_bs, mod_ac, va_w, va_f, psi_rough, k_set, pilots,
            cfg.n_do, cfg.i_max_do, snr_db_to_sigma(cfg.snr_doppler_db), rng, model,
        )
        est.psi_z = psi_hat
        est.iterations["doppler"] = len(dop_hist)

        tau_hat, _, y_de = estimate_delay(
            lg, lp, mod_bs, mod_ac, va_w, va_f, psi_hat, k_set, pilots,
            cfg.n_de, snr_db_to_sigma(cfg.snr_delay_db), rng, model,
        )
        est.tau = tau_hat
        if not 0.0 <= tau_hat <= geo.n_cp * geo.t_s:
            est.warnings.append("delay estimate outside the cyclic prefix")

        recon = reconstruct_delay_matrix(
            lg, est, tau_hat, va_w, va_f, k_set, pilots, cfg.n_de
        )
        est.alpha_bar = estimate_gain(y_de, recon)
        out.append(est)
    return EstimateRecord(
        links=out,
        meta={
            "ttdu_mode": cfg.ttdu_mode,
            "ttdu_basis": cfg.ttdu_basis,
            "omega": cfg.omega,
            "method": cfg.method,
            "group": cfg.group_bs,
        },
    )


def pilot_aided_tracking(
    prior: EstimateRecord,
    omega_sp: int,
    lg: LinkGeometry,
    links: list[LinkParams],
    plan: PilotPlan,
    cfg: PipelineConfig,
    rng: np.random.Generator,
    model: SquintModel = SquintModel(),
) -> EstimateRecord:
    """Re-estimate every link with the Omega-sparse equivalent array, using
    the prior record for weights, module tuning and ambiguity resolution."""
    sparse_cfg = replace_cfg(cfg, omega=omega_sp)
    rec = run_initial_estimation(lg, links, plan, sparse_cfg, rng, model, priors=prior)
    rec.meta["stage"] = "pilot_aided_tracking"
    return rec


def replace_cfg(cfg: PipelineConfig, **kw) -> PipelineConfig:
    from dataclasses import replace as _rp

    return _rp(cfg, **kw)
