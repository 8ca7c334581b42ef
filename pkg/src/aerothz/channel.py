"""LoS aeronautical channel model.

The downlink spatial-frequency channel at subcarrier ``k`` of symbol ``n`` is

    H[k, n] = sqrt(G) alpha e^{j 2 pi psi_k (n-1) T_sym}
              e^{-j 2 pi ((k-1)/K - 1/2) f_s tau} (u w^H)

with ``u`` / ``w`` the aircraft / base-station steering factors carrying the
frequency-dependent squint terms.  Nothing in this package ever materializes
``u w^H``: all transceiver quantities are inner products against the rank-1
factors, which keeps paper-scale arrays (200 x 200 per side) tractable.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .constants import SPEED_OF_LIGHT
from .manifold import ArrayGeometry, VirtualAngles, upa_squint_vector, upa_vector, virtual_angles
from .ttdu import CompensationPair


@dataclass(frozen=True)
class SquintModel:
    """Which squint effects the evaluator includes (both on reproduces the
    physical wideband channel; both off gives the narrowband idealization)."""

    beam: bool = True
    doppler: bool = True

    @classmethod
    def none(cls) -> "SquintModel":
        return cls(beam=False, doppler=False)


@dataclass(frozen=True)
class LinkParams:
    """True physical parameters of one BS <-> aircraft link.

    Angles are the azimuth/elevation seen at each side's array, ``alpha`` the
    complex small-scale gain, ``g``/``p`` the large-scale gain and transmit
    power (linear, with p*g normalized to 1 in the simulations), ``tau`` the
    path delay and ``psi_z`` the Doppler shift at the central carrier,
    consistent with the radial velocity ``v``.
    """

    theta_bs: float
    phi_bs: float
    theta_ac: float
    phi_ac: float
    alpha: complex
    g: float
    p: float
    tau: float
    psi_z: float
    v: float

    @property
    def va_bs(self) -> VirtualAngles:
        return virtual_angles(self.theta_bs, self.phi_bs)

    @property
    def va_ac(self) -> VirtualAngles:
        return virtual_angles(self.theta_ac, self.phi_ac)

    @property
    def alpha_bar(self) -> complex:
        """Equivalent gain sqrt(p g) alpha estimated by the pipeline."""
        return np.sqrt(self.p * self.g) * self.alpha

    def validate(self, geo: ArrayGeometry):
        psi_ref = self.v * geo.f_z / SPEED_OF_LIGHT
        if abs(self.psi_z - psi_ref) > 1e-9 * max(abs(psi_ref), 1.0):
            raise ValueError("psi_z inconsistent with radial velocity")
        if not 0.0 <= self.tau <= geo.n_cp * geo.t_s:
            raise ValueError("path delay outside the cyclic prefix")
        if self.p * self.g <= 0:
            raise ValueError("p*g must be positive")


def doppler_at_subcarrier(lp: LinkParams, k, geo: ArrayGeometry, model: SquintModel = SquintModel()):
    """Frequency-dependent Doppler shift psi_k = psi_z + (v/c) ((k-1)/K - 1/2) f_s."""
    if not model.doppler:
        return np.broadcast_to(lp.psi_z, np.shape(np.asarray(k))).astype(float) if np.ndim(k) else lp.psi_z
    return lp.psi_z + lp.v / SPEED_OF_LIGHT * geo.subcarrier_offset(k)


def delay_phase(lp: LinkParams, k, geo: ArrayGeometry):
    """Path-delay phase e^{-j 2 pi ((k-1)/K - 1/2) f_s tau}."""
    return np.exp(-2j * np.pi * geo.subcarrier_offset(k) * lp.tau)


def dl_rank1_factors(
    lp: LinkParams,
    k: int,
    geo_ac: ArrayGeometry,
    geo_bs: ArrayGeometry,
    comp: CompensationPair | None = None,
    model: SquintModel = SquintModel(),
) -> tuple[np.ndarray, np.ndarray, complex]:
    """Rank-1 factors (u, w, c0) of the DL channel: H[k] = c0 * u w^H.

    The per-symbol Doppler phase e^{j 2 pi psi_k (n-1) T_sym} is applied by
    the caller.  ``comp`` holds delay-module compensation for both sides; its
    conjugate is folded into the factors.
    """
    u = upa_vector(lp.va_ac, geo_ac.n_h, geo_ac.n_v)
    w = upa_vector(lp.va_bs, geo_bs.n_h, geo_bs.n_v)
    if model.beam:
        u = u * upa_squint_vector(lp.va_ac, geo_ac.n_h, geo_ac.n_v, k, geo_ac)
        w = w * upa_squint_vector(lp.va_bs, geo_bs.n_h, geo_bs.n_v, k, geo_bs)
    if comp is not None:
        if comp.comp_ac.size != u.size or comp.comp_bs.size != w.size:
            raise ValueError("compensation pair does not match array dimensions")
        u = u * np.conj(comp.comp_ac)
        w = w * np.conj(comp.comp_bs)
    c0 = np.sqrt(lp.g) * lp.alpha * delay_phase(lp, k, geo_ac)
    return u, w, complex(c0)


def ul_rank1_factors(
    lp: LinkParams,
    k: int,
    geo_ac: ArrayGeometry,
    geo_bs: ArrayGeometry,
    comp: CompensationPair | None = None,
    model: SquintModel = SquintModel(),
) -> tuple[np.ndarray, np.ndarray, complex]:
    """Rank-1 factors of the UL channel: H_ul[k] = c0 * u w^H with u on the BS
    side.  Frame timing is assumed delay-compensated in the uplink, so c0
    carries no path-delay phase (it is inert for the uplink estimators in any
    case: a per-subcarrier phase scales snapshot columns only)."""
    u = upa_vector(lp.va_bs, geo_bs.n_h, geo_bs.n_v)
    w = upa_vector(lp.va_ac, geo_ac.n_h, geo_ac.n_v)
    if model.beam:
        u = u * upa_squint_vector(lp.va_bs, geo_bs.n_h, geo_bs.n_v, k, geo_bs)
        w = w * upa_squint_vector(lp.va_ac, geo_ac.n_h, geo_ac.n_v, k, geo_ac)
    if comp is not None:
        if comp.comp_bs.size != u.size or comp.comp_ac.size != w.size:
            raise ValueError("compensation pair does not match array dimensions")
        u = u * np.conj(comp.comp_bs)
        w = w * np.conj(comp.comp_ac)
    return u, w, complex(np.sqrt(lp.g) * lp.alpha)


def received_pilot(
    lp: LinkParams,
    k: int,
    n: int,
    f: np.ndarray,
    w: np.ndarray,
    s: complex,
    sigma_n: float,
    rng: np.random.Generator,
    geo_ac: ArrayGeometry,
    geo_bs: ArrayGeometry,
    comp: CompensationPair | None = None,
    model: SquintModel = SquintModel(),
    direction: str = "dl",
) -> complex:
    """Single combined pilot observation y = sqrt(P) w^H H[k, n] f s + w^H n.

    Computed through the rank-1 factors in O(N_ac + N_bs); the combiner must
    be unit-norm so the combined noise keeps variance sigma_n^2.
    """
    if abs(np.linalg.norm(w) - 1.0) > 1e-9:
        raise ValueError("combiner must be unit-norm (noise variance convention)")
    if direction == "dl":
        u_f, w_f, c0 = dl_rank1_factors(lp, k, geo_ac, geo_bs, comp, model)
    elif direction == "ul":
        u_f, w_f, c0 = ul_rank1_factors(lp, k, geo_ac, geo_bs, comp, model)
    else:
        raise ValueError("direction must be 'dl' or 'ul'")
    psi_k = doppler_at_subcarrier(lp, k, geo_ac, model)
    dop = np.exp(2j * np.pi * psi_k * (n - 1) * geo_ac.t_sym)
    signal = np.sqrt(lp.p) * c0 * dop * (np.vdot(w, u_f)) * (np.vdot(w_f, f)) * s
    noise = 0.0
    if sigma_n > 0:
        noise = sigma_n / np.sqrt(2.0) * complex(rng.standard_normal(), rng.standard_normal())
    return complex(signal + noise)


# ---------------------------------------------------------------------------
# Scenario generation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Scenario:
    """Simulation geometry: BSs on a line at altitude offset d_ab above the
    aircraft plane, aircraft uniform on a disk of radius r_a."""

    d_ab: float = 10e3
    d_bs: float = 200e3
    r_a: float = 50e3
    v_ac: float = 200.0
    L: int = 2
    rng_seed: int = 0

    def __post_init__(self):
        if self.L < 1:
            raise ValueError("need at least one BS")
        if min(self.d_ab, self.d_bs, self.r_a) <= 0:
            raise ValueError("scenario distances must be positive")


def _local_frame(boresight: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    # Right-handed frame with e_z along boresight and e_y the projection of
    # global +z (so elevation is measured against the local horizontal).
    e_z = boresight / np.linalg.norm(boresight)
    up = np.array([0.0, 0.0, 1.0])
    e_y = up - np.dot(up, e_z) * e_z
    if np.linalg.norm(e_y) < 1e-12:
        e_y = np.array([0.0, 1.0, 0.0])
    e_y = e_y / np.linalg.norm(e_y)
    e_x = np.cross(e_y, e_z)
    return e_x, e_y, e_z


def _angles_in_frame(direction: np.ndarray, frame) -> tuple[float, float]:
    e_x, e_y, e_z = frame
    r = direction / np.linalg.norm(direction)
    x, y, z = np.dot(r, e_x), np.dot(r, e_y), np.dot(r, e_z)
    phi = np.arcsin(np.clip(y, -1.0, 1.0))
    theta = np.arctan2(x, z)
    return float(theta), float(phi)


def scenario_links(
    sc: Scenario,
    geo: ArrayGeometry,
    rng: np.random.Generator,
    sigma_alpha: float = 1.0,
    unit_gain_modulus: bool = False,
    max_draws: int = 10_000,
) -> list[LinkParams]:
    """Draw one scenario realization and return per-BS link parameters.

    The aircraft position is uniform on the disk about the scenario center;
    draws are rejected until every azimuth/elevation at both sides lands in
    [-pi/3, pi/3].  The heading is uniform inside the sector spanned by the
    directions from the center to the two outer BS ground projections; path
    delays are uniform over the cyclic prefix and P*G is normalized to 1.
    """
    bs_pos = [np.array([0.0, l * sc.d_bs, sc.d_ab]) for l in range(sc.L)]
    y_mid = (sc.L - 1) * sc.d_bs / 2.0
    center = np.array([sc.d_bs / 2.0, y_mid, 0.0])

    bs_frames = [_local_frame(center - p) for p in bs_pos]
    ac_frame = _local_frame(np.array([0.0, y_mid, sc.d_ab]) - center)

    # Heading sector: directions from the center toward the outer BS ground
    # projections (a single ray when L = 1).
    g0 = np.array([0.0, 0.0, 0.0]) - center
    g1 = np.array([0.0, (sc.L - 1) * sc.d_bs, 0.0]) - center
    a0 = np.arctan2(g0[1], g0[0])
    a1 = np.arctan2(g1[1], g1[0])
    lo, hi = min(a0, a1), max(a0, a1)

    for _ in range(max_draws):
        rad = sc.r_a * np.sqrt(rng.uniform())
        ang = rng.uniform(0.0, 2.0 * np.pi)
        pos = center + np.array([rad * np.cos(ang), rad * np.sin(ang), 0.0])
        angles = []
        ok = True
        for p, fr in zip(bs_pos, bs_frames):
            th_bs, ph_bs = _angles_in_frame(pos - p, fr)
            th_ac, ph_ac = _angles_in_frame(p - pos, ac_frame)
            angles.append((th_bs, ph_bs, th_ac, ph_ac))
            if max(abs(th_bs), abs(ph_bs), abs(th_ac), abs(ph_ac)) > np.pi / 3:
                ok = False
                break
        if ok:
            break
    else:
        raise RuntimeError("could not draw an in-range scenario geometry")

    heading = rng.uniform(lo, hi)
    vel = sc.v_ac * np.array([np.cos(heading), np.sin(heading), 0.0])

    links = []
    for (th_bs, ph_bs, th_ac, ph_ac), p in zip(angles, bs_pos):
        los = (p - pos) / np.linalg.norm(p - pos)
        v_rad = float(np.dot(vel, los))
        if unit_gain_modulus:
            alpha = np.exp(2j * np.pi * rng.uniform()) * sigma_alpha
        else:
            alpha = sigma_alpha / np.sqrt(2.0) * complex(
                rng.standard_normal(), rng.standard_normal()
            )
        links.append(
            LinkParams(
                theta_bs=th_bs,
                phi_bs=ph_bs,
                theta_ac=th_ac,
                phi_ac=ph_ac,
                alpha=complex(alpha),
                g=1.0,
                p=1.0,
                tau=float(rng.uniform(0.0, geo.n_cp * geo.t_s)),
                psi_z=v_rad * geo.f_z / SPEED_OF_LIGHT,
                v=v_rad,
            )
        )
    return links


def random_links(
    geo: ArrayGeometry,
    L: int,
    rng: np.random.Generator,
    v_max: float = 200.0,
    angle_range: float = np.pi / 3,
    sigma_alpha: float = 1.0,
    unit_gain_modulus: bool = False,
) -> list[LinkParams]:
    """Draw links with all azimuth/elevation angles uniform in the sweep
    range (the protocol behind the performance sweeps, where both
    coordinates exercise the full +-60 degree span), radial velocities
    uniform in [-v_max, v_max], and delays uniform over the cyclic prefix.
    """
    links = []
    for _ in range(L):
        v = float(rng.uniform(-v_max, v_max))
        if unit_gain_modulus:
            alpha = np.exp(2j * np.pi * rng.uniform()) * sigma_alpha
        else:
            alpha = sigma_alpha / np.sqrt(2.0) * complex(
                rng.standard_normal(), rng.standard_normal()
            )
        links.append(
            LinkParams(
                theta_bs=float(rng.uniform(-angle_range, angle_range)),
                phi_bs=float(rng.uniform(-angle_range, angle_range)),
                theta_ac=float(rng.uniform(-angle_range, angle_range)),
                phi_ac=float(rng.uniform(-angle_range, angle_range)),
                alpha=complex(alpha),
                g=1.0,
                p=1.0,
                tau=float(rng.uniform(0.0, geo.n_cp * geo.t_s)),
                psi_z=v * geo.f_z / SPEED_OF_LIGHT,
                v=v,
            )
        )
    return links


# ---------------------------------------------------------------------------
# Block-fading evolution
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EvolutionRates:
    """Per-second change rates of the link parameters plus the TI duration.

    x^{[q+1]} = x^{[q]} + s * rho_x * n_c * t_sym with an independent random
    sign s per parameter per TI.
    """

    rho_alpha: complex
    rho_tau: float
    rho_psi: float
    rho_theta_bs: float
    rho_phi_bs: float
    rho_theta_ac: float
    rho_phi_ac: float
    n_c: int
    t_sym: float

    def validate(self, geo: ArrayGeometry):
        t_ref = (geo.K + geo.n_cp) / geo.f_s
        if abs(self.t_sym - t_ref) > 1e-12 * t_ref:
            raise ValueError("t_sym inconsistent with the OFDM grid")

    @property
    def t_ti(self) -> float:
        return self.n_c * self.t_sym

    @classmethod
    def paper_defaults(cls, lp: LinkParams, geo: ArrayGeometry, n_c: int = 70) -> "EvolutionRates":
        """Rates tied to the initial link draw: alpha and tau drift at half
        their initial value per second, Doppler at 1 percent, aircraft angles
        at pi/4 rad/s and BS angles at pi/12 rad/s."""
        return cls(
            rho_alpha=lp.alpha / 2.0,
            rho_tau=lp.tau / 2.0,
            rho_psi=0.01 * lp.psi_z,
            rho_theta_bs=np.pi / 12,
            rho_phi_bs=np.pi / 12,
            rho_theta_ac=np.pi / 4,
            rho_phi_ac=np.pi / 4,
            n_c=n_c,
            t_sym=geo.t_sym,
        )


def _reflect(x: float, lo: float, hi: float) -> float:
    # Fold x back into [lo, hi] by reflecting at the bounds.
    span = hi - lo
    if span <= 0:
        return lo
    y = (x - lo) % (2.0 * span)
    if y > span:
        y = 2.0 * span - y
    return lo + y

def evolve_ti(
    lp: LinkParams,
    rates: EvolutionRates,
    geo: ArrayGeometry,
    rng: np.random.Generator,
    fixed_sign: int | None = None,
) -> LinkParams:
    """Step every parameter by one TI, keeping derived quantities consistent.

    The delay reflects at the cyclic-prefix bounds; the radial velocity is
    recomputed from the stepped Doppler shift.
    """

    def sgn() -> float:
        if fixed_sign is not None:
            return float(fixed_sign)
        return 1.0 if rng.uniform() < 0.5 else -1.0

    dt = rates.t_ti
    tau = _reflect(lp.tau + sgn() * rates.rho_tau * dt, 0.0, geo.n_cp * geo.t_s)
    psi = lp.psi_z + sgn() * rates.rho_psi * dt
    return replace(
        lp,
        alpha=lp.alpha + sgn() * rates.rho_alpha * dt,
        tau=tau,
        psi_z=psi,
        v=psi * SPEED_OF_LIGHT / geo.f_z,
        theta_bs=lp.theta_bs + sgn() * rates.rho_theta_bs * dt,
        phi_bs=lp.phi_bs + sgn() * rates.rho_phi_bs * dt,
        theta_ac=lp.theta_ac + sgn() * rates.rho_theta_ac * dt,
        phi_ac=lp.phi_ac + sgn() * rates.rho_phi_ac * dt,
    )
