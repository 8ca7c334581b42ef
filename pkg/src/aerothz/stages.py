"""Vectorized synthesis of the per-stage observation matrices.

Every quantity here exploits that channel factors, compensation phases and
beam weights are all separable into horizontal x vertical 1D factors, so a
combined observation across a 200 x 200 UPA costs O(N_h + N_v) per
subcarrier instead of O(N_h N_v).  Subarray selection enters as shifted 1D
inner products against the reference subarray weights.

All functions are pure given an explicit RNG; snapshot matrices come back in
the element ordering the subspace estimators expect.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import LinkParams, SquintModel
from .constants import SPEED_OF_LIGHT
from .manifold import ArrayGeometry, VirtualAngles
from .selection import SelectionPattern
from .ttdu import DelayModule


@dataclass(frozen=True)
class LinkGeometry:
    """Array geometries of one BS <-> aircraft-subarray pair.

    Both sides must share the same OFDM grid (f_z, f_s, K, n_cp).
    """

    bs: ArrayGeometry
    ac: ArrayGeometry

    def __post_init__(self):
        for f in ("f_z", "f_s", "K", "n_cp"):
            if getattr(self.bs, f) != getattr(self.ac, f):
                raise ValueError("BS and aircraft grids must agree on " + f)

    @property
    def grid(self) -> ArrayGeometry:
        return self.bs


def _axis_channel_factor(
    n: int, mu: float, zetas: np.ndarray, comp_coeff: np.ndarray, beam_squint: bool
) -> np.ndarray:
    """(n, K) channel factor along one axis, compensation folded in."""
    x = np.arange(n)
    if not beam_squint:
        return np.exp(1j * mu * x)[:, None] * np.ones((1, zetas.size))
    phase = (mu * x)[:, None] + np.outer(x * mu - comp_coeff, zetas)
    return np.exp(1j * phase)


def _recv_sums(fac: np.ndarray, weights: np.ndarray, shifts: np.ndarray) -> np.ndarray:
    """Shifted combiner sums S[d, k] = sum_x conj(weights[x]) fac[x + shifts[d], k]."""
    m = weights.size
    wc = np.conj(weights)
    return np.stack([wc @ fac[d : d + m, :] for d in shifts])


def _tx_sums(fac: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Transmit-side inner product per subcarrier: sum_x conj(fac[x, k]) values[x]."""
    return values @ np.conj(fac)


def _axis_weights(mu: float, m: int) -> np.ndarray:
    return np.exp(1j * mu * np.arange(m)) / np.sqrt(m)


def _noise(shape, sigma_n: float, rng: np.random.Generator) -> np.ndarray:
    if sigma_n <= 0:
        return 0.0
    return sigma_n / np.sqrt(2.0) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def _doppler_residual(
    lp: LinkParams,
    psi_ref_z: float,
    v_ref: float,
    offsets: np.ndarray,
    n_sym: int,
    t_sym: float,
    model: SquintModel,
) -> np.ndarray:
    """(n_sym, K) phase ramp e^{j 2 pi (psi_k - psi_ref_k)(m-1) T_sym}.

    ``psi_ref_k`` is the transmitter's pre-compensation extended over the
    band with the reference radial velocity.
    """
    d_psi = lp.psi_z - psi_ref_z
    if model.doppler:
        d_psi = d_psi + (lp.v - v_ref) / SPEED_OF_LIGHT * offsets
    else:
        d_psi = np.broadcast_to(d_psi, offsets.shape)
    m = np.arange(n_sym)[:, None]
    return np.exp(2j * np.pi * d_psi[None, :] * m * t_sym)


def _selection_products(
    geo: ArrayGeometry,
    va_true: VirtualAngles,
    module: DelayModule,
    va_weights: VirtualAngles,
    pattern: SelectionPattern,
    zetas: np.ndarray,
    model: SquintModel,
) -> np.ndarray:
    """(I, K) combined receive gains of the selected subarrays.

    Row ordering follows the pattern convention m = (i_v - 1) i_h + i_h'.
    """
    ch, cv = module.axis_coeffs(geo.n_h, geo.n_v)
    fh = _axis_channel_factor(geo.n_h, va_true.mu, zetas, ch, model.beam)
    fv = _axis_channel_factor(geo.n_v, va_true.nu, zetas, cv, model.beam)
    sh = _recv_sums(fh, _axis_weights(va_weights.mu, pattern.sub_h),
                    pattern.omega * np.arange(pattern.i_h))
    sv = _recv_sums(fv, _axis_weights(va_weights.nu, pattern.sub_v),
                    pattern.omega * np.arange(pattern.i_v))
    return (sv[:, None, :] * sh[None, :, :]).reshape(pattern.n_sets, -1)


def _full_recv_product(
    geo: ArrayGeometry,
    va_true: VirtualAngles,
    module: DelayModule,
    va_weights: VirtualAngles,
    zetas: np.ndarray,
    model: SquintModel,
) -> np.ndarray:
    """(K,) combined gain of a full-array unit-norm matched combiner."""
    ch, cv = module.axis_coeffs(geo.n_h, geo.n_v)
    fh = _axis_channel_factor(geo.n_h, va_true.mu, zetas, ch, model.beam)
    fv = _axis_channel_factor(geo.n_v, va_true.nu, zetas, cv, model.beam)
    sh = _recv_sums(fh, _axis_weights(va_weights.mu, geo.n_h), np.array([0]))[0]
    sv = _recv_sums(fv, _axis_weights(va_weights.nu, geo.n_v), np.array([0]))[0]
    return sh * sv


def _full_tx_product(
    geo: ArrayGeometry,
    va_true: VirtualAngles,
    module: DelayModule,
    va_beam: VirtualAngles,
    zetas: np.ndarray,
    model: SquintModel,
    normalized: bool = False,
) -> np.ndarray:
    """(K,) transmit-side product w_ch^H f for a full-array steering beam.

    The analog precoder is the bare steering vector (norm sqrt(N)) unless
    ``normalized``.
    """
    ch, cv = module.axis_coeffs(geo.n_h, geo.n_v)
    fh = _axis_channel_factor(geo.n_h, va_true.mu, zetas, ch, model.beam)
    fv = _axis_channel_factor(geo.n_v, va_true.nu, zetas, cv, model.beam)
    scale_h = np.sqrt(geo.n_h) if normalized else 1.0
    scale_v = np.sqrt(geo.n_v) if normalized else 1.0
    th = _tx_sums(fh, np.exp(1j * va_beam.mu * np.arange(geo.n_h)) / scale_h)
    tv = _tx_sums(fv, np.exp(1j * va_beam.nu * np.arange(geo.n_v)) / scale_v)
    return th * tv


def _delay_phase(lp: LinkParams, offsets: np.ndarray) -> np.ndarray:
    return np.exp(-2j * np.pi * offsets * lp.tau)


def bs_angle_snapshots(
    lg: LinkGeometry,
    lp: LinkParams,
    mod_bs: DelayModule,
    mod_ac: DelayModule,
    pattern: SelectionPattern,
    va_w_bs: VirtualAngles,
    va_p_ac: VirtualAngles,
    k_set: np.ndarray,
    pilots: np.ndarray,
    psi_ref_z: float,
    sigma_n: float,
    rng: np.random.Generator,
    model: SquintModel = SquintModel(),
) -> np.ndarray:
    """Uplink snapshot matrix (I_bs x K_l) for the BS angle stage.

    One OFDM symbol per selected subarray; the aircraft transmits through its
    full subarray with unit-norm rough-angle weights, and the transmitter
    pre-compensates Doppler with the reference shift ``psi_ref_z`` (extended
    over the band), leaving the residual ramp in the rows.
    """
    geo = lg.grid
    zetas = np.asarray(geo.squint_ratio(k_set), dtype=float)
    offsets = np.asarray(geo.subcarrier_offset(k_set), dtype=float)
    sel = _selection_products(lg.bs, lp.va_bs, mod_bs, va_w_bs, pattern, zetas, model)
    tx = _full_tx_product(lg.ac, lp.va_ac, mod_ac, va_p_ac, zetas, model, normalized=True)
    c0 = np.sqrt(lp.p * lp.g) * lp.alpha
    ramp = _doppler_residual(
        lp, psi_ref_z, psi_ref_z * geo.lambda_z, offsets, pattern.n_sets, geo.t_sym, model
    )
    y = c0 * sel * tx[None, :] * pilots[None, :] * ramp
    return y + _noise(y.shape, sigma_n, rng)


def ac_angle_snapshots(
    lg: LinkGeometry,
    lp: LinkParams,
    mod_bs: DelayModule,
    mod_ac: DelayModule,
    pattern: SelectionPattern,
    va_f_bs: VirtualAngles,
    va_w_ac: VirtualAngles,
    k_set: np.ndarray,
    pilots: np.ndarray,
    psi_ref_z: float,
    sigma_n: float,
    rng: np.random.Generator,
    model: SquintModel = SquintModel(),
) -> np.ndarray:
    """Downlink snapshot matrix (I_ac x K_l) for the aircraft angle stage.

    The BS transmits its bare steering beam at the (previously estimated)
    angles ``va_f_bs``; selection runs over the aircraft subarray.
    """
    geo = lg.grid
    zetas = np.asarray(geo.squint_ratio(k_set), dtype=float)
    offsets = np.asarray(geo.subcarrier_offset(k_set), dtype=float)
    sel = _selection_products(lg.ac, lp.va_ac, mod_ac, va_w_ac, pattern, zetas, model)
    tx = _full_tx_product(lg.bs, lp.va_bs, mod_bs, va_f_bs, zetas, model)
    c0 = np.sqrt(lp.p * lp.g) * lp.alpha * _delay_phase(lp, offsets)
    ramp = _doppler_residual(
        lp, psi_ref_z, psi_ref_z * geo.lambda_z, offsets, pattern.n_sets, geo.t_sym, model
    )
    y = c0[None, :] * sel * tx[None, :] * pilots[None, :] * ramp
    return y + _noise(y.shape, sigma_n, rng)


def beam_products(
    lg: LinkGeometry,
    lp: LinkParams,
    mod_bs: DelayModule,
    mod_ac: DelayModule,
    va_w_ac: VirtualAngles,
    va_f_bs: VirtualAngles,
    k_set: np.ndarray,
    model: SquintModel = SquintModel(),
) -> np.ndarray:
    """(K,) combined beam product (w^H u)(w_ch^H f) of the aligned DL link."""
    zetas = np.asarray(lg.grid.squint_ratio(k_set), dtype=float)
    rx = _full_recv_product(lg.ac, lp.va_ac, mod_ac, va_w_ac, zetas, model)
    tx = _full_tx_product(lg.bs, lp.va_bs, mod_bs, va_f_bs, zetas, model)
    return rx * tx


def doppler_snapshots(
    lg: LinkGeometry,
    lp: LinkParams,
    mod_bs: DelayModule,
    mod_ac: DelayModule,
    va_w_ac: VirtualAngles,
    va_f_bs: VirtualAngles,
    n_do: int,
    k_set: np.ndarray,
    pilots: np.ndarray,
    sigma_n: float,
    rng: np.random.Generator,
    model: SquintModel = SquintModel(),
) -> np.ndarray:
    """(N_do x K_l) Doppler-stage matrix with the pre-compensation removed.

    Rows carry the full per-symbol Doppler phase (central shift plus squint
    term); beam gains, path-delay steering and pilots scale columns only.
    """
    geo = lg.grid
    offsets = np.asarray(geo.subcarrier_offset(k_set), dtype=float)
    gains = beam_products(lg, lp, mod_bs, mod_ac, va_w_ac, va_f_bs, k_set, model)
    c0 = np.sqrt(lp.p * lp.g) * lp.alpha * _delay_phase(lp, offsets)
    ramp = _doppler_residual(lp, 0.0, 0.0, offsets, n_do, geo.t_sym, model)
    y = (c0 * gains * pilots)[None, :] * ramp
    return y + _noise(y.shape, sigma_n, rng)


def delay_snapshots(
    lg: LinkGeometry,
    lp: LinkParams,
    mod_bs: DelayModule,
    mod_ac: DelayModule,
    va_w_ac: VirtualAngles,
    va_f_bs: VirtualAngles,
    psi_hat_z: float,
    n_de: int,
    k_set: np.ndarray,
    pilots: np.ndarray,
    sigma_n: float,
    rng: np.random.Generator,
    model: SquintModel = SquintModel(),
) -> np.ndarray:
    """(K_l x N_de) delay-stage matrix under fine Doppler pre-compensation.

    Rows are subcarriers carrying the delay steering; the residual Doppler
    ramp (truth minus ``psi_hat_z`` extended over the band) scales columns.
    """
    geo = lg.grid
    offsets = np.asarray(geo.subcarrier_offset(k_set), dtype=float)
    gains = beam_products(lg, lp, mod_bs, mod_ac, va_w_ac, va_f_bs, k_set, model)
    c0 = np.sqrt(lp.p * lp.g) * lp.alpha * _delay_phase(lp, offsets)
    ramp = _doppler_residual(
        lp, psi_hat_z, psi_hat_z * geo.lambda_z, offsets, n_de, geo.t_sym, model
    )
    y = (c0 * gains * pilots)[:, None] * ramp.T
    return y + _noise(y.shape, sigma_n, rng)


def effective_channel_base(
    lg: LinkGeometry,
    lp: LinkParams,
    mod_bs: DelayModule,
    mod_ac: DelayModule,
    va_w_ac: VirtualAngles,
    va_f_bs: VirtualAngles,
    model: SquintModel = SquintModel(),
) -> np.ndarray:
    """(K,) beam-aligned effective channel before per-symbol Doppler.

    h0[k] = sqrt(P G) alpha e^{-j 2 pi ((k-1)/K - 1/2) f_s tau} (w^H u)(w_ch^H f);
    the per-symbol residual ramp is applied by the data-stage caller.
    """
    geo = lg.grid
    ks = np.arange(1, geo.K + 1)
    offsets = np.asarray(geo.subcarrier_offset(ks), dtype=float)
    gains = beam_products(lg, lp, mod_bs, mod_ac, va_w_ac, va_f_bs, ks, model)
    return np.sqrt(lp.p * lp.g) * lp.alpha * _delay_phase(lp, offsets) * gains
