"""Closed-form Cramer-Rao lower bounds for the equivalent-array signal models
(angles with sparse spacing, Doppler, delay) plus a log-likelihood based
numerical cross-check of the Fisher information.

All models share the structure Y = gamma a(param) s^T + N with a complex
nuisance gain, unit-variance-per-entry noise sigma_n^2, and deterministic
pilots; the bounds are the param block of the inverse FIM with the gain
projected out:

    CRLB = sigma_n^2 / (2 |gamma|^2) * inv( sum_k |s_k|^2
           Re{ D^H (I - Phi) D } )

with D the manifold derivative(s) and Phi the projector onto a.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .manifold import steering_vector_1d


class BoundError(RuntimeError):
    """Raised for singular or degenerate bound evaluations."""


@dataclass(frozen=True)
class BoundInputs:
    """Evaluation point of one bound.

    ``gamma`` is the stage's effective complex gain (beamforming gains
    folded in), ``pilots`` the per-snapshot deterministic symbols; ``grid``
    is (i_h, i_v) for the angle bound, the snapshot count for the Doppler
    bound, and the 1-based subcarrier index set for the delay bound.
    """

    gamma: complex
    sigma_n2: float
    pilots: np.ndarray
    grid: tuple[int, int] | int | np.ndarray
    omega: int = 1
    mu_bar: float = 0.0
    nu_bar: float = 0.0
    nu_psi: float = 0.0
    mu_tau: float = 0.0
    t_sym: float = 0.0
    n_fft: int = 0

    def __post_init__(self):
        if self.sigma_n2 <= 0:
            raise BoundError("noise variance must be positive")
        if abs(self.gamma) == 0:
            raise BoundError("zero effective gain gives an unbounded CRLB")


def _projected_information(a: np.ndarray, derivs: np.ndarray, pilots: np.ndarray) -> np.ndarray:
    # sum_k |s_k|^2 Re{ D^H (I - Phi) D }, the gain-projected FIM core.
    proj = derivs - a[:, None] * (np.conj(a) @ derivs)[None, :] / np.vdot(a, a)
    m = np.real(np.conj(derivs.T) @ proj)
    return float(np.sum(np.abs(pilots) ** 2)) * m


def crlb_virtual_angles(bi: BoundInputs) -> np.ndarray:
    """2x2 CRLB of the equivalent-array virtual angles [nu_bar, mu_bar]."""
    i_h, i_v = bi.grid
    ah = steering_vector_1d(bi.mu_bar, i_h)
    av = steering_vector_1d(bi.nu_bar, i_v)
    a = np.kron(av, ah)
    d_mu = np.kron(av, 1j * np.arange(i_h) * ah)
    d_nu = np.kron(1j * np.arange(i_v) * av, ah)
    m = _projected_information(a, np.stack([d_nu, d_mu], axis=1), bi.pilots)
    if np.linalg.cond(m) > 1e12:
        raise BoundError("singular angle FIM (degenerate grid)")
    return bi.sigma_n2 / (2.0 * abs(bi.gamma) ** 2) * np.linalg.inv(m)


def crlb_angles(bi: BoundInputs) -> tuple[float, float]:
    """(CRLB_theta, CRLB_phi) in rad^2 at the evaluation point.

    The virtual-angle bound is pushed through the full Jacobian of
    phi = arcsin(nu_bar / (Omega pi)),
    theta = arcsin(mu_bar / (Omega pi cos(phi))); the sparse spacing Omega
    scales every Jacobian entry by 1/Omega, which is the exact Omega^2 gain
    of the sparse array.
    """
    c_xi = crlb_virtual_angles(bi)
    opi = bi.omega * np.pi
    phi = np.arcsin(np.clip(bi.nu_bar / opi, -1.0, 1.0))
    sin_th = bi.mu_bar / (opi * np.cos(phi))
    if abs(sin_th) >= 1.0 or abs(np.cos(phi)) < 1e-12:
        raise BoundError("evaluation point outside the physical angle range")
    theta = np.arcsin(sin_th)
    dphi_dnu = 1.0 / (opi * np.cos(phi))
    dth_dmu = 1.0 / (opi * np.cos(phi) * np.cos(theta))
    dth_dnu = np.tan(theta) * np.tan(phi) * dphi_dnu
    jac = np.array([[dphi_dnu, 0.0], [dth_dnu, dth_dmu]])
    c = jac @ c_xi @ jac.T
    return float(c[1, 1]), float(c[0, 0])


def crlb_doppler(bi: BoundInputs) -> float:
    """CRLB of the central-carrier Doppler shift in Hz^2.

    The virtual-Doppler bound over the n_do symbol grid is scaled by
    (2 pi t_sym)^-2.
    """
    n_do = int(bi.grid)
    if n_do < 2:
        raise BoundError("need at least two symbols for the Doppler bound")
    if bi.t_sym <= 0:
        raise BoundError("t_sym required for the Doppler transform")
    a = steering_vector_1d(bi.nu_psi, n_do)
    d = (1j * np.arange(n_do) * a)[:, None]
    m = _projected_information(a, d, bi.pilots)
    if m[0, 0] <= 0:
        raise BoundError("singular Doppler FIM")
    crlb_nu = bi.sigma_n2 / (2.0 * abs(bi.gamma) ** 2) / m[0, 0]
    return float(crlb_nu / (2.0 * np.pi * bi.t_sym) ** 2)


def crlb_delay(bi: BoundInputs) -> float:
    """CRLB of the normalized delay f_s * tau (dimensionless squared).

    Works on the interval-spaced subcarrier index set; the virtual-delay
    bound is scaled by K^2 / (2 pi)^2.  Shift invariance of the Vandermonde
    projector makes the result independent of the true delay.
    """
    k_set = np.asarray(bi.grid)
    if k_set.size < 2:
        raise BoundError("need at least two subcarriers for the delay bound")
    if bi.n_fft < 2:
        raise BoundError("n_fft required for the delay transform")
    idx = k_set - 1
    a = np.exp(1j * idx * bi.mu_tau)
    d = (1j * idx * a)[:, None]
    m = _projected_information(a, d, bi.pilots)
    if m[0, 0] <= 0:
        raise BoundError("singular delay FIM")
    crlb_mu = bi.sigma_n2 / (2.0 * abs(bi.gamma) ** 2) / m[0, 0]
    return float(bi.n_fft**2 * crlb_mu / (2.0 * np.pi) ** 2)


# ---------------------------------------------------------------------------
# Numerical cross-check
# ---------------------------------------------------------------------------


def _angle_model(bi: BoundInputs, gamma: complex, nu_bar: float, mu_bar: float) -> np.ndarray:
    i_h, i_v = bi.grid
    a = np.kron(steering_vector_1d(nu_bar, i_v), steering_vector_1d(mu_bar, i_h))
    return gamma * np.outer(a, bi.pilots)


def fim_numerical_check(bi: BoundInputs, step: float = 1e-5) -> float:
    """Cross-check the closed-form angle bound against a finite-difference
    Fisher information built from the expected log-likelihood.

    Returns the maximum relative deviation between the closed form and the
    virtual-angle block of the inverse numerical FIM.
    """
    eta0 = np.array([bi.gamma.real, bi.gamma.imag, bi.nu_bar, bi.mu_bar])
    m0 = _angle_model(bi, bi.gamma, bi.nu_bar, bi.mu_bar)

    def neg_expected_ll(eta: np.ndarray) -> float:
        m = _angle_model(bi, complex(eta[0], eta[1]), eta[2], eta[3])
        return float(np.sum(np.abs(m - m0) ** 2)) / bi.sigma_n2

    dim = 4
    fim = np.zeros((dim, dim))
    for i in range(dim):
        for j in range(dim):
            acc = 0.0
            for si in (+1, -1):
                for sj in (+1, -1):
                    eta = eta0.copy()
                    eta[i] += si * step
                    eta[j] += sj * step
                    acc += si * sj * neg_expected_ll(eta)
            fim[i, j] = acc / (4.0 * step**2)
    if not np.all(np.isfinite(fim)):
        raise BoundError("non-finite numerical FIM (step-size pathology)")
    xi_block = np.linalg.inv(fim)[2:, 2:]
    closed = crlb_virtual_angles(bi)
    return float(np.max(np.abs(xi_block - closed)) / np.max(np.abs(closed)))
