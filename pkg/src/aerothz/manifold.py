"""UPA manifold algebra: steering vectors, squint vectors and delay geometry.

Conventions used everywhere in this package:

* antennas of an ``n_h x n_v`` uniform planar array are indexed 1-based as
  ``(n_h', n_v')`` with flat index ``n = (n_v' - 1) * n_h + n_h'``
  (horizontal-first, row-major);
* subcarriers are indexed 1-based, ``k = 1..K``; the baseband frequency
  offset of subcarrier ``k`` is ``((k - 1)/K - 1/2) * f_s`` so the zero
  offset sits at ``k = K/2 + 1``;
* all angles are in radians.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constants import SPEED_OF_LIGHT


@dataclass(frozen=True)
class ArrayGeometry:
    """One side's UPA dimensions plus the OFDM grid it transmits on.

    Parameters
    ----------
    n_h, n_v : int
        Antenna counts in the horizontal / vertical directions.
    d : float
        Adjacent antenna spacing in meters (half-wavelength at ``f_z``).
    f_z : float
        Central carrier frequency in Hz.
    f_s : float
        System bandwidth in Hz.
    K : int
        Number of OFDM subcarriers (a power of two).
    n_cp : int
        Cyclic-prefix length in samples.
    """

    n_h: int
    n_v: int
    d: float
    f_z: float
    f_s: float
    K: int
    n_cp: int

    def __post_init__(self):
        if self.n_h < 1 or self.n_v < 1:
            raise ValueError("array dimensions must be >= 1")
        lamz_half = SPEED_OF_LIGHT / (2.0 * self.f_z)
        if abs(self.d - lamz_half) > 1e-12 * lamz_half:
            raise ValueError("antenna spacing must be half-wavelength at f_z")
        if not self.f_s < self.f_z:
            raise ValueError("bandwidth must be below the carrier frequency")
        if self.K < 2 or (self.K & (self.K - 1)) != 0:
            raise ValueError("K must be a power of two")
        if not 0 < self.n_cp < self.K:
            raise ValueError("n_cp must satisfy 0 < n_cp < K")

    @property
    def n_total(self) -> int:
        return self.n_h * self.n_v

    @property
    def t_s(self) -> float:
        """Sample period 1/f_s in seconds."""
        return 1.0 / self.f_s

    @property
    def t_sym(self) -> float:
        """OFDM symbol duration (K + n_cp) * t_s in seconds."""
        return (self.K + self.n_cp) * self.t_s

    @property
    def lambda_z(self) -> float:
        return SPEED_OF_LIGHT / self.f_z

    def subcarrier_offset(self, k) -> np.ndarray:
        """Baseband frequency offset ((k-1)/K - 1/2) * f_s for 1-based k."""
        k = np.asarray(k)
        self._check_k(k)
        return ((k - 1.0) / self.K - 0.5) * self.f_s

    def squint_ratio(self, k) -> np.ndarray:
        """Relative squint factor ((k-1)/K - 1/2) * f_s / f_z for 1-based k."""
        return self.subcarrier_offset(k) / self.f_z

    def _check_k(self, k):
        k = np.asarray(k)
        if np.any(k < 1) or np.any(k > self.K):
            raise ValueError(f"subcarrier index out of range 1..{self.K}")


def make_geometry(n_h: int, n_v: int, f_z: float, f_s: float, K: int, n_cp: int) -> ArrayGeometry:
    """Build an ArrayGeometry with the spacing pinned to lambda_z / 2."""
    return ArrayGeometry(
        n_h=n_h, n_v=n_v, d=SPEED_OF_LIGHT / (2.0 * f_z), f_z=f_z, f_s=f_s, K=K, n_cp=n_cp
    )


@dataclass(frozen=True)
class VirtualAngles:
    """Horizontal / vertical virtual angles (phase slopes of the manifold)."""

    mu: float
    nu: float

    def __post_init__(self):
        if abs(self.mu) > np.pi or abs(self.nu) > np.pi:
            raise ValueError("virtual angles must lie in [-pi, pi]")


def virtual_angles(theta: float, phi: float) -> VirtualAngles:
    """Map azimuth/elevation to virtual angles mu = pi sin(theta) cos(phi), nu = pi sin(phi).

    Both physical angles must lie strictly inside (-pi/2, pi/2).
    """
    half = np.pi / 2
    if not (-half < theta < half) or not (-half < phi < half):
        raise ValueError("azimuth/elevation must lie in (-pi/2, pi/2)")
    return VirtualAngles(mu=np.pi * np.sin(theta) * np.cos(phi), nu=np.pi * np.sin(phi))


def physical_angles(va: VirtualAngles) -> tuple[float, float]:
    """Invert :func:`virtual_angles`; inverse of the (theta, phi) -> (mu, nu) map."""
    phi = float(np.arcsin(np.clip(va.nu / np.pi, -1.0, 1.0)))
    denom = np.pi * np.cos(phi)
    theta = float(np.arcsin(np.clip(va.mu / denom, -1.0, 1.0)))
    return theta, phi


def steering_vector_1d(mu: float, n: int) -> np.ndarray:
    """Unit-modulus 1D steering vector [1, e^{j mu}, ..., e^{j (n-1) mu}]."""
    if n < 1:
        raise ValueError("steering vector length must be >= 1")
    return np.exp(1j * mu * np.arange(n))


def squint_vector_1d(mu: float, n: int, k: int, geo: ArrayGeometry) -> np.ndarray:
    """Frequency-dependent squint vector at subcarrier k.

    Element ``x`` (0-based) is ``exp(j ((k-1)/K - 1/2) (f_s/f_z) x mu)``; the
    vector is all-ones at the central subcarrier ``k = K/2 + 1``.
    """
    if n < 1:
        raise ValueError("squint vector length must be >= 1")
    zeta = float(geo.squint_ratio(k))
    return np.exp(1j * zeta * mu * np.arange(n))


def upa_vector(va: VirtualAngles, n_h: int, n_v: int) -> np.ndarray:
    """Full UPA steering vector a_v(nu, n_v) kron a_h(mu, n_h).

    The flat element order matches ``n = (n_v' - 1) n_h + n_h'``.
    """
    return np.kron(steering_vector_1d(va.nu, n_v), steering_vector_1d(va.mu, n_h))


def upa_squint_vector(va: VirtualAngles, n_h: int, n_v: int, k: int, geo: ArrayGeometry) -> np.ndarray:
    """Full UPA squint vector (vertical kron horizontal) at subcarrier k."""
    return np.kron(
        squint_vector_1d(va.nu, n_v, k, geo), squint_vector_1d(va.mu, n_h, k, geo)
    )


def antenna_delay(n_h: int, n_v: int, theta: float, phi: float, geo: ArrayGeometry) -> float:
    """Propagation delay of antenna (n_h, n_v) relative to element (1, 1).

    The wave path-difference is the projection of the element position onto
    the arrival direction, divided by c:
    ``((n_h-1) d sin(theta) cos(phi) + (n_v-1) d sin(phi)) / c``.
    """
    if not (1 <= n_h <= geo.n_h) or not (1 <= n_v <= geo.n_v):
        raise ValueError("antenna index outside the array")
    path = (n_h - 1) * geo.d * np.sin(theta) * np.cos(phi) + (n_v - 1) * geo.d * np.sin(phi)
    return path / SPEED_OF_LIGHT
