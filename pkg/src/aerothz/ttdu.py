"""True-time-delay compensation vectors: ideal per-antenna units and the
grouped approximation (one delay unit per antenna group, residual phases
handled by the frequency-flat phase-shift network).

A compensation vector holds the frequency-dependent phase a delay module
imprints on each antenna at subcarrier ``k``; applying its conjugate to a
channel steering factor cancels the beam squint exactly when the module was
tuned to the true angles.  Frequency-flat steering phases are the job of the
beamforming weights, not of these vectors, so every entry reduces to 1 at the
central subcarrier.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .manifold import ArrayGeometry, VirtualAngles


@dataclass(frozen=True)
class GroupingSpec:
    """Antenna group size of a grouped delay module (same for all groups)."""

    m_h: int
    m_v: int

    def __post_init__(self):
        if self.m_h < 1 or self.m_v < 1:
            raise ValueError("group dimensions must be >= 1")

    def validate(self, n_h: int, n_v: int):
        if n_h % self.m_h or n_v % self.m_v:
            raise ValueError(
                f"grouping {self.m_h}x{self.m_v} does not divide array {n_h}x{n_v}"
            )


def group_centers(n: int, m: int) -> np.ndarray:
    """0-based index of each element's group-center element along one axis.

    The center of a group of ``m`` elements is its ceil(m/2)-th element
    (1-based), i.e. the lower of the two central candidates when ``m`` is
    even.
    """
    x = np.arange(n)
    center_off = (m + 1) // 2 - 1
    return (x // m) * m + center_off


def _axis_phase_slope(mu_t: float, n: int, m: int | None) -> np.ndarray:
    # Frequency-dependent phase coefficient per element: x*mu for the ideal
    # module, group-center*mu for the grouped one.
    if m is None:
        return np.arange(n) * mu_t
    return group_centers(n, m) * mu_t


def ideal_ttdu_vector(
    va_t: VirtualAngles, n_h: int, n_v: int, k: int, geo: ArrayGeometry
) -> np.ndarray:
    """Per-antenna compensation phases of an ideal delay module tuned to va_t.

    Equals the UPA squint vector at (mu_t, nu_t); conjugate application to a
    channel factor removes the squint exactly when the tuning angles match
    the true ones.
    """
    zeta = float(geo.squint_ratio(k))
    slope = np.add.outer(
        _axis_phase_slope(va_t.nu, n_v, None), _axis_phase_slope(va_t.mu, n_h, None)
    ).ravel()
    return np.exp(1j * zeta * slope)


def gttdu_vector(
    va_t: VirtualAngles,
    n_h: int,
    n_v: int,
    grp: GroupingSpec,
    k: int,
    geo: ArrayGeometry,
) -> np.ndarray:
    """Compensation phases of the grouped delay module.

    Each antenna shares its group center's delay unit, so the
    frequency-dependent phase coefficient is the center element's; the
    remaining frequency-flat steering deviations are benchmarked at the
    central carrier (where the delay units contribute no phase) and absorbed
    by the phase-shift network, i.e. the beam weights.  A 1x1 grouping
    degenerates to the ideal module.
    """
    grp.validate(n_h, n_v)
    zeta = float(geo.squint_ratio(k))
    slope = np.add.outer(
        _axis_phase_slope(va_t.nu, n_v, grp.m_v), _axis_phase_slope(va_t.mu, n_h, grp.m_h)
    ).ravel()
    return np.exp(1j * zeta * slope)


@dataclass(frozen=True)
class DelayModule:
    """One side's delay-compensation hardware configuration.

    ``mode`` selects no module, the ideal per-antenna module, or the grouped
    module; ``angles`` are the virtual angles the module is tuned to (rough
    at link setup, refined once fine estimates exist).
    """

    mode: str = "none"
    angles: VirtualAngles | None = None
    grouping: GroupingSpec | None = None

    def __post_init__(self):
        if self.mode not in ("none", "ideal", "gttdu"):
            raise ValueError("mode must be none/ideal/gttdu")
        if self.mode != "none" and self.angles is None:
            raise ValueError("tuned angles required")
        if self.mode == "gttdu" and self.grouping is None:
            raise ValueError("grouped module needs a GroupingSpec")

    def retuned(self, angles: VirtualAngles) -> "DelayModule":
        if self.mode == "none":
            return self
        return DelayModule(mode=self.mode, angles=angles, grouping=self.grouping)

    def axis_coeffs(self, n_h: int, n_v: int) -> tuple[np.ndarray, np.ndarray]:
        """Per-element frequency-dependent phase coefficients (h, v axes).

        The compensation factor at subcarrier k is exp(j zeta_k coeff[x])
        along each axis; zero coefficients mean no compensation.
        """
        if self.mode == "none":
            return np.zeros(n_h), np.zeros(n_v)
        if self.mode == "ideal":
            return np.arange(n_h) * self.angles.mu, np.arange(n_v) * self.angles.nu
        self.grouping.validate(n_h, n_v)
        return (
            group_centers(n_h, self.grouping.m_h) * self.angles.mu,
            group_centers(n_v, self.grouping.m_v) * self.angles.nu,
        )

    def vector(self, n_h: int, n_v: int, k: int, geo: ArrayGeometry) -> np.ndarray:
        """Full compensation vector over the UPA at subcarrier k."""
        if self.mode == "none":
            return np.ones(n_h * n_v, dtype=complex)
        if self.mode == "ideal":
            return ideal_ttdu_vector(self.angles, n_h, n_v, k, geo)
        return gttdu_vector(self.angles, n_h, n_v, self.grouping, k, geo)


@dataclass(frozen=True)
class CompensationPair:
    """Compensation vectors for both link ends plus the angles they encode.

    ``comp_ac`` / ``comp_bs`` are unit-modulus vectors over the aircraft /
    base-station arrays at one subcarrier; ``angle_basis`` records which
    (mu, nu) pair built each side so stale compensation can be detected.
    """

    comp_ac: np.ndarray
    comp_bs: np.ndarray
    angle_basis: tuple[VirtualAngles, VirtualAngles]

    def __post_init__(self):
        for v in (self.comp_ac, self.comp_bs):
            if not np.allclose(np.abs(v), 1.0, atol=1e-12):
                raise ValueError("compensation entries must be unit modulus")


def apply_pair(u: np.ndarray, w: np.ndarray, pair: CompensationPair) -> tuple[np.ndarray, np.ndarray]:
    """Apply a compensation pair to rank-1 channel factors.

    Returns ``(u * conj(comp_ac), w * conj(comp_bs))``; with matching angles
    this strips the squint component from both factors.
    """
    if u.shape != pair.comp_ac.shape or w.shape != pair.comp_bs.shape:
        raise ValueError("compensation pair does not match factor dimensions")
    return u * np.conj(pair.comp_ac), w * np.conj(pair.comp_bs)
