"""Reconfigurable RF selection network: subarray patterns that synthesize an
equivalent low-dimensional fully-digital array, and the beam vectors placed
on them.

Collecting one OFDM symbol per selected subarray, under fixed weights read at
the reference subarray, makes the combined outputs differ only by regular
phase shifts ``exp(j Omega ((i_h-1) mu + (i_v-1) nu))`` so the stacked symbol
vector behaves like an ``i_h x i_v`` digital array with element spacing
``Omega`` times the physical spacing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .manifold import VirtualAngles, steering_vector_1d


@dataclass(frozen=True)
class SelectionPattern:
    """Subarray index sets forming an equivalent i_h x i_v digital array.

    ``omega`` is the sparse spacing (1 reproduces the dense critical-spacing
    construction); subarray ``m = (i_v'-1) i_h + i_h'`` is the contiguous
    ``sub_h x sub_v`` block offset by ``(omega (i_h'-1), omega (i_v'-1))``.
    """

    n_h: int
    n_v: int
    i_h: int
    i_v: int
    omega: int

    def __post_init__(self):
        if self.omega < 1:
            raise ValueError("sparse spacing must be >= 1")
        if self.sub_h < 1 or self.sub_v < 1:
            raise ValueError("equivalent-array dimensions infeasible for this UPA")

    @property
    def sub_h(self) -> int:
        return self.n_h - self.omega * (self.i_h - 1)

    @property
    def sub_v(self) -> int:
        return self.n_v - self.omega * (self.i_v - 1)

    @property
    def n_sets(self) -> int:
        return self.i_h * self.i_v

    @property
    def m_bar(self) -> int:
        """Antennas per selected subarray."""
        return self.sub_h * self.sub_v

    def shifts(self, m: int) -> tuple[int, int]:
        """(horizontal, vertical) element offset of subarray m (1-based)."""
        if not 1 <= m <= self.n_sets:
            raise ValueError("subarray index out of range")
        ih = (m - 1) % self.i_h
        iv = (m - 1) // self.i_h
        return self.omega * ih, self.omega * iv

    def index_set(self, m: int) -> np.ndarray:
        """Flat 0-based antenna indices of subarray m, horizontal-first order."""
        dh, dv = self.shifts(m)
        hh = np.arange(self.sub_h) + dh
        vv = np.arange(self.sub_v) + dv
        return (vv[:, None] * self.n_h + hh[None, :]).ravel()

    @property
    def index_sets(self) -> list[np.ndarray]:
        return [self.index_set(m) for m in range(1, self.n_sets + 1)]


def make_pattern(n_h: int, n_v: int, i_h: int, i_v: int, omega: int = 1) -> SelectionPattern:
    """Build a selection pattern, rejecting infeasible dimensions."""
    if omega * (i_h - 1) >= n_h or omega * (i_v - 1) >= n_v:
        raise ValueError("omega * (i - 1) must be smaller than the array dimension")
    return SelectionPattern(n_h=n_h, n_v=n_v, i_h=i_h, i_v=i_v, omega=omega)


@dataclass(frozen=True)
class BeamVector:
    """Sparse analog beam: weights on an active antenna set, zero elsewhere."""

    indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if self.indices.shape != self.values.shape:
            raise ValueError("indices/values size mismatch")
        nrm = np.linalg.norm(self.values)
        if abs(nrm - 1.0) > 1e-9:
            raise ValueError("beam vector must have unit l2 norm")

    def dense(self, n_total: int) -> np.ndarray:
        out = np.zeros(n_total, dtype=complex)
        out[self.indices] = self.values
        return out


def build_beam(
    pattern_set_m: np.ndarray,
    va_t: VirtualAngles,
    reference_set: np.ndarray,
    n_h: int,
) -> BeamVector:
    """Weights for one selected subarray: steering phases read at the
    reference set's positions, scaled 1/sqrt(M).

    Reading the phases at set 1 for every set is what makes the combined
    outputs of successive sets trace the equivalent-array phase progression.
    """
    if pattern_set_m.size != reference_set.size:
        raise ValueError("subarray and reference set sizes differ")
    ph = reference_set % n_h
    pv = reference_set // n_h
    vals = np.exp(1j * (ph * va_t.mu + pv * va_t.nu)) / np.sqrt(reference_set.size)
    return BeamVector(indices=pattern_set_m, values=vals)


def equivalent_snapshot(y_per_symbol) -> np.ndarray:
    """Stack the per-symbol combined outputs into the equivalent-array vector.

    For noiseless squint-free data the result is proportional to
    ``a_v(Omega nu, i_v) kron a_h(Omega mu, i_h)``.
    """
    return np.asarray(list(y_per_symbol), dtype=complex)
