"""Subspace rotational-invariance estimators.

``tls_esprit_1d`` is the classic complex total-least-squares ESPRIT for
Vandermonde data ``a[x] = e^{j x w}`` on a uniform line; ``tdu_esprit_2d`` is
the two-dimensional unitary variant (forward-backward averaging through the
left-Pi-real transformation, shift invariance along both grid axes, joint
pairing through a complex eigendecomposition).

Fixed conventions (nothing observable depends on them for noiseless data):
covariance normalization 1/snapshots, maximum-overlap subarrays, descending
eigenvalue order, TLS via the stacked-SVD construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class EstimationError(RuntimeError):
    """Raised when a subspace estimator cannot produce the requested sources."""

    def __init__(self, message: str, stage: str = ""):
        super().__init__(f"[{stage}] {message}" if stage else message)
        self.stage = stage


@dataclass(frozen=True)
class SnapshotMatrix:
    """Complex observations, elements x snapshots, on a known element grid.

    ``grid`` is an int for 1D data or ``(i_h, i_v)`` for 2D data whose flat
    element index is horizontal-first row-major.
    """

    data: np.ndarray
    grid: int | tuple[int, int]

    def __post_init__(self):
        if self.data.ndim != 2 or self.data.shape[1] < 1:
            raise ValueError("snapshot matrix must be 2D with >= 1 snapshots")
        n = self.grid if isinstance(self.grid, int) else self.grid[0] * self.grid[1]
        if self.data.shape[0] != n:
            raise ValueError("element count does not match the grid")


def _signal_subspace(data: np.ndarray, sources: int, stage: str) -> np.ndarray:
    # Dominant left singular vectors; identical to eigenvectors of the
    # (1/S) Y Y^H sample covariance.
    u, s, _ = np.linalg.svd(data, full_matrices=False)
    if sources > s.size or s[sources - 1] <= max(data.shape) * np.finfo(float).eps * max(s[0], 1e-300):
        raise EstimationError("data rank below requested source count", stage)
    return u[:, :sources]

def _tls_rotation(e1: np.ndarray, e2: np.ndarray, stage: str) -> np.ndarray:
    # Total-least-squares solve of e1 @ psi = e2 via the stacked SVD.
    d = e1.shape[1]
    if e1.shape[0] < 2 * d:
        raise EstimationError("underdetermined shift-invariance system", stage)
    _, _, vh = np.linalg.svd(np.hstack([e1, e2]), full_matrices=False)
    f = vh.conj().T[:, d:]
    f12, f22 = f[:d], f[d:]
    if np.linalg.cond(f22) > 1e12:
        raise EstimationError("degenerate TLS system", stage)
    return -f12 @ np.linalg.inv(f22)


def tls_esprit_1d(sm: SnapshotMatrix, sources: int = 1) -> np.ndarray:
    """Recover rotational phases w in (-pi, pi] from 1D Vandermonde data.

    Uses maximum-overlap subarrays (length N-1) and a TLS solve of the
    rotation operator; phases are returned in descending-eigenvalue order.
    """
    if not isinstance(sm.grid, int):
        raise ValueError("1D estimator needs an int grid")
    n, snaps = sm.data.shape
    if n < sources + 1:
        raise EstimationError("need more elements than sources", "tls-esprit")
    if snaps < sources:
        raise EstimationError("need at least as many snapshots as sources", "tls-esprit")
    es = _signal_subspace(sm.data, sources, "tls-esprit")
    psi = _tls_rotation(es[:-1], es[1:], "tls-esprit")
    return np.angle(np.linalg.eigvals(psi))


def _unitary_q(n: int) -> np.ndarray:
    # Left-Pi-real sparse unitary transformation.
    half = n // 2
    eye = np.eye(half)
    flip = np.fliplr(eye)
    if n % 2 == 0:
        q = np.block([[eye, 1j * eye], [flip, -1j * flip]])
    else:
        col = np.zeros((half, 1))
        q = np.block(
            [
                [eye, col, 1j * eye],
                [col.T, np.array([[np.sqrt(2.0)]]), col.T],
                [flip, col, -1j * flip],
            ]
        )
    return q / np.sqrt(2.0)


def _fb_real_data(y: np.ndarray) -> np.ndarray:
    # Forward-backward extension [Y, Pi conj(Y) Pi] mapped to a real matrix.
    # The right transform Q_{2S} is applied through its block structure so no
    # 2S x 2S matrix is ever formed:
    #   [A, B] Q_{2S} = [(A + B Pi)/sqrt2, j (A - B Pi)/sqrt2],  B Pi = Pi conj(Y).
    yb = np.flipud(np.conj(y))
    ext = np.hstack([y + yb, 1j * (y - yb)]) / np.sqrt(2.0)
    g = _unitary_q(y.shape[0]).conj().T @ ext
    return np.ascontiguousarray(g.real)


def _shift_pair(n_sel: int, j2: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    # Real-valued invariance matrices K1 = 2 Re(Q_m^H J2 Q_n), K2 = 2 Im(...).
    t = _unitary_q(n_sel).conj().T @ j2 @ _unitary_q(n)
    return 2.0 * t.real, 2.0 * t.imag


def _axis_selection(i_h: int, i_v: int, axis: str) -> np.ndarray:
    # Second (shifted) selection matrix along one grid axis, flat index
    # horizontal-first row-major.
    if axis == "h":
        j2 = np.eye(i_h - 1, i_h, k=1)
        return np.kron(np.eye(i_v), j2)
    j2 = np.eye(i_v - 1, i_v, k=1)
    return np.kron(j2, np.eye(i_h))


def tdu_esprit_2d(sm: SnapshotMatrix, sources: int = 1) -> list[tuple[float, float]]:
    """Jointly estimate (mu, nu) pairs from data on an i_h x i_v grid.

    Real-valued invariance equations are solved per axis and paired through
    the eigendecomposition of Psi_h + j Psi_v, whose eigenvalues are
    tan(mu/2) + j tan(nu/2).
    """
    if isinstance(sm.grid, int):
        raise ValueError("2D estimator needs an (i_h, i_v) grid")
    i_h, i_v = sm.grid
    if i_h < 2 or i_v < 2:
        raise EstimationError("grid must be at least 2x2", "tdu-esprit")
    if sm.data.shape[1] < sources:
        raise EstimationError("need at least as many snapshots as sources", "tdu-esprit")
    n = i_h * i_v
    g = _fb_real_data(sm.data)
    u, s, _ = np.linalg.svd(g, full_matrices=False)
    if s[sources - 1] <= max(g.shape) * np.finfo(float).eps * max(s[0], 1e-300):
        raise EstimationError("data rank below requested source count", "tdu-esprit")
    es = u[:, :sources]

    psis = []
    for axis in ("h", "v"):
        j2 = _axis_selection(i_h, i_v, axis)
        k1, k2 = _shift_pair(j2.shape[0], j2, n)
        psis.append(_tls_rotation(k1 @ es, k2 @ es, "tdu-esprit"))
    lam = np.linalg.eigvals(psis[0] + 1j * psis[1])
    return [(2.0 * np.arctan(l.real), 2.0 * np.arctan(l.imag)) for l in lam]
