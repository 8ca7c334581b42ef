import numpy as np
import pytest

from aerothz.manifold import VirtualAngles, make_geometry, upa_vector
from aerothz.selection import BeamVector, build_beam, equivalent_snapshot, make_pattern

GEO = make_geometry(5, 5, 0.1e12, 1e9, 2048, 128)


class TestMakePattern:
    def test_fig7_dense_partition(self):
        # 5x5 array, 2x2 equivalent, omega 1: four 4x4 subarrays shifted by 1
        p = make_pattern(5, 5, 2, 2, 1)
        assert (p.sub_h, p.sub_v, p.n_sets) == (4, 4, 4)
        assert p.shifts(1) == (0, 0)
        assert p.shifts(2) == (1, 0)
        assert p.shifts(3) == (0, 1)
        assert p.shifts(4) == (1, 1)
        s1 = p.index_set(1).reshape(4, 4)
        assert np.array_equal(s1[0], [0, 1, 2, 3])
        assert np.array_equal(p.index_set(2).reshape(4, 4)[0], [1, 2, 3, 4])

    def test_fig8_sparse_partition(self):
        # omega 2: four 3x3 subarrays shifted by 2
        p = make_pattern(5, 5, 2, 2, 2)
        assert (p.sub_h, p.sub_v) == (3, 3)
        assert p.shifts(4) == (2, 2)
        assert p.index_set(4)[0] == 2 * 5 + 2

    def test_single_set_full_array(self):
        p = make_pattern(5, 5, 1, 1, 1)
        assert p.m_bar == 25
        assert np.array_equal(p.index_set(1), np.arange(25))

    def test_infeasible_rejected(self):
        with pytest.raises(ValueError):
            make_pattern(5, 5, 2, 2, 5)
        with pytest.raises(ValueError):
            make_pattern(4, 4, 5, 5, 1)

    def test_set_cardinality_invariant(self):
        p = make_pattern(9, 7, 3, 2, 2)
        for m in range(1, p.n_sets + 1):
            assert p.index_set(m).size == p.sub_h * p.sub_v


class TestBuildBeam:
    def test_reference_set_matched_phases(self):
        p = make_pattern(5, 5, 2, 2, 1)
        va = VirtualAngles(0.7, -0.3)
        b = build_beam(p.index_set(1), va, p.index_set(1), 5)
        full = upa_vector(va, 5, 5)
        assert np.allclose(b.values * np.sqrt(16), full[p.index_set(1)])

    def test_boresight_uniform(self):
        p = make_pattern(5, 5, 2, 2, 1)
        b = build_beam(p.index_set(3), VirtualAngles(0, 0), p.index_set(1), 5)
        assert np.allclose(b.values, 1.0 / 4.0)

    def test_unit_norm_always(self):
        p = make_pattern(7, 6, 2, 3, 2)
        for m in range(1, p.n_sets + 1):
            b = build_beam(p.index_set(m), VirtualAngles(1.2, 0.4), p.index_set(1), 7)
            assert np.linalg.norm(b.values) == pytest.approx(1.0, abs=1e-12)

    def test_shift_gains_equivalent_phase(self):
        # With true angles in the weights and no squint, the combined output
        # of the shifted set differs from set 1 by exp(j Omega (dh mu + dv nu)).
        n_h = n_v = 9
        va = VirtualAngles(0.9, -0.4)
        full = upa_vector(va, n_h, n_v)
        for omega in (1, 3):
            p = make_pattern(n_h, n_v, 2, 2, omega)
            outs = []
            for m in range(1, 5):
                b = build_beam(p.index_set(m), va, p.index_set(1), n_h)
                outs.append(np.vdot(b.dense(n_h * n_v), full))
            assert outs[1] / outs[0] == pytest.approx(np.exp(1j * omega * va.mu), rel=1e-12)
            assert outs[2] / outs[0] == pytest.approx(np.exp(1j * omega * va.nu), rel=1e-12)

    def test_cardinality_mismatch(self):
        p = make_pattern(5, 5, 2, 2, 1)
        with pytest.raises(ValueError):
            build_beam(p.index_set(1)[:-1], VirtualAngles(0, 0), p.index_set(1), 5)


class TestEquivalentSnapshot:
    def _collect(self, n, va, i, omega, va_w=None):
        p = make_pattern(n, n, i, i, omega)
        full = upa_vector(va, n, n)
        va_w = va_w or va
        return equivalent_snapshot(
            np.vdot(build_beam(p.index_set(m), va_w, p.index_set(1), n).dense(n * n), full)
            for m in range(1, p.n_sets + 1)
        )

    def test_recovers_planted_angles(self):
        va = VirtualAngles(0.62, -1.05)
        y = self._collect(11, va, 3, 1)
        ratios_h = y[1] / y[0]
        ratios_v = y[3] / y[0]
        assert np.angle(ratios_h) == pytest.approx(va.mu, abs=1e-10)
        assert np.angle(ratios_v) == pytest.approx(va.nu, abs=1e-10)

    def test_proportional_to_sparse_manifold(self):
        # Stacked vector equals gamma * (a_v(omega nu) kron a_h(omega mu)).
        rng = np.random.default_rng(5)
        for omega in (1, 2, 4):
            va = VirtualAngles(rng.uniform(-0.7, 0.7), rng.uniform(-0.7, 0.7))
            va_w = VirtualAngles(va.mu + 0.05, va.nu - 0.03)
            i = 2
            y = self._collect(13, va, i, omega, va_w)
            man = np.kron(
                np.exp(1j * omega * va.nu * np.arange(i)),
                np.exp(1j * omega * va.mu * np.arange(i)),
            )
            ratios = y / (man * y[0])
            assert np.max(np.abs(ratios - 1.0)) < 1e-10

    def test_sparse_wrapping(self):
        va = VirtualAngles(1.0, 0.0)
        y = self._collect(11, va, 2, 4)
        # recovered rotational phase is 4 mu wrapped to (-pi, pi]
        expect = (4 * va.mu + np.pi) % (2 * np.pi) - np.pi
        assert np.angle(y[1] / y[0]) == pytest.approx(expect, abs=1e-10)

    def test_single_element(self):
        y = self._collect(6, VirtualAngles(0.4, 0.4), 1, 1)
        assert y.shape == (1,)
