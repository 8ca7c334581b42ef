import numpy as np
import pytest
from hypothesis import given, strategies as st

from aerothz.constants import SPEED_OF_LIGHT
from aerothz.manifold import (
    ArrayGeometry,
    VirtualAngles,
    antenna_delay,
    make_geometry,
    physical_angles,
    squint_vector_1d,
    steering_vector_1d,
    upa_vector,
    virtual_angles,
)

GEO = make_geometry(8, 8, 0.1e12, 1e9, 2048, 128)


class TestGeometry:
    def test_spacing_pinned_to_half_wavelength(self):
        assert GEO.d == pytest.approx(SPEED_OF_LIGHT / 2e11, rel=1e-15)
        with pytest.raises(ValueError):
            ArrayGeometry(8, 8, 1.6e-3, 0.1e12, 1e9, 2048, 128)

    def test_symbol_duration(self):
        # (2048 + 128) * 1 ns
        assert GEO.t_sym == pytest.approx(2.176e-6, rel=1e-12)

    def test_center_subcarrier_has_zero_offset(self):
        assert GEO.subcarrier_offset(GEO.K // 2 + 1) == 0.0

    def test_k_range_checked(self):
        with pytest.raises(ValueError):
            GEO.subcarrier_offset(0)
        with pytest.raises(ValueError):
            GEO.squint_ratio(GEO.K + 1)

    def test_bad_constructions_rejected(self):
        with pytest.raises(ValueError):
            make_geometry(0, 8, 0.1e12, 1e9, 2048, 128)
        with pytest.raises(ValueError):
            make_geometry(8, 8, 0.1e12, 2e11, 2048, 128)  # f_s >= f_z
        with pytest.raises(ValueError):
            make_geometry(8, 8, 0.1e12, 1e9, 1000, 128)  # not a power of two
        with pytest.raises(ValueError):
            make_geometry(8, 8, 0.1e12, 1e9, 2048, 0)


class TestVirtualAngles:
    def test_boresight(self):
        va = virtual_angles(0.0, 0.0)
        assert va.mu == 0.0 and va.nu == 0.0

    def test_endfire_limit(self):
        va = virtual_angles(np.pi / 2 - 1e-9, 0.0)
        assert va.mu == pytest.approx(np.pi, abs=1e-6)
        assert va.nu == 0.0

    def test_60_degrees(self):
        va = virtual_angles(np.deg2rad(60.0), 0.0)
        assert va.mu == pytest.approx(np.pi * np.sqrt(3) / 2, rel=1e-12)
        assert va.mu == pytest.approx(2.72070, abs=5e-6)

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            virtual_angles(np.pi / 2, 0.0)
        with pytest.raises(ValueError):
            virtual_angles(0.0, -np.pi / 2)

    @given(
        st.floats(-1.4, 1.4),
        st.floats(-1.4, 1.4),
    )
    def test_roundtrip_physical(self, theta, phi):
        va = virtual_angles(theta, phi)
        th2, ph2 = physical_angles(va)
        assert th2 == pytest.approx(theta, abs=1e-9)
        assert ph2 == pytest.approx(phi, abs=1e-9)


class TestSteering:
    def test_zero_angle_all_ones(self):
        assert np.allclose(steering_vector_1d(0.0, 4), np.ones(4))

    def test_pi_alternates(self):
        assert np.allclose(steering_vector_1d(np.pi, 2), [1.0, -1.0])

    def test_direct_evaluation(self):
        v = steering_vector_1d(0.5, 3)
        assert np.allclose(v, [1.0, np.exp(0.5j), np.exp(1.0j)])

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            steering_vector_1d(0.3, 0)

    @given(st.floats(-np.pi, np.pi), st.integers(1, 64))
    def test_unit_modulus(self, mu, n):
        assert np.max(np.abs(np.abs(steering_vector_1d(mu, n)) - 1.0)) < 1e-12


class TestSquint:
    def test_center_subcarrier_all_ones(self):
        v = squint_vector_1d(2.0, 16, GEO.K // 2 + 1, GEO)
        assert np.allclose(v, np.ones(16))

    def test_zero_angle_all_ones(self):
        for k in (1, 100, GEO.K):
            assert np.allclose(squint_vector_1d(0.0, 8, k, GEO), np.ones(8))

    def test_edge_subcarrier_direct(self):
        # zeta(k=1) = -1/2 * f_s/f_z = -0.005
        v = squint_vector_1d(np.pi, 2, 1, GEO)
        assert v[1] == pytest.approx(np.exp(-1j * 0.005 * np.pi), rel=1e-12)

    def test_k_out_of_range(self):
        with pytest.raises(ValueError):
            squint_vector_1d(1.0, 4, 0, GEO)


class TestUpa:
    def test_boresight_all_ones(self):
        assert np.allclose(upa_vector(VirtualAngles(0, 0), 2, 2), np.ones(4))

    def test_degenerate_vertical_is_1d(self):
        mu = 0.7
        assert np.allclose(
            upa_vector(VirtualAngles(mu, 0.0), 5, 1), steering_vector_1d(mu, 5)
        )

    def test_kronecker_index_arithmetic(self):
        v = upa_vector(VirtualAngles(0.8, -0.5), 3, 2)
        # 1-based element (n_h=2, n_v=2) sits at flat index (2-1)*3 + 2 = 5
        assert v[4] == pytest.approx(np.exp(1j * (0.8 - 0.5)), rel=1e-12)

    def test_self_cancellation(self):
        v = upa_vector(VirtualAngles(1.1, -2.2), 4, 3)
        assert np.allclose(v * np.conj(v), np.ones(12))


class TestAntennaDelay:
    def test_reference_element_zero(self):
        assert antenna_delay(1, 1, 0.5, 0.2, GEO) == 0.0

    def test_boresight_zero_everywhere(self):
        for nh in (1, 3, 8):
            assert antenna_delay(nh, 5, 0.0, 0.0, GEO) == pytest.approx(0.0, abs=1e-30)

    def test_linear_in_indices(self):
        th, ph = 0.4, -0.3
        d11 = antenna_delay(2, 1, th, ph, GEO)
        d12 = antenna_delay(3, 1, th, ph, GEO)
        dv = antenna_delay(1, 4, th, ph, GEO)
        assert d12 == pytest.approx(2 * d11, rel=1e-12)
        assert antenna_delay(3, 4, th, ph, GEO) == pytest.approx(d12 + dv, rel=1e-12)

    def test_out_of_array(self):
        with pytest.raises(ValueError):
            antenna_delay(9, 1, 0.1, 0.1, GEO)

    def test_diagonal_ula_fill_time(self):
        # Extreme case: impinging from the diagonal of a 201x201 UPA, i.e. a
        # 201-element ULA with sqrt(2) d spacing; at 60 degrees off the
        # diagonal normal, 0.1 THz carrier and 1 GHz bandwidth, the 200th
        # diagonal element is delayed by about 1.225 symbol periods.
        geo = make_geometry(201, 201, 0.1e12, 1e9, 2048, 128)
        n = 200
        target = np.sqrt(2.0) * n * np.sin(np.deg2rad(60.0)) / (2.0 * geo.f_z)
        # Direction whose path difference along the diagonal equals the
        # ULA's: sin(theta) cos(phi) + sin(phi) = sqrt(2) sin(60 deg).
        s = np.sqrt(2.0) * np.sin(np.deg2rad(60.0)) / 2.0
        phi = np.arcsin(s)
        theta = np.arcsin(s / np.cos(phi))
        tau = antenna_delay(n + 1, n + 1, theta, phi, geo)
        assert tau == pytest.approx(target, rel=1e-12)
        assert tau / geo.t_s == pytest.approx(1.225, abs=1e-3)
