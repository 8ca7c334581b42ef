import numpy as np
import pytest

from aerothz.manifold import VirtualAngles, make_geometry, upa_squint_vector, upa_vector
from aerothz.ttdu import (
    CompensationPair,
    DelayModule,
    GroupingSpec,
    apply_pair,
    gttdu_vector,
    group_centers,
    ideal_ttdu_vector,
)

GEO = make_geometry(64, 64, 0.1e12, 1e9, 2048, 128)


def channel_factor(va, n_h, n_v, k, geo):
    return upa_vector(va, n_h, n_v) * upa_squint_vector(va, n_h, n_v, k, geo)


class TestGroupCenters:
    def test_odd_group(self):
        # ceil(5/2) = 3rd element (0-based offset 2)
        assert np.array_equal(group_centers(10, 5), [2, 2, 2, 2, 2, 7, 7, 7, 7, 7])

    def test_even_group_lower_candidate(self):
        assert np.array_equal(group_centers(8, 4), [1, 1, 1, 1, 5, 5, 5, 5])

    def test_unit_group_identity(self):
        assert np.array_equal(group_centers(6, 1), np.arange(6))

    def test_non_dividing_rejected(self):
        with pytest.raises(ValueError):
            GroupingSpec(5, 5).validate(64, 64)
        GroupingSpec(4, 8).validate(64, 64)


class TestIdealTtdu:
    def test_lemma1_exactness(self):
        # Matching angles strip the squint to machine precision on 64x64.
        va = VirtualAngles(1.3, -0.7)
        for k in (1, 500, GEO.K):
            u = channel_factor(va, 64, 64, k, GEO)
            comp = ideal_ttdu_vector(va, 64, 64, k, GEO)
            bare = upa_vector(va, 64, 64)
            assert np.max(np.abs(u * np.conj(comp) - bare)) < 1e-12

    def test_center_subcarrier_identity(self):
        va = VirtualAngles(2.0, 0.4)
        assert np.allclose(ideal_ttdu_vector(va, 8, 8, GEO.K // 2 + 1, GEO), np.ones(64))

    def test_mismatch_residual_phase(self):
        # Residual phase per element is zeta * n * (mu - mu_tilde) along
        # each axis after conjugate application.
        mu, mu_t = 1.0, 0.8
        k = 1
        zeta = float(GEO.squint_ratio(k))
        u = channel_factor(VirtualAngles(mu, 0.0), 8, 1, k, GEO)
        comp = ideal_ttdu_vector(VirtualAngles(mu_t, 0.0), 8, 1, k, GEO)
        resid = u * np.conj(comp) * np.conj(upa_vector(VirtualAngles(mu, 0.0), 8, 1))
        expect = np.exp(1j * zeta * np.arange(8) * (mu - mu_t))
        assert np.allclose(resid, expect, atol=1e-14)


class TestGttdu:
    def test_unit_grouping_equals_ideal(self):
        va = VirtualAngles(0.9, -1.4)
        for k in (1, 1024, 2048):
            assert np.allclose(
                gttdu_vector(va, 16, 16, GroupingSpec(1, 1), k, GEO),
                ideal_ttdu_vector(va, 16, 16, k, GEO),
            )

    def test_center_subcarrier_equals_ideal(self):
        va = VirtualAngles(2.2, 1.0)
        k = GEO.K // 2 + 1
        assert np.allclose(
            gttdu_vector(va, 16, 16, GroupingSpec(4, 4), k, GEO),
            ideal_ttdu_vector(va, 16, 16, k, GEO),
        )

    def test_residual_vs_ideal_bound(self):
        # Worst per-element phase error vs ideal at the band edge equals
        # (1/2)(f_s/f_z) * max in-group offset * |angle|, per axis.
        geo = make_geometry(200, 200, 0.1e12, 1e9, 2048, 128)
        va = VirtualAngles(2.0, 0.0)
        k = 1
        g = gttdu_vector(va, 200, 1, GroupingSpec(5, 1), k, geo)
        i = ideal_ttdu_vector(va, 200, 1, k, geo)
        err = np.max(np.abs(np.angle(g * np.conj(i))))
        assert err == pytest.approx(0.5 * (geo.f_s / geo.f_z) * 2 * abs(va.mu), rel=1e-9)

    def test_group_shrink_monotone(self):
        va = VirtualAngles(1.7, -0.9)
        n = 60
        worst = []
        for m in (5, 3, 1):
            errs = []
            for k in (1, 512, 1024, 1536, 2048):
                g = gttdu_vector(va, n, n, GroupingSpec(m, m), k, GEO)
                i = ideal_ttdu_vector(va, n, n, k, GEO)
                errs.append(np.max(np.abs(np.angle(g * np.conj(i)))))
            worst.append(errs)
        worst = np.array(worst)
        assert np.all(np.diff(worst, axis=0) <= 1e-15)

    def test_non_dividing_rejected(self):
        with pytest.raises(ValueError):
            gttdu_vector(VirtualAngles(1, 1), 10, 10, GroupingSpec(3, 3), 1, GEO)


class TestApplyPair:
    def test_all_ones_pair_identity(self):
        u = channel_factor(VirtualAngles(0.5, 0.1), 4, 4, 7, GEO)
        w = channel_factor(VirtualAngles(-0.4, 0.8), 4, 4, 7, GEO)
        pair = CompensationPair(
            comp_ac=np.ones(16, dtype=complex),
            comp_bs=np.ones(16, dtype=complex),
            angle_basis=(VirtualAngles(0, 0), VirtualAngles(0, 0)),
        )
        u2, w2 = apply_pair(u, w, pair)
        assert np.array_equal(u2, u) and np.array_equal(w2, w)

    def test_perfect_pair_strips_squint(self):
        va_ac, va_bs = VirtualAngles(0.9, -0.2), VirtualAngles(-1.1, 0.6)
        k = 33
        pair = CompensationPair(
            comp_ac=ideal_ttdu_vector(va_ac, 6, 6, k, GEO),
            comp_bs=ideal_ttdu_vector(va_bs, 6, 6, k, GEO),
            angle_basis=(va_ac, va_bs),
        )
        u = channel_factor(va_ac, 6, 6, k, GEO)
        w = channel_factor(va_bs, 6, 6, k, GEO)
        u2, w2 = apply_pair(u, w, pair)
        assert np.max(np.abs(u2 - upa_vector(va_ac, 6, 6))) < 1e-12
        assert np.max(np.abs(w2 - upa_vector(va_bs, 6, 6))) < 1e-12

    def test_composition_multiplies(self):
        va = VirtualAngles(0.3, 0.2)
        k = 11
        c1 = ideal_ttdu_vector(va, 4, 4, k, GEO)
        u = channel_factor(va, 4, 4, k, GEO)
        w = channel_factor(va, 4, 4, k, GEO)
        pair1 = CompensationPair(c1, c1, (va, va))
        pair_sq = CompensationPair(c1 * c1, c1 * c1, (va, va))
        u1, w1 = apply_pair(*apply_pair(u, w, pair1), pair1)
        u2, w2 = apply_pair(u, w, pair_sq)
        assert np.allclose(u1, u2) and np.allclose(w1, w2)

    def test_dimension_mismatch(self):
        pair = CompensationPair(
            np.ones(4, dtype=complex), np.ones(4, dtype=complex),
            (VirtualAngles(0, 0), VirtualAngles(0, 0)),
        )
        with pytest.raises(ValueError):
            apply_pair(np.ones(5, dtype=complex), np.ones(4, dtype=complex), pair)


class TestDelayModule:
    def test_vector_matches_free_functions(self):
        va = VirtualAngles(1.2, -0.5)
        m_ideal = DelayModule("ideal", va)
        m_grp = DelayModule("gttdu", va, GroupingSpec(4, 4))
        for k in (1, 999):
            assert np.allclose(m_ideal.vector(16, 16, k, GEO), ideal_ttdu_vector(va, 16, 16, k, GEO))
            assert np.allclose(
                m_grp.vector(16, 16, k, GEO), gttdu_vector(va, 16, 16, GroupingSpec(4, 4), k, GEO)
            )

    def test_axis_coeffs_consistent_with_vector(self):
        va = VirtualAngles(0.8, 0.3)
        mod = DelayModule("gttdu", va, GroupingSpec(4, 2))
        ch, cv = mod.axis_coeffs(8, 6)
        k = 77
        zeta = float(GEO.squint_ratio(k))
        rebuilt = np.exp(1j * zeta * (cv[:, None] + ch[None, :])).ravel()
        assert np.allclose(rebuilt, mod.vector(8, 6, k, GEO))

    def test_retuned(self):
        mod = DelayModule("ideal", VirtualAngles(0.1, 0.1))
        mod2 = mod.retuned(VirtualAngles(0.5, -0.5))
        assert mod2.angles.mu == 0.5
        assert DelayModule().retuned(VirtualAngles(1, 1)).mode == "none"
