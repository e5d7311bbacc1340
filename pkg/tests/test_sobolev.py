"""Sobolev machinery: gradient norms against closed forms, Gagliardo paths
against each other and against the exact single-cell plane sum."""

import math

import numpy as np
import pytest

from cellmix.sobolev import (
    _lattice_zeta,
    fractional_poincare_check,
    gagliardo_pth_power,
    gagliardo_pth_power_mc,
    grad_lp_norm,
    sample_vortex_block,
    scaling_identity_check,
    sobolev_seminorm,
    tau_floor,
    vortex_bump_stream,
    vortex_bump_velocity,
)
from cellmix.errors import InfinityPNotSupported, StencilOverrun, ZeroField


def unit_grid(n):
    ax = -0.5 + (np.arange(n) + 0.5) / n
    return np.meshgrid(ax, ax, indexing="ij")


class TestGradLpNorm:
    def test_shear_l2(self):
        n = 256
        x, _ = unit_grid(n)
        u = np.stack([np.zeros((n, n)), np.sin(2 * math.pi * x)])
        # |grad u| = 2 pi |cos(2 pi x)|, L2 norm = pi sqrt(2)
        assert grad_lp_norm(u, 1 / n, 2) == pytest.approx(math.pi * math.sqrt(2), rel=1e-5)

    def test_shear_l4_and_sup(self):
        n = 256
        x, _ = unit_grid(n)
        u = np.stack([np.zeros((n, n)), np.sin(2 * math.pi * x)])
        want4 = 2 * math.pi * (3.0 / 8.0) ** 0.25
        assert grad_lp_norm(u, 1 / n, 4) == pytest.approx(want4, rel=1e-5)
        assert grad_lp_norm(u, 1 / n, math.inf) == pytest.approx(2 * math.pi, rel=5e-4)

    @pytest.mark.parametrize("p", [2, 3, 4])
    def test_rigid_rotation_any_p(self, p):
        n = 64
        x, y = unit_grid(n)
        u = np.stack([-y, x])
        # gradient tensor is constant with Frobenius norm sqrt(2)
        assert grad_lp_norm(u, 1 / n, p) == pytest.approx(math.sqrt(2), rel=1e-9)

    def test_second_order_shear(self):
        n = 256
        x, _ = unit_grid(n)
        u = np.stack([np.zeros((n, n)), np.sin(2 * math.pi * x)])
        want = 4 * math.pi**2 / math.sqrt(2)
        assert grad_lp_norm(u, 1 / n, 2, order=2) == pytest.approx(want, rel=1e-5)

    def test_guards(self):
        with pytest.raises(StencilOverrun):
            grad_lp_norm(np.ones((2, 2)), 0.5, 2)
        with pytest.raises(InfinityPNotSupported):
            grad_lp_norm(np.ones((8, 8)), 0.125, 0.5)


class TestGagliardo:
    def smooth_sample(self, n):
        x, y = unit_grid(n)
        return np.sin(2 * math.pi * x) * np.sin(2 * math.pi * y)

    @pytest.mark.parametrize("r,p", [(0.5, 2), (0.5, 4), (0.25, 2)])
    def test_fft_matches_direct(self, r, p):
        rng = np.random.default_rng(2)
        f = rng.normal(size=(20, 20))
        a = gagliardo_pth_power(f, 0.05, r, p, method="fft", subcell=False)
        b = gagliardo_pth_power(f, 0.05, r, p, method="direct", subcell=False)
        assert a == pytest.approx(b, rel=1e-10)

    @pytest.mark.parametrize("r,p", [(0.5, 2), (0.3, 2), (0.5, 4)])
    def test_single_cell_plane_sum_exact(self, r, p):
        # the indicator of one cell pairs only against the rest of the
        # lattice: 2 h^(2-rp) Z(2+rp), independent of the cell's position
        n, h = 24, 1.0 / 24.0
        want = 2 * h ** (2 - r * p) * _lattice_zeta(2 + r * p)
        for pos in [(12, 12), (0, 0), (23, 5)]:
            f = np.zeros((n, n))
            f[pos] = 1.0
            got = gagliardo_pth_power(f, h, r, p, subcell=False, plane_tail=True)
            assert got == pytest.approx(want, rel=1e-9)

    def test_mc_agrees_with_fft(self):
        f = self.smooth_sample(32)
        exact = gagliardo_pth_power(f, 1 / 32, 0.5, 2, subcell=False)
        est, err = gagliardo_pth_power_mc(f, 1 / 32, 0.5, 2, n_samples=400_000, seed=9, subcell=False)
        assert abs(est - exact) < 4 * err
        assert err < 0.05 * exact

    def test_subcell_tightens_convergence(self):
        vals = {}
        for sub in (False, True):
            vals[sub] = [
                gagliardo_pth_power(self.smooth_sample(n), 1 / n, 0.5, 2, subcell=sub)
                for n in (32, 64, 128)
            ]
        # both ladders increase toward the continuum value; the corrected one
        # sits far closer to the limit at every resolution
        ref = vals[True][-1]
        assert abs(vals[True][0] - ref) < 0.2 * abs(vals[False][0] - ref)
        assert vals[False][0] < vals[False][1] < vals[False][2]

    def test_guards(self):
        f = np.ones((8, 8))
        with pytest.raises(InfinityPNotSupported):
            gagliardo_pth_power(f, 0.125, 1.5, 2)
        with pytest.raises(InfinityPNotSupported):
            gagliardo_pth_power(f, 0.125, 0.5, 3, method="fft")
        with pytest.raises(StencilOverrun):
            gagliardo_pth_power(np.ones((64, 64)), 1 / 64, 0.5, 2, method="direct")


class TestVortexBump:
    def test_stream_profile(self):
        assert vortex_bump_stream(np.array(0.0), np.array(0.0)) == pytest.approx(1.0)
        assert vortex_bump_stream(np.array(0.5), np.array(0.0)) == 0.0
        assert vortex_bump_stream(np.array(0.4), np.array(0.4)) == 0.0

    def test_velocity_divergence_free(self):
        n = 128
        x, y = unit_grid(n)
        u = vortex_bump_velocity(x, y)
        div = np.gradient(u[0], 1 / n, axis=0) + np.gradient(u[1], 1 / n, axis=1)
        assert np.max(np.abs(div)) < 1e-2 * np.max(np.abs(u))

    def test_block_sampling_rescales(self):
        u1 = sample_vortex_block(128, 1.0, 1.0)
        u2 = sample_vortex_block(128, 0.5, 2.0)
        # the compressed block lives on the middle tile and is 4x weaker
        assert np.max(np.abs(u2[:, :32, :])) == 0.0
        assert np.max(np.abs(u2)) == pytest.approx(np.max(np.abs(u1)) / 4, rel=0.05)


class TestScalingIdentities:
    def test_integer_and_fractional_orders(self):
        for s, p in [(1, 2), (2, 2), (1.5, 2)]:
            recs = scaling_identity_check(0.5, 2.0, s, p, stages=(1, 2), n=128)
            for rec in recs:
                assert rec["rel_err"] < 0.01, (s, p, rec)

    def test_quarter_lambda(self):
        recs = scaling_identity_check(0.25, 3.0, 1, 2, stages=(1,), n=128)
        assert recs[0]["rel_err"] < 0.01

    def test_tau_floor(self):
        assert tau_floor(0.5, 2.0) == pytest.approx(2.0)
        assert tau_floor(0.5, 1.5) == pytest.approx(math.sqrt(2))
        assert tau_floor(0.25, 1.5) == pytest.approx(2.0)
        with pytest.raises(InfinityPNotSupported):
            tau_floor(0.5, 1.0)
        with pytest.raises(ZeroField):
            tau_floor(1.5, 2.0)


class TestPoincare:
    def test_smooth_field_passes(self):
        n = 48
        x, y = unit_grid(n)
        f = np.sin(2 * math.pi * x) * np.cos(4 * math.pi * y) + 0.3
        out = fractional_poincare_check(f, 1 / n, 0.5, 2)
        assert out["passes"]
        assert out["lhs"] <= out["rhs"]

    def test_rough_field_passes(self):
        rng = np.random.default_rng(4)
        f = rng.normal(size=(32, 32))
        assert fractional_poincare_check(f, 1 / 32, 0.3, 2)["passes"]
