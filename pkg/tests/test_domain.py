"""Domain layer: grids, tilings, schedules, binary tracers."""

from fractions import Fraction

import numpy as np
import pytest

from cellmix.domain import (
    BlockParams,
    Grid,
    checkerboard,
    half_split,
    make_binary_tracer,
    make_tiling,
    rescale_schedule,
    tile_average,
    tile_averages,
    tile_averages_exact,
    time_steps,
)
from cellmix.errors import (
    EmptyMask,
    MaskTooLarge,
    MisalignedTile,
    NonIntegerReciprocal,
    ResolutionTooCoarse,
    TauEqualsOne,
)


class TestGrid:
    def test_centers_symmetric(self):
        g = Grid(8)
        ax = g.axis()
        assert ax[0] == pytest.approx(-0.5 + 1 / 16)
        assert ax[-1] == pytest.approx(0.5 - 1 / 16)
        np.testing.assert_allclose(ax + ax[::-1], 0.0, atol=1e-15)

    def test_corner_axis_spans_closure(self):
        g = Grid(4)
        np.testing.assert_allclose(g.corner_axis(), [-0.5, -0.25, 0.0, 0.25, 0.5])

    def test_too_coarse(self):
        with pytest.raises(ResolutionTooCoarse):
            Grid(1)


class TestTiling:
    def test_half_tiling_geometry(self):
        t = make_tiling(Fraction(1, 2), level=1, grid=Grid(8))
        assert t.tiles_per_side == 2
        assert t.side == Fraction(1, 2)
        assert t.cells_per_tile == 4
        assert len(t) == 4
        assert t.center(0, 0) == (-0.25, -0.25)
        assert t.center(1, 1) == (0.25, 0.25)

    def test_level_powers(self):
        t = make_tiling(Fraction(1, 2), level=3, grid=Grid(16))
        assert t.tiles_per_side == 8
        assert t.side == Fraction(1, 8)
        assert t.cells_per_tile == 2

    def test_noninteger_reciprocal_rejected(self):
        with pytest.raises(NonIntegerReciprocal):
            make_tiling(0.3)
        with pytest.raises(NonIntegerReciprocal):
            make_tiling(Fraction(2, 5))
        with pytest.raises(NonIntegerReciprocal):
            make_tiling(Fraction(3, 2))

    def test_misaligned_grid_rejected(self):
        # 512 is not divisible by 3, so a 1/3 tiling cannot align
        with pytest.raises(ResolutionTooCoarse):
            make_tiling(Fraction(1, 3), level=1, grid=Grid(512))
        t = make_tiling(Fraction(1, 3), level=2, grid=Grid(486))
        assert t.tiles_per_side == 9
        assert t.cells_per_tile == 54

    def test_string_lambda(self):
        t = make_tiling("1/4", level=1)
        assert t.tiles_per_side == 4


class TestSchedule:
    @pytest.mark.parametrize("tau", [Fraction(3, 2), Fraction(2), Fraction(3), Fraction(4)])
    def test_closed_form(self, tau):
        s = time_steps(tau, 6)
        for n in range(7):
            assert s.T(n) == (tau**n - 1) / (tau - 1)
        for n in range(6):
            assert s.duration(n) == tau**n

    def test_tau_one_linear(self):
        s = time_steps(1, 5)
        assert s.times == tuple(Fraction(i) for i in range(6))

    def test_shrinking_tau(self):
        s = time_steps(Fraction(1, 2), 4)
        assert s.T(4) == Fraction(15, 8)
        # total time stays below the geometric limit 1/(1 - tau) = 2
        assert s.T(4) < 2

    @pytest.mark.parametrize("tau", [Fraction(3, 2), Fraction(2), Fraction(3), Fraction(4)])
    @pytest.mark.parametrize("l", [2, 3, 4])
    def test_rescale_exact_identity(self, tau, l):
        tau_tilde, C = rescale_schedule(tau, l)
        assert tau_tilde == tau**l
        coarse = time_steps(tau_tilde, 6)
        fine = time_steps(tau, 6 * l)
        for n in range(7):
            assert C * coarse.T(n) == fine.T(n * l)

    def test_rescale_rejects_tau_one(self):
        with pytest.raises(TauEqualsOne):
            rescale_schedule(1, 2)

    def test_invalid_tau(self):
        with pytest.raises(TauEqualsOne):
            time_steps(0, 3)
        with pytest.raises(TauEqualsOne):
            time_steps(-2, 3)


class TestBinaryTracer:
    def test_half_split_levels(self):
        rho = half_split(Grid(8))
        assert rho.levels == (Fraction(1), Fraction(-1))
        assert rho.theta == Fraction(1, 2)
        assert rho.mean_exact() == 0
        assert rho.sup_norm == 1.0
        assert np.all(rho.values[:4, :] == 1.0)
        assert np.all(rho.values[4:, :] == -1.0)

    def test_unbalanced_levels(self):
        g = Grid(4)
        mask = np.zeros((4, 4), dtype=bool)
        mask[0, 0] = True
        rho = make_binary_tracer(mask, g)
        assert rho.theta == Fraction(1, 16)
        assert rho.levels == (Fraction(1), Fraction(-1, 15))
        assert rho.mean_exact() == 0
        assert abs(rho.mean) < 1e-15

    def test_mask_guards(self):
        g = Grid(4)
        with pytest.raises(EmptyMask):
            make_binary_tracer(np.zeros((4, 4), dtype=bool), g)
        big = np.ones((4, 4), dtype=bool)
        big[0, 0] = False
        with pytest.raises(MaskTooLarge):
            make_binary_tracer(big, g)
        with pytest.raises(MisalignedTile):
            make_binary_tracer(np.ones((3, 3), dtype=bool), g)

    def test_half_split_odd_grid_rejected(self):
        with pytest.raises(ResolutionTooCoarse):
            half_split(Grid(7))

    def test_checkerboard_mean_free(self):
        rho = checkerboard(Grid(16), Fraction(1, 4))
        assert rho.theta == Fraction(1, 2)
        assert rho.mean_exact() == 0
        # corner squares of side 1/4 are monochrome
        assert np.all(rho.values[:4, :4] == 1.0)
        assert np.all(rho.values[4:8, :4] == -1.0)

    def test_checkerboard_odd_reciprocal_rejected(self):
        with pytest.raises(MaskTooLarge):
            checkerboard(Grid(9), Fraction(1, 3))


class TestTileAverage:
    def test_half_split_quarters(self):
        g = Grid(8)
        rho = half_split(g)
        t = make_tiling(Fraction(1, 2), level=1, grid=g)
        # left tiles all +1, right tiles all -1
        assert tile_average(rho, t, (0, 0)) == 1
        assert tile_average(rho, t, (0, 1)) == 1
        assert tile_average(rho, t, (1, 0)) == -1
        assert tile_average(rho, t, (1, 1)) == -1

    def test_exact_matches_float(self):
        g = Grid(16)
        rng = np.random.default_rng(7)
        mask = np.zeros((16, 16), dtype=bool)
        mask.flat[rng.choice(256, size=100, replace=False)] = True
        rho = make_binary_tracer(mask, g)
        t = make_tiling(Fraction(1, 4), level=1, grid=g)
        fl = tile_averages(rho, t)
        ex = tile_averages_exact(rho, t)
        for k, ij in enumerate(t.indices()):
            assert fl[ij] == pytest.approx(float(ex[k]), abs=1e-12)

    def test_grid_mismatch_rejected(self):
        rho = half_split(Grid(8))
        t = make_tiling(Fraction(1, 2), level=1, grid=Grid(16))
        with pytest.raises(MisalignedTile):
            tile_average(rho, t, (0, 0))
        t_bare = make_tiling(Fraction(1, 2), level=1)
        with pytest.raises(MisalignedTile):
            tile_average(rho, t_bare, (0, 0))

    def test_out_of_range_tile(self):
        g = Grid(8)
        rho = half_split(g)
        t = make_tiling(Fraction(1, 2), level=1, grid=g)
        with pytest.raises(MisalignedTile):
            tile_average(rho, t, (2, 0))


class TestBlockParams:
    def test_defaults(self):
        bp = BlockParams()
        assert bp.lam == Fraction(1, 2)
        assert bp.fill_threshold == pytest.approx(5 / 6)

    def test_guards(self):
        with pytest.raises(MaskTooLarge):
            BlockParams(theta=Fraction(3, 4))
        with pytest.raises(NonIntegerReciprocal):
            BlockParams(lam=Fraction(2, 3))
        with pytest.raises(MisalignedTile):
            BlockParams(p=1.0)
