"""Grid invariants, region weights, and phase-space diagnostics."""

import math

import numpy as np
import pytest

from rossbytrap.errors import ConfigError, ResolutionError
from rossbytrap.fields import (Grid2D, RegionOmega, StateField,
                               grid_for, husimi, local_mass,
                               spectral_tail_fraction, zero_field)

EPS = 0.25
GRID = Grid2D(L1=8.0 * math.pi, N1=128, N2=32, epsilon=EPS)


def gaussian_wave(grid, x1c=-2.0, x2c=3.0, xi1=1.0, xi2=0.5,
                  s1=1.2, s2=0.5):
    """Band-limited packet: plane wave at (xi1, xi2) under a Gaussian."""
    X1 = grid.x1[:, None]
    X2 = grid.x2[None, :]
    d2 = X2 - x2c
    d2 = d2 - 2.0 * math.pi * np.round(d2 / (2.0 * math.pi))
    env = np.exp(-0.5 * ((X1 - x1c) / s1) ** 2 - 0.5 * (d2 / s2) ** 2)
    phase = np.exp(1j * (xi1 * X1 + xi2 * X2) / grid.epsilon)
    vals = np.zeros((3, grid.N1, grid.N2), dtype=complex)
    vals[0] = env * phase
    return StateField(grid, vals)


class TestGrid:
    def test_axes_and_measure(self):
        g = GRID
        assert g.x1[0] == -0.5 * g.L1
        assert abs(g.x1[1] - g.x1[0] - g.dx1) < 1e-15
        assert g.x2[0] == 0.0 and g.x2[-1] < 2.0 * math.pi
        assert abs(g.cell - g.dx1 * g.dx2) == 0.0
        assert g.k1[1] == 1 and g.k1[-1] == -1
        assert abs(g.kappa(4) - 8.0 * math.pi / g.L1) < 1e-15

    def test_power_of_two_required(self):
        with pytest.raises(ResolutionError):
            Grid2D(L1=8.0 * math.pi, N1=96, N2=32, epsilon=EPS)

    def test_resolution_floor(self):
        # 8 points per epsilon-wavelength: N2 = 16 < 8 / 0.25 = 32
        with pytest.raises(ResolutionError):
            Grid2D(L1=8.0 * math.pi, N1=128, N2=16, epsilon=EPS)
        with pytest.raises(ResolutionError):
            Grid2D(L1=8.0 * math.pi, N1=64, N2=32, epsilon=EPS)

    def test_bad_epsilon(self):
        with pytest.raises(ConfigError):
            Grid2D(L1=8.0 * math.pi, N1=128, N2=32, epsilon=0.0)

    def test_grid_for_smallest(self):
        g = grid_for(EPS, m=4)
        assert (g.N1, g.N2) == (128, 32)
        with pytest.raises(ResolutionError):
            Grid2D(L1=g.L1, N1=g.N1 // 2, N2=g.N2, epsilon=EPS)

    def test_grid_for_overrides(self):
        g = grid_for(EPS, m=4, n2_min=100)
        assert g.N2 == 128
        g = grid_for(EPS, m=4, margin=2.0)
        assert g.N1 == 256


class TestStateField:
    def test_norm_constant_field(self):
        vals = np.full((3, GRID.N1, GRID.N2), 0.5 + 0.0j)
        f = StateField(GRID, vals)
        want = math.sqrt(3 * 0.25 * GRID.L1 * 2.0 * math.pi)
        assert abs(f.norm() - want) < 1e-12 * want

    def test_shape_guard(self):
        with pytest.raises(ConfigError):
            StateField(GRID, np.zeros((3, 8, 8), dtype=complex))

    def test_copy_is_deep(self):
        f = gaussian_wave(GRID)
        c = f.copy()
        c.values[:] = 0.0
        assert f.norm() > 0.0

    def test_zero_field(self):
        assert zero_field(GRID).norm() == 0.0


class TestSpectralTail:
    def test_smooth_field_has_no_tail(self):
        assert spectral_tail_fraction(gaussian_wave(GRID)) < 1e-10

    def test_near_nyquist_wave_is_flagged(self):
        g = GRID
        vals = np.zeros((3, g.N1, g.N2), dtype=complex)
        vals[0] = np.exp(1j * 60 * 2.0 * math.pi * g.x1[:, None] / g.L1)
        assert spectral_tail_fraction(StateField(g, vals)) > 0.99

    def test_empty_field(self):
        assert spectral_tail_fraction(zero_field(GRID)) == 0.0


class TestRegion:
    def test_weights_profile(self):
        om = RegionOmega(GRID, half_width=2.3)
        w = om.weights
        inside = np.abs(GRID.x1) <= 2.3
        assert np.all(w[inside] == 1.0)
        outer = 2.3 + om.collar_cells * GRID.dx1
        assert np.all(w[np.abs(GRID.x1) >= outer] == 0.0)
        assert np.all((w >= 0.0) & (w <= 1.0))

    def test_seam_margin_enforced(self):
        with pytest.raises(ConfigError):
            RegionOmega(GRID, half_width=0.45 * GRID.L1)

    def test_everything_matches_norm(self):
        f = gaussian_wave(GRID)
        om = RegionOmega.everything(GRID)
        assert abs(local_mass(f, om) - f.norm()) < 1e-12

    def test_far_region_sees_nothing(self):
        f = gaussian_wave(GRID, x1c=-2.0, s1=0.8)
        om = RegionOmega(GRID, half_width=2.0, center=8.0)
        assert local_mass(f, om) < 1e-6 * f.norm()

    def test_grid_mismatch(self):
        other = Grid2D(L1=8.0 * math.pi, N1=256, N2=32, epsilon=EPS)
        with pytest.raises(ConfigError):
            local_mass(gaussian_wave(GRID), RegionOmega(other, half_width=2.0))


class TestHusimi:
    def test_total_matches_squared_norm(self):
        f = gaussian_wave(GRID)
        h = husimi(f)
        n2 = f.norm() ** 2
        assert abs(h.total - n2) < 1e-6 * n2

    def test_centroid_locates_the_packet(self):
        f = gaussian_wave(GRID, x1c=-2.0, x2c=3.0, xi1=1.0, xi2=0.5)
        h = husimi(f)
        x1, x2, xi1, xi2 = h.centroid()
        assert abs(x1 + 2.0) < 0.1
        assert abs(x2 - 3.0) < 0.1
        assert abs(xi1 - 1.0) < 0.1
        assert abs(xi2 - 0.5) < 0.1

    def test_marginals_are_consistent(self):
        h = husimi(gaussian_wave(GRID))
        assert abs(h.x_density.sum() - h.total) < 1e-12 * h.total
        assert abs(h.xi_density.sum() - h.total) < 1e-9 * h.total
        assert abs(h.x1_xi1.sum() - h.total) < 1e-9 * h.total
        assert abs(h.x2_xi2.sum() - h.total) < 1e-9 * h.total

    def test_full_density_on_request(self):
        h = husimi(gaussian_wave(GRID), keep_full=True,
                   x1_window=(-3.0, -1.0), x2_window=(2.5, 3.5))
        assert h.full is not None
        assert h.full.shape == (len(h.x1_centers), len(h.x2_centers),
                                GRID.N1, GRID.N2)
        assert abs(h.full.sum() - h.total) < 1e-9 * h.total

    def test_windowed_centers_truncate_total(self):
        f = gaussian_wave(GRID, x1c=-2.0)
        h_all = husimi(f)
        h_win = husimi(f, x1_window=(-5.0, 1.0))
        assert h_win.total < h_all.total + 1e-12
        assert h_win.total > 0.9 * h_all.total

    def test_stride_guard(self):
        with pytest.raises(ResolutionError):
            husimi(gaussian_wave(GRID), stride1=64)

    def test_bad_window(self):
        with pytest.raises(ConfigError):
            husimi(gaussian_wave(GRID), x1_window=(50.0, 60.0))
