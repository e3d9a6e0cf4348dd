import math

import numpy as np
import pytest

from rossbytrap import (
    EvolveWorkspace,
    Grid2D,
    StateField,
    bohr_sommerfeld_levels,
    build_trapped_wkb,
    builtin_profile,
    grid_for,
    project_modes,
    quantize_symbol,
    reconstruct_mode,
    scalar_residual_check,
    wkb_initial,
)
from rossbytrap.errors import ConfigError, Inadmissible, ResolutionError, WindowError
from rossbytrap.fields import zero_field
from rossbytrap.pde import spectral_derivative_matrix
from rossbytrap.profiles import CoriolisProfile
from rossbytrap.quantize import (
    ScalarModeField,
    _h2_matrix,
    _well_action,
    _well_geometry,
)
from rossbytrap.symbols import mode_columns
from rossbytrap.trapped import LambdaPoint
from rossbytrap.wkb import rossby_row_apply

PROF = builtin_profile("2+sin")
CONST2 = CoriolisProfile(name="const2", constant=2.0, cos_coeffs=(), sin_coeffs=())
ANCHOR = LambdaPoint(x2=3.0, xi2=0.5, xi1_root=1.921437105021718,
                     F_residual=0.0, bracket=(1.9, 1.95))


def trapped_setup(eps):
    grid = grid_for(eps, m=4, margin=1.25)
    spec = build_trapped_wkb(PROF, grid, ANCHOR)
    U, _ = wkb_initial(PROF, spec, grid)
    parts = project_modes(PROF, U)
    return grid, spec, U, parts


@pytest.fixture(scope="module")
def trap8():
    return trapped_setup(0.125)


@pytest.fixture(scope="module")
def trap16():
    return trapped_setup(0.0625)


class TestQuantizeSymbol:
    GRID = Grid2D(L1=2.0 * math.pi, N1=32, N2=32, epsilon=1.0)

    def test_constant_symbol_is_identity(self):
        op = quantize_symbol(lambda x2, xi2, xi1: np.ones_like(x2 + xi2),
                             3, self.GRID, symbol_id="one")
        assert np.abs(op.matrix - np.eye(32)).max() < 1e-13

    def test_multiplier_matches_spectral_derivative(self):
        op = quantize_symbol(lambda x2, xi2, xi1: xi2 + 0.0 * x2, 2, self.GRID)
        want = -1j * self.GRID.epsilon * spectral_derivative_matrix(32)
        assert np.abs(op.matrix - want).max() < 1e-12

    def test_multiplication_operator_is_diagonal(self):
        def sym(x2, xi2, xi1):
            b = PROF.eval(x2[:, 0])[0][:, None]
            return b * b + 0.0 * xi2

        op = quantize_symbol(sym, 0, self.GRID)
        want = np.diag(PROF.eval(self.GRID.x2)[0] ** 2)
        assert np.abs(op.matrix - want).max() < 1e-13

    def test_fourier_mode_reproduction(self):
        def sym(x2, xi2, xi1):
            return PROF.eval(x2[:, 0])[1][:, None] * np.cos(xi2) + 1j * xi1

        op = quantize_symbol(sym, 2, self.GRID, symbol_id="mixed")
        n0 = 5
        u = np.exp(1j * n0 * self.GRID.x2)
        xi1 = self.GRID.epsilon * float(self.GRID.kappa(2))
        want = sym(self.GRID.x2[:, None],
                   np.array([[self.GRID.epsilon * n0]]), xi1)[:, 0] * u
        assert np.abs(op.apply(u) - want).max() < 1e-13

    def test_unresolved_symbol_rejected(self):
        with pytest.raises(ResolutionError):
            quantize_symbol(lambda x2, xi2, xi1: np.cos(15.0 * x2) + 0.0 * xi2,
                            1, self.GRID)

    def test_epsilon_mismatch_rejected(self):
        with pytest.raises(ConfigError):
            quantize_symbol(lambda x2, xi2, xi1: 1.0 + 0.0 * x2 + 0.0 * xi2,
                            1, self.GRID, epsilon=0.5)

    def test_metadata(self):
        op = quantize_symbol(lambda x2, xi2, xi1: xi2 + 0.0 * x2, 4, self.GRID,
                             symbol_id="xi2")
        assert op.k1 == 4 and op.symbol_id == "xi2"
        assert op.epsilon == self.GRID.epsilon
        assert op.matrix.shape == (32, 32)


class TestScalarModeField:
    GRID = Grid2D(L1=2.0 * math.pi, N1=16, N2=16, epsilon=0.5)

    def test_norm_of_constant(self):
        f = ScalarModeField(self.GRID, np.ones((16, 16), dtype=complex), "zero")
        assert abs(f.norm() - math.sqrt(2.0 * math.pi * self.GRID.L1)) < 1e-12

    def test_shape_guard(self):
        with pytest.raises(ConfigError):
            ScalarModeField(self.GRID, np.ones((16, 8), dtype=complex), "zero")

    def test_branch_guard(self):
        with pytest.raises(ConfigError):
            ScalarModeField(self.GRID, np.ones((16, 16), dtype=complex), "slow")


class TestProjectModes:
    def test_zero_field_projects_to_zero(self, trap8):
        grid = trap8[0]
        for part in project_modes(PROF, zero_field(grid)):
            assert part.norm() == 0.0

    def test_pure_plus_carrier_stays_pure(self):
        for eps in (0.125, 0.0625):
            grid = grid_for(eps, m=1)
            k1 = round(3.0 / (8.0 * eps))
            vals = np.exp(1j * (grid.kappa(k1) * grid.x1[:, None]
                                + 2.0 * grid.x2[None, :]))
            carrier = ScalarModeField(grid, vals, branch="plus")
            um, uz, up = project_modes(PROF, reconstruct_mode(PROF, carrier))
            assert (um.norm() + uz.norm()) / up.norm() < 0.1 * eps

    def test_slow_packet_weight_pointwise(self, trap8, trap16):
        errs = {}
        for grid, spec, U, parts in (trap8, trap16):
            eps = grid.epsilon
            X1, X2 = grid.x1[:, None], grid.x2[None, :]
            amps = (spec.amp_rho(X1, X2), spec.amp_u1(X1, X2),
                    spec.amp_u2(X1, X2))
            b = PROF.eval(grid.x2)[0][None, :]
            weight = rossby_row_apply(b, spec.d1_phase(X1, X2),
                                      spec.d2_phase(X1, X2), amps)
            weight = weight * np.exp(1j * spec.phase(X1, X2) / eps)
            uz = parts[1]
            errs[eps] = math.sqrt(float(
                np.sum(np.abs(uz.values - weight) ** 2)) * grid.cell)
            assert errs[eps] < 0.6 * eps
        ratio = errs[0.125] / errs[0.0625]
        assert 1.6 < ratio < 2.4

    def test_round_trip_remainder_scales(self, trap8, trap16):
        rems = {}
        for grid, _, U, parts in (trap8, trap16):
            total = np.zeros_like(U.values)
            for part in parts:
                total += reconstruct_mode(PROF, part).values
            rems[grid.epsilon] = StateField(grid, U.values - total).norm() / U.norm()
        assert rems[0.125] < 0.02
        slope = math.log2(rems[0.125] / rems[0.0625])
        assert 0.8 < slope < 1.2

    def test_latitude_only_datum_rejected(self):
        grid = Grid2D(L1=2.0 * math.pi, N1=32, N2=32, epsilon=0.5)
        U = zero_field(grid)
        U.values[2] = np.cos(grid.x2)[None, :]
        with pytest.raises(Inadmissible):
            project_modes(PROF, U)

    def test_workers_match_serial(self, trap8):
        _, _, U, parts = trap8
        again = project_modes(PROF, U, workers=4)
        for a, b in zip(parts, again):
            assert np.abs(a.values - b.values).max() < 1e-14


class TestReconstructMode:
    GRID = Grid2D(L1=2.0 * math.pi, N1=16, N2=16, epsilon=0.5)

    def test_zero_carrier_reconstructs_zero(self):
        f = ScalarModeField(self.GRID, np.zeros((16, 16), dtype=complex), "zero")
        assert reconstruct_mode(PROF, f).norm() == 0.0

    def test_constant_profile_single_mode_exact(self):
        k1, n0 = 1, 2
        xi1 = self.GRID.epsilon * float(self.GRID.kappa(k1))
        xi2 = self.GRID.epsilon * n0
        wave = np.exp(1j * (self.GRID.kappa(k1) * self.GRID.x1[:, None]
                            + n0 * self.GRID.x2[None, :]))
        # planetary column at b' = 0 has tau = 0 exactly
        f = ScalarModeField(self.GRID, wave.copy(), "zero")
        U = reconstruct_mode(CONST2, f)
        want = np.array([-1j * 2.0 / xi1, -xi2 / xi1, 1.0])
        for c in range(3):
            assert np.abs(U.values[c] - want[c] * wave).max() < 1e-12
        s = math.sqrt(xi1 * xi1 + xi2 * xi2 + 4.0)
        for branch, tau in (("minus", -s), ("plus", s)):
            f = ScalarModeField(self.GRID, wave.copy(), branch)
            U = reconstruct_mode(CONST2, f)
            col = mode_columns(2.0, xi1, xi2, tau)
            for c in range(3):
                assert np.abs(U.values[c] - col[c] * wave).max() < 1e-12

    def test_branch_alias_and_validation(self):
        wave = np.exp(1j * (self.GRID.kappa(1) * self.GRID.x1[:, None]
                            + 2.0 * self.GRID.x2[None, :]))
        f = ScalarModeField(self.GRID, wave, "plus")
        a = reconstruct_mode(PROF, f)
        b = reconstruct_mode(PROF, f, j="+")
        assert np.abs(a.values - b.values).max() == 0.0
        with pytest.raises(ConfigError):
            reconstruct_mode(PROF, f, j="fast")

    def test_zonal_mean_carrier_rejected(self):
        f = ScalarModeField(self.GRID,
                            np.cos(self.GRID.x2)[None, :]
                            * np.ones((16, 1)), "plus")
        with pytest.raises(Inadmissible):
            reconstruct_mode(PROF, f)


class TestScalarEvolutionAgreement:
    def test_full_vs_scalar_slow_propagation(self, trap8):
        grid, _, U, parts = trap8
        eps = grid.epsilon
        Ur = reconstruct_mode(PROF, parts[1])
        ws = EvolveWorkspace(PROF, grid)
        full = ws.evolve(Ur, 1.0 / eps)
        slow = ws.evolve(Ur, 1.0 / eps, branch="slow")
        diff = StateField(grid, full.values - slow.values).norm() / Ur.norm()
        assert diff < 1e-3
        # unitarity on invariant branches pins the gap to the fast content
        fast = ws.project_fast(Ur).norm() / Ur.norm()
        assert abs(diff - fast) < 1e-10


class TestBohrSommerfeld:
    def test_table_shape_and_order(self):
        tb = bohr_sommerfeld_levels(PROF, 1.5, 0.125, k_range=range(5))
        ks = [k for (k, _, _) in tb.eigenvalues]
        assert ks == list(range(5))
        lds = [ld for (_, ld, _) in tb.eigenvalues]
        assert all(a < b for a, b in zip(lds, lds[1:]))
        for (k, ld, lb, d) in tb.rows():
            assert abs(d - (ld - lb)) < 1e-15
        assert tb.branch == "plus" and tb.epsilon == 0.125

    def test_harmonic_ladder_near_the_well_bottom(self):
        eps = 1.0 / 64.0
        tb = bohr_sommerfeld_levels(PROF, 1.5, eps, k_range=range(3))
        for (k, ld, _) in tb.eigenvalues:
            assert abs(ld - (1.0 + (2 * k + 1) * eps)) < 1e-3

    def test_action_rule_matches_direct_spectrum(self):
        eps = 1.0 / 32.0
        tb = bohr_sommerfeld_levels(PROF, 1.5, eps, k_range=range(8))
        worst = max(abs(d) for (_, _, _, d) in tb.rows())
        assert worst < 0.2 * eps * eps

    def test_action_monotone_in_energy(self):
        x_bot, v_bot, x_top, v_top = _well_geometry(PROF)
        lams = np.linspace(v_bot + 0.05, v_top - 0.05, 12)
        acts = [_well_action(PROF, lam, x_top, x_bot) for lam in lams]
        assert all(a < b for a, b in zip(acts, acts[1:]))

    def test_level_above_barrier_rejected(self):
        with pytest.raises(WindowError):
            bohr_sommerfeld_levels(PROF, 1.5, 0.125, k_range=[40])

    def test_bad_arguments_rejected(self):
        with pytest.raises(ConfigError):
            bohr_sommerfeld_levels(PROF, 1.5, 0.125, branch="fast")
        with pytest.raises(ConfigError):
            bohr_sommerfeld_levels(PROF, 1.5, 0.125, k_range=[-1])

    def test_degenerate_well_rejected(self):
        with pytest.raises(WindowError):
            bohr_sommerfeld_levels(builtin_profile("sin"), 1.5, 0.125)


class TestScalarResidual:
    def test_residual_matches_subprincipal_identity(self):
        eps, xi1 = 1.0 / 16.0, 1.5
        rep = scalar_residual_check(PROF, xi1, eps)
        h2 = _h2_matrix(PROF, eps, rep.n_grid)
        w, V = np.linalg.eigh(h2)
        x = 2.0 * math.pi * np.arange(rep.n_grid) / rep.n_grid
        bp = PROF.eval(x)[1]
        for (k, lam, res) in rep.entries:
            psi = V[:, k]
            want = eps * abs(xi1 / lam) * float(
                np.linalg.norm(bp * psi) / np.linalg.norm(psi))
            assert abs(res - want) < 1e-9

    def test_residual_small_on_spectrum(self):
        eps = 1.0 / 16.0
        rep = scalar_residual_check(PROF, 1.5, eps)
        assert max(r for (_, _, r) in rep.entries) < 0.5 * eps

    def test_residual_decays_in_epsilon(self):
        worst = {}
        for eps in (0.125, 1.0 / 32.0):
            rep = scalar_residual_check(PROF, 1.5, eps)
            worst[eps] = max(r for (_, _, r) in rep.entries)
        assert worst[1.0 / 32.0] < 0.3 * worst[0.125]

    def test_off_spectrum_residual_order_one(self):
        rep = scalar_residual_check(PROF, 1.5, 1.0 / 16.0)
        assert rep.off_spectrum_residual > 0.1
        assert rep.off_spectrum_residual > 10.0 * max(
            r for (_, _, r) in rep.entries)

    def test_degenerate_xi1_rejected(self):
        with pytest.raises(Inadmissible):
            scalar_residual_check(PROF, 0.0, 0.125)

    def test_report_serializes(self):
        rep = scalar_residual_check(PROF, 1.5, 0.125, n_modes=2)
        d = rep.as_dict()
        assert d["profile"] == "2+sin" and len(d["entries"]) == 2
        assert set(d["entries"][0]) == {"k", "lam", "residual"}
