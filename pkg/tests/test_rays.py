import math

import numpy as np
import pytest
from scipy.integrate import simpson
from scipy.optimize import brentq

from rossbytrap.errors import NoReturn
from rossbytrap.profiles import builtin_profile
from rossbytrap.rays import (
    action_A,
    drift_F_action,
    drift_F_space,
    drift_F_time,
    find_period,
    integrate_ray,
    orbit_area,
    ray_rhs,
    signed_drift_F_space,
)
from rossbytrap.symbols import PhasePoint, rossby_symbol_E

SIN = builtin_profile("sin")
SHIFT = builtin_profile("2+sin")

# probe orbit with all three F routes frozen from an independent derivation
PROBE = PhasePoint(0.0, math.pi / 2 + 0.3, 1.3, 0.2)
PROBE_F = -10.62132541
PROBE_T = 453.04527316


def fd_gradient_E(profile, pt, h=1e-6):
    def E(x2, xi1, xi2):
        return rossby_symbol_E(profile, PhasePoint(0, x2, xi1, xi2))

    dE_dxi1 = (E(pt.x2, pt.xi1 + h, pt.xi2) - E(pt.x2, pt.xi1 - h, pt.xi2)) / (2 * h)
    dE_dxi2 = (E(pt.x2, pt.xi1, pt.xi2 + h) - E(pt.x2, pt.xi1, pt.xi2 - h)) / (2 * h)
    dE_dx2 = (E(pt.x2 + h, pt.xi1, pt.xi2) - E(pt.x2 - h, pt.xi1, pt.xi2)) / (2 * h)
    return dE_dxi1, dE_dxi2, dE_dx2


def test_rhs_frozen_value():
    # dx1 = (sqrt2/2)(-1/2)/(9/4) = -sqrt2/9 at xi1=1, xi2=0, x2=pi/4, b=sin
    dx1, dx2, dxi1, dxi2 = ray_rhs(SIN, PhasePoint(0.0, math.pi / 4, 1.0, 0.0))
    assert dx1 == pytest.approx(-math.sqrt(2) / 9, abs=1e-12)
    assert dxi1 == 0.0
    assert dx2 == 0.0  # dE/dxi2 vanishes at xi2 = 0


def test_rhs_matches_finite_differences():
    rng = np.random.default_rng(3)
    for _ in range(25):
        pt = PhasePoint(0.0, rng.uniform(0, 2 * math.pi),
                        rng.choice([-1, 1]) * rng.uniform(0.3, 2.5),
                        rng.uniform(-2, 2))
        dx1, dx2, dxi1, dxi2 = ray_rhs(SHIFT, pt)
        gxi1, gxi2, gx2 = fd_gradient_E(SHIFT, pt)
        assert dx1 == pytest.approx(gxi1, abs=1e-8)
        assert dx2 == pytest.approx(gxi2, abs=1e-8)
        assert dxi2 == pytest.approx(-gx2, abs=1e-8)
        assert dxi1 == 0.0


def _center_x2(profile, xi1):
    """Fixed point of the (x2, xi2) system with xi2 = 0: b'' D = 2 b b'^2.

    For 2+sin there are two such points, one in (pi, 3pi/2) (E < 0 well) and
    one in (3pi/2, 2pi) (E > 0 peak); bracket the first.
    """

    def phi(x2):
        b, bp, bpp = profile.eval_scalar(x2)
        return bpp * (xi1 ** 2 + b * b) - 2 * b * bp * bp

    return brentq(phi, math.pi + 0.05, 1.5 * math.pi - 0.05, xtol=1e-14)


def test_equilibrium_stays_put():
    xi1 = 2.0
    xc = _center_x2(SHIFT, xi1)
    traj = integrate_ray(SHIFT, PhasePoint(0.0, xc, xi1, 0.0), 5.0, dt=0.01)
    end = traj.samples[-1].point
    assert abs(end.x2 - xc) < 1e-12
    assert abs(end.xi2) < 1e-12


def test_energy_and_xi1_conserved():
    traj = integrate_ray(SHIFT, PROBE, 50.0, dt=0.005, store_every=100)
    assert traj.conserved_drift[0] <= 1e-9
    assert all(s.point.xi1 == PROBE.xi1 for s in traj.samples)
    E0 = traj.samples[0].energy_E
    for s in traj.samples:
        assert abs(s.energy_E - E0) <= 1e-9


def test_flow_reversal_symmetry():
    # xi1 -> -xi1 sends E -> -E and runs the (x2, xi2) motion backward
    t = 7.3
    fwd = integrate_ray(SHIFT, PROBE, t, dt=0.002).samples[-1].point
    back = integrate_ray(
        SHIFT, PhasePoint(0.0, fwd.x2, -fwd.xi1, fwd.xi2), t, dt=0.002
    ).samples[-1].point
    assert back.x2 == pytest.approx(PROBE.x2, abs=1e-8)
    assert back.xi2 == pytest.approx(PROBE.xi2, abs=1e-8)


def test_find_period_probe_orbit():
    pd = find_period(SHIFT, PROBE)
    assert pd.classification == "periodic"
    assert pd.period == pytest.approx(PROBE_T, rel=1e-6)
    assert pd.return_distance <= 1e-7


def test_period_convergence_in_step():
    p1 = find_period(SHIFT, PROBE, dt=0.005).period
    p2 = find_period(SHIFT, PROBE, dt=0.0025).period
    assert p1 == pytest.approx(p2, rel=1e-7)


def test_fixed_point_is_near_degenerate():
    xi1 = 2.0
    xc = _center_x2(SHIFT, xi1)
    pd = find_period(SHIFT, PhasePoint(0.0, xc, xi1, 0.0))
    assert pd.classification == "near_degenerate"
    assert pd.period == math.inf


def test_no_return_within_budget():
    with pytest.raises(NoReturn):
        find_period(SHIFT, PROBE, t_max=10.0)


def test_harmonic_period_near_center():
    # small oscillation: period matches the linearized 2x2 system to 1%
    xi1 = 2.0
    xc = _center_x2(SHIFT, xi1)
    h = 1e-6

    def vel(x2, xi2):
        _, dx2, _, dxi2 = ray_rhs(SHIFT, PhasePoint(0.0, x2, xi1, xi2))
        return np.array([dx2, dxi2])

    J = np.empty((2, 2))
    J[:, 0] = (vel(xc + h, 0.0) - vel(xc - h, 0.0)) / (2 * h)
    J[:, 1] = (vel(xc, h) - vel(xc, -h)) / (2 * h)
    omega = abs(np.linalg.eigvals(J)).max()
    expected = 2 * math.pi / omega

    pd = find_period(SHIFT, PhasePoint(0.0, xc + 1e-3, xi1, 0.0), dt=expected / 400)
    assert pd.period == pytest.approx(expected, rel=1e-2)


def test_drift_F_time_frozen_value():
    assert drift_F_time(SHIFT, PROBE) == pytest.approx(PROBE_F, abs=2e-5)


def test_drift_F_space_matches_time():
    s = signed_drift_F_space(SHIFT, PROBE.xi1, PROBE.x2, PROBE.xi2)
    assert s == pytest.approx(PROBE_F, abs=1e-6)
    assert drift_F_space(SHIFT, PROBE.xi1, PROBE.x2, PROBE.xi2) == abs(s)


def test_drift_F_action_matches():
    fa = drift_F_action(SHIFT, PROBE)
    assert fa == pytest.approx(PROBE_F, rel=1e-3)


def test_F_even_in_xi1():
    a = signed_drift_F_space(SHIFT, 1.3, PROBE.x2, PROBE.xi2)
    b = signed_drift_F_space(SHIFT, -1.3, PROBE.x2, PROBE.xi2)
    assert a == pytest.approx(b, rel=1e-9)


def test_F_invariant_along_flow():
    F0 = signed_drift_F_space(SHIFT, PROBE.xi1, PROBE.x2, PROBE.xi2)
    rng = np.random.default_rng(5)
    for t in rng.uniform(1.0, 40.0, size=3):
        pt = integrate_ray(SHIFT, PROBE, float(t), dt=0.002).samples[-1].point
        Ft = signed_drift_F_space(SHIFT, pt.xi1, pt.x2, pt.xi2)
        assert Ft == pytest.approx(F0, abs=1e-7)


def test_turning_points_consistency():
    from rossbytrap.rays import _find_turning_points

    E = rossby_symbol_E(SHIFT, PROBE)
    xm, xp = _find_turning_points(SHIFT, PROBE.xi1, PROBE.x2, E)
    assert xm < PROBE.x2 < xp
    for x in (xm, xp):
        b, bp, _ = SHIFT.eval_scalar(x)
        g = bp * PROBE.xi1 / E - PROBE.xi1 ** 2 - b * b
        assert abs(g) <= 1e-9


def test_empty_level_set_rejected():
    # an artificial E far above the attainable range leaves g < 0 everywhere,
    # so the base point itself is off the level set
    from rossbytrap.errors import NoClosedOrbit
    from rossbytrap.rays import _find_turning_points

    with pytest.raises(NoClosedOrbit):
        _find_turning_points(SHIFT, 1.0, 2.0, 5.0)


def test_orbit_area_matches_loop_integral():
    pt = PhasePoint(0.0, 2.5, 2.0, 0.3)
    E = rossby_symbol_E(SHIFT, pt)
    pd = find_period(SHIFT, pt)
    traj = integrate_ray(SHIFT, pt, pd.period, dt=0.002, store_every=1)
    x2s = np.array([s.point.x2 for s in traj.samples])
    xi2s = np.array([s.point.xi2 for s in traj.samples])
    ts = np.array([s.time for s in traj.samples])
    dx2dt = np.gradient(x2s, ts)
    loop = abs(simpson(xi2s * dx2dt, x=ts))
    area = orbit_area(SHIFT, pt.xi1, E, pt.x2)
    assert loop == pytest.approx(area, rel=1e-5)
    assert action_A(SHIFT, pt.xi1, E, pt.x2) == pytest.approx(area / (2 * math.pi), rel=1e-12)


def test_action_monotone_in_E():
    pt = PhasePoint(0.0, 2.5, 2.0, 0.3)
    E = rossby_symbol_E(SHIFT, pt)
    areas = [action_A(SHIFT, pt.xi1, E * (1 + d)) for d in (-0.02, 0.0, 0.02)]
    # shrinking |E| toward 0 enlarges the accessible region
    assert areas[0] > areas[1] > areas[2]


def test_area_derivative_identity():
    # independent identity: F = sign(E) * da/dxi1 at fixed E, a the loop area
    E = rossby_symbol_E(SHIFT, PROBE)
    h = 1e-4
    ap = orbit_area(SHIFT, PROBE.xi1 + h, E, PROBE.x2)
    am = orbit_area(SHIFT, PROBE.xi1 - h, E, PROBE.x2)
    fd = math.copysign(1.0, E) * (ap - am) / (2 * h)
    assert fd == pytest.approx(PROBE_F, rel=1e-4)
