import math

import numpy as np
import pytest

from rossbytrap.errors import DegenerateRoots, Inadmissible
from rossbytrap.profiles import builtin_profile
from rossbytrap.symbols import (
    PhasePoint,
    admissible,
    dispersion_roots,
    jacobian_closed_form,
    mode_columns,
    mode_matrix,
    rossby_symbol_E,
)

SIN = builtin_profile("sin")
SHIFT = builtin_profile("2+sin")


def random_admissible(rng, n, profile=SHIFT):
    """Sample points clear of the admissibility margins."""
    pts = []
    while len(pts) < n:
        x2 = rng.uniform(0, 2 * math.pi)
        xi1 = rng.choice([-1, 1]) * rng.uniform(0.1, 3.0)
        xi2 = rng.uniform(-3.0, 3.0)
        pt = PhasePoint(0.0, x2, xi1, xi2)
        if admissible(profile, pt):
            pts.append(pt)
    return pts


def test_admissibility_margins():
    assert not admissible(SHIFT, PhasePoint(0, 1.0, 5e-4, 1.0))
    assert admissible(SHIFT, PhasePoint(0, 1.0, 0.5, 0.0))
    # b = sin vanishes at x2 = 0, so xi2 must carry the margin there
    assert not admissible(SIN, PhasePoint(0, 0.0, 1.0, 1e-3))
    assert admissible(SIN, PhasePoint(0, 0.0, 1.0, 0.5))


def test_roots_at_zero_epsilon_exact():
    pt = PhasePoint(0.0, 1.0, 1.2, -0.7)
    b = SHIFT.eval_scalar(1.0)[0]
    s = math.sqrt(1.2 ** 2 + 0.7 ** 2 + b * b)
    r = dispersion_roots(SHIFT, pt, 0.0)
    assert r.tau_zero == 0.0
    assert r.tau_plus == pytest.approx(s, abs=0.0)
    assert r.tau_minus == -r.tau_plus


def test_root_ordering_and_residuals():
    rng = np.random.default_rng(7)
    for pt in random_admissible(rng, 200):
        for eps in (0.0, 1e-3, 1e-2, 0.1):
            r = dispersion_roots(SHIFT, pt, eps)
            assert r.tau_minus < r.tau_zero < r.tau_plus
            taus = r.as_tuple()
            assert abs(r.tau_zero) == min(abs(t) for t in taus)
            b, bp, _ = SHIFT.eval_scalar(pt.x2)
            D = pt.xi1 ** 2 + pt.xi2 ** 2 + b * b
            c = eps * bp * pt.xi1
            for t in taus:
                assert abs(t ** 3 - D * t + c) <= 1e-12 * max(1.0, abs(t) ** 3)


def test_tau_zero_vanishes_when_bprime_zero():
    # x2 = pi/2 is a critical point of sin, so the eps-term drops out
    pt = PhasePoint(0.0, math.pi / 2, 1.0, 1.0)
    for eps in (1e-3, 0.05, 0.3):
        r = dispersion_roots(SIN, pt, eps)
        assert r.tau_zero == 0.0


def test_tau_zero_limit_matches_E():
    # frozen oracle: E = (sqrt(2)/2) / (3/2) at xi1=1, xi2=0, x2=pi/4, b=sin
    pt = PhasePoint(0.0, math.pi / 4, 1.0, 0.0)
    E = rossby_symbol_E(SIN, pt)
    assert E == pytest.approx(0.4714045207910317, abs=1e-12)
    errs = []
    eps_list = (1e-2, 5e-3, 2.5e-3)
    for eps in eps_list:
        r = dispersion_roots(SIN, pt, eps)
        errs.append(abs(r.tau_zero / eps - E))
    slope = np.polyfit(np.log(eps_list), np.log(errs), 1)[0]
    assert slope == pytest.approx(2.0, abs=0.2)


def test_degenerate_discriminant_raises():
    pt = PhasePoint(0.0, 0.0, 0.2, 0.2)
    with pytest.raises(DegenerateRoots):
        dispersion_roots(SIN, pt, 50.0)


def test_inadmissible_raises():
    with pytest.raises(Inadmissible):
        dispersion_roots(SHIFT, PhasePoint(0, 1.0, 0.0, 1.0), 0.1)
    with pytest.raises(Inadmissible):
        rossby_symbol_E(SIN, PhasePoint(0, 0.0, 1.0, 0.0))
    with pytest.raises(Inadmissible):
        mode_matrix(SIN, PhasePoint(0, 0.0, 1.0, 0.0))


def test_jacobian_frozen_value():
    # b=1, b'=0 at x2=pi/2: D=2 and |det q| = 2*2^{3/2} = 4 sqrt(2)
    mm = mode_matrix(SIN, PhasePoint(0.0, math.pi / 2, 1.0, 0.0))
    assert mm.jacobian == pytest.approx(4 * math.sqrt(2), rel=1e-12)


def test_projector_row_frozen_value():
    mm = mode_matrix(SIN, PhasePoint(0.0, math.pi / 2, 1.0, 0.0))
    row = mm.p[1]
    assert row == pytest.approx(np.array([0.5j, 0.0, 0.5]), abs=1e-12)


def test_mode_matrix_inverse_and_jacobian_random():
    rng = np.random.default_rng(11)
    for pt in random_admissible(rng, 300):
        mm = mode_matrix(SHIFT, pt)
        assert np.max(np.abs(mm.p @ mm.q - np.eye(3))) <= 1e-12
        ref = jacobian_closed_form(SHIFT, pt)
        assert mm.jacobian == pytest.approx(ref, rel=1e-10)
        assert mm.jacobian >= 2.0


def test_projector_row_formula_random():
    rng = np.random.default_rng(13)
    for pt in random_admissible(rng, 100):
        b = SHIFT.eval_scalar(pt.x2)[0]
        D = pt.xi1 ** 2 + pt.xi2 ** 2 + b * b
        expect = np.array([1j * b * pt.xi1 / D,
                           -pt.xi1 * pt.xi2 / D,
                           pt.xi1 ** 2 / D])
        mm = mode_matrix(SHIFT, pt)
        assert np.max(np.abs(mm.p[1] - expect)) <= 1e-12


def test_slow_column_limit():
    # tau -> 0 column reduces to (-i b / xi1, -xi2 / xi1, 1)
    b, xi1, xi2 = 2.3, 1.7, -0.4
    rho, u1, u2 = mode_columns(b, xi1, xi2, 0.0)
    assert complex(rho) == pytest.approx(-1j * b / xi1, abs=1e-14)
    assert complex(u1) == pytest.approx(-xi2 / xi1, abs=1e-14)
    assert complex(u2) == 1.0


def test_E_symmetry_and_degeneracies():
    pt = PhasePoint(0.0, 1.1, 1.4, 0.5)
    m = PhasePoint(0.0, 1.1, -1.4, 0.5)
    assert rossby_symbol_E(SHIFT, pt) == pytest.approx(-rossby_symbol_E(SHIFT, m), abs=1e-15)
    # b' of 1+0.5cos is exactly representable as zero at x2 = 0
    cosp = builtin_profile("1+0.5cos")
    assert rossby_symbol_E(cosp, PhasePoint(0, 0.0, 1.0, 0.3)) == 0.0
