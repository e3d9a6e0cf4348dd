"""Hamiltonian ray tracing for the slow branch and the drift functional F.

The slow-branch rays move under E(xi1, x2, xi2) = b'(x2) xi1 / D with
D = xi1^2 + xi2^2 + b^2. The (x2, xi2) motion is one-dimensional and
periodic; x1 is slaved to it. F is the net x1 drift over one (x2, xi2)
period, computed three independent ways: along the flow, by a singular
turning-point quadrature, and through the action-variable surface H(A, xi1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    NoClosedOrbit,
    NoReturn,
    NoTurningPoints,
    QuadratureFailure,
    TableOutOfRange,
    ToleranceExceeded,
)
from .symbols import PhasePoint, require_admissible, rossby_symbol_E

T_MAX = 1.0e4
PERIOD_MAX = 1.0e3
TOL_E = 1.0e-9
DEFAULT_DT = 5.0e-3


def _wrap_pi(d):
    """Reduce an angle difference to (-pi, pi]."""
    return (d + math.pi) % (2.0 * math.pi) - math.pi


@dataclass(frozen=True)
class RayState:
    point: PhasePoint
    time: float
    energy_E: float


@dataclass(frozen=True)
class Trajectory:
    samples: list
    dt: float
    conserved_drift: tuple  # (max |E - E0|, max |xi1 - xi1(0)|)


@dataclass(frozen=True)
class PeriodData:
    period: float
    section_point: PhasePoint
    classification: str  # "periodic" | "near_degenerate"
    return_distance: float = 0.0


def ray_rhs(profile, pt):
    """Right-hand side (dx1, dx2, dxi1, dxi2) of the slow-branch ray system.

    dx1  = dE/dxi1 = b' (xi2^2 + b^2 - xi1^2) / D^2
    dx2  = dE/dxi2 = -2 b' xi1 xi2 / D^2
    dxi1 = 0
    dxi2 = -dE/dx2 = -xi1 (b'' D - 2 b b'^2) / D^2
    """
    require_admissible(profile, pt)
    return _rhs(profile, pt.x2, pt.xi1, pt.xi2)


def _rhs(profile, x2, xi1, xi2):
    b, bp, bpp = profile.eval_scalar(x2)
    D = xi1 * xi1 + xi2 * xi2 + b * b
    D2 = D * D
    dx1 = bp * (xi2 * xi2 + b * b - xi1 * xi1) / D2
    dx2 = -2.0 * bp * xi1 * xi2 / D2
    dxi2 = -xi1 * (bpp * D - 2.0 * b * bp * bp) / D2
    return dx1, dx2, 0.0, dxi2


def _step(profile, x1, x2, xi1, xi2, h):
    """One classical fourth-order step of (x1, x2, xi2); xi1 is a parameter."""
    a1, a2, _, a4 = _rhs(profile, x2, xi1, xi2)
    b1, b2, _, b4 = _rhs(profile, x2 + 0.5 * h * a2, xi1, xi2 + 0.5 * h * a4)
    c1, c2, _, c4 = _rhs(profile, x2 + 0.5 * h * b2, xi1, xi2 + 0.5 * h * b4)
    d1, d2, _, d4 = _rhs(profile, x2 + h * c2, xi1, xi2 + h * c4)
    s = h / 6.0
    return (x1 + s * (a1 + 2.0 * (b1 + c1) + d1),
            x2 + s * (a2 + 2.0 * (b2 + c2) + d2),
            xi2 + s * (a4 + 2.0 * (b4 + c4) + d4))


def _energy(profile, x2, xi1, xi2):
    b, bp, _ = profile.eval_scalar(x2)
    return bp * xi1 / (xi1 * xi1 + xi2 * xi2 + b * b)


def integrate_ray(profile, pt0, t_end, dt=DEFAULT_DT, tol_E=TOL_E,
                  store_every=1, max_halvings=8):
    """Integrate the ray through pt0 up to t_end with E-drift control.

    The step is halved and the run restarted until max |E(t) - E(0)| stays
    within tol_E. Samples are recorded every `store_every` accepted steps.
    """
    require_admissible(profile, pt0)
    E0 = _energy(profile, pt0.x2, pt0.xi1, pt0.xi2)
    for attempt in range(max_halvings + 1):
        h = dt / (2 ** attempt)
        n = max(1, math.ceil(abs(t_end) / h))
        h = t_end / n
        x1, x2, xi2 = pt0.x1, pt0.x2, pt0.xi2
        xi1 = pt0.xi1
        samples = [RayState(pt0, 0.0, E0)]
        drift = 0.0
        ok = True
        for i in range(1, n + 1):
            x1, x2, xi2 = _step(profile, x1, x2, xi1, xi2, h)
            E = _energy(profile, x2, xi1, xi2)
            d = abs(E - E0)
            if d > drift:
                drift = d
            if d > tol_E:
                ok = False
                break
            if i % store_every == 0 or i == n:
                samples.append(RayState(PhasePoint(x1, x2, xi1, xi2), i * h, E))
        if ok:
            return Trajectory(samples=samples, dt=h, conserved_drift=(drift, 0.0))
    raise ToleranceExceeded(
        f"energy drift {drift:.3e} exceeds {tol_E:.1e} at smallest step {h:.3e}")


def find_period(profile, pt0, dt=DEFAULT_DT, t_max=T_MAX, period_max=PERIOD_MAX,
                tol_E=TOL_E, return_tol=1e-7):
    """First-return period of the (x2, xi2) motion through pt0.

    The section is the line through (x2(0), xi2(0)) normal to the initial
    velocity, crossed in the direction of that velocity; this stays
    transversal when the start lies at a turning point, where the literal
    vertical section would be tangent to the orbit. The crossing time is
    refined by bisection to 1e-10 and the return distance is verified.
    """
    require_admissible(profile, pt0)
    _, v2, _, v4 = _rhs(profile, pt0.x2, pt0.xi1, pt0.xi2)
    speed = math.hypot(v2, v4)
    if speed < 1e-12:
        return PeriodData(period=math.inf, section_point=pt0,
                          classification="near_degenerate")
    n2, n4 = v2 / speed, v4 / speed

    last = None
    for attempt in range(6):
        h = dt / (2 ** attempt)
        found = _first_return(profile, pt0, n2, n4, h, t_max, return_tol, tol_E)
        if found is None:
            raise NoReturn(f"no section return within t_max = {t_max:g}")
        period, dist, drift = found
        last = found
        if dist <= return_tol and drift <= tol_E:
            cls = "periodic" if period <= period_max else "near_degenerate"
            return PeriodData(period=period, section_point=pt0,
                              classification=cls, return_distance=dist)
    raise ToleranceExceeded(
        f"return distance {last[1]:.3e} or E-drift {last[2]:.3e} "
        f"not within tolerance at the smallest step")


def _first_return(profile, pt0, n2, n4, h, t_max, return_tol, tol_E):
    """Scan for the first genuine section return.

    Returns (period, return_distance, max_E_drift), or None if t_max is
    exhausted without a candidate crossing near the base point.
    """
    xi1 = pt0.xi1
    E0 = _energy(profile, pt0.x2, xi1, pt0.xi2)
    x1, x2, xi2 = pt0.x1, pt0.x2, pt0.xi2
    s_prev = 0.0
    t = 0.0
    drift = 0.0
    best = None
    armed = False  # becomes true once the orbit has left the section's + side
    while t < t_max:
        x1n, x2n, xi2n = _step(profile, x1, x2, xi1, xi2, h)
        t += h
        d = abs(_energy(profile, x2n, xi1, xi2n) - E0)
        if d > drift:
            drift = d
        s = _wrap_pi(x2n - pt0.x2) * n2 + (xi2n - pt0.xi2) * n4
        if not armed:
            if s < 0.0:
                armed = True
        elif s_prev < 0.0 <= s:
            tc, x2c, xi2c = _refine_crossing(profile, x1, x2, xi2, xi1,
                                             pt0, n2, n4, h)
            dist = math.hypot(_wrap_pi(x2c - pt0.x2), xi2c - pt0.xi2)
            if dist <= return_tol:
                return (t - h + tc, dist, drift)
            if best is None or dist < best[1]:
                best = (t - h + tc, dist, drift)
            # crossed the hyperplane away from the base point; keep going
        x1, x2, xi2 = x1n, x2n, xi2n
        s_prev = s
    return best


def _refine_crossing(profile, x1, x2, xi2, xi1, pt0, n2, n4, h):
    """Bisect the step fraction at which the section function vanishes."""
    lo, hi = 0.0, h
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        _, x2m, xi2m = _step(profile, x1, x2, xi1, xi2, mid)
        s = _wrap_pi(x2m - pt0.x2) * n2 + (xi2m - pt0.xi2) * n4
        if s < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-14 * max(1.0, h):
            break
    mid = 0.5 * (lo + hi)
    _, x2m, xi2m = _step(profile, x1, x2, xi1, xi2, mid)
    return mid, x2m, xi2m


def drift_F_time(profile, pt0, dt=DEFAULT_DT, period=None):
    """F as the net x1 drift over one period, along the integrated flow."""
    if period is None:
        pd = find_period(profile, pt0, dt=dt)
        if pd.classification != "periodic":
            raise ToleranceExceeded(
                f"near-degenerate orbit (period {pd.period:g}); F not computed")
        period = pd.period
    n = max(64, math.ceil(period / dt))
    h = period / n
    x1, x2, xi2 = 0.0, pt0.x2, pt0.xi2
    for _ in range(n):
        x1, x2, xi2 = _step(profile, x1, x2, pt0.xi1, xi2, h)
    return x1


def _g_and_parts(profile, x, xi1, E):
    b, bp, _ = profile.eval_scalar(x)
    g = bp * xi1 / E - xi1 * xi1 - b * b
    return g, bp


def _find_turning_points(profile, xi1, x2, E, scan=1024):
    """Nearest zeros of g on each side of x2; g(x2) = xi2^2 >= 0 on the orbit."""
    from scipy.optimize import brentq

    def g(x):
        return _g_and_parts(profile, x, xi1, E)[0]

    g0 = g(x2)
    if g0 < -1e-10:
        raise NoClosedOrbit(f"base point is not on the level set (g = {g0:.3e})")

    hs = 2.0 * math.pi / scan
    offs = hs * np.arange(scan + 1)

    def march(direction):
        xs = x2 + direction * offs
        b, bp, _ = profile.eval(xs)
        gs = bp * xi1 / E - xi1 * xi1 - b * b
        gs[0] = max(g0, 0.0)
        neg = gs < 0.0
        if not neg.any():
            return None
        i = int(np.argmax(neg))
        lo, hi = xs[i - 1], xs[i]
        if lo > hi:
            lo, hi = hi, lo
        return brentq(g, lo, hi, xtol=1e-13)

    x_plus = march(+1.0)
    x_minus = march(-1.0)
    if x_plus is None or x_minus is None:
        raise NoTurningPoints("g has no sign change on the circle; orbit circulates")
    return x_minus, x_plus


def _gauss_half(profile, xi1, E, bnd, xc, sgn, nodes, weights):
    """Integrate (b'/E - 2 xi1)/sqrt(g) from a turning point to the midpoint.

    The substitution x = bnd + sgn * s^2 removes the inverse square-root
    endpoint singularity; the remaining integrand is smooth.
    """
    smax = math.sqrt(abs(xc - bnd))
    s = 0.5 * smax * (nodes + 1.0)
    w = 0.5 * smax * weights
    x = bnd + sgn * s * s
    b, bp, _ = profile.eval(x)
    g = bp * xi1 / E - xi1 * xi1 - b * b
    g = np.maximum(g, 0.0)
    # guard the removable endpoint: g/s^2 stays bounded
    with np.errstate(divide="ignore", invalid="ignore"):
        integrand = (bp / E - 2.0 * xi1) * 2.0 * s / np.sqrt(g)
    integrand = np.where(g > 0.0, integrand, 0.0)
    return float(np.sum(w * integrand))


_LEG_CACHE = {}


def _leggauss(n):
    if n not in _LEG_CACHE:
        _LEG_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _LEG_CACHE[n]


def signed_drift_F_space(profile, xi1, x2, xi2, n=300, check=True):
    """Signed turning-point quadrature for F.

    F = sign(E) * int_{x-}^{x+} (b'(x)/E - 2 xi1) / sqrt(g(x)) dx with
    g(x) = b'(x) xi1 / E - xi1^2 - b^2(x); the orbit satisfies xi2^2 = g.
    """
    pt = PhasePoint(0.0, x2, xi1, xi2)
    require_admissible(profile, pt)
    E = rossby_symbol_E(profile, pt)
    if E == 0.0:
        raise NoClosedOrbit("E = 0: the drift Hamiltonian level set is critical")
    xm, xp = _find_turning_points(profile, xi1, x2, E)
    xc = 0.5 * (xm + xp)

    def quad(m):
        nodes, weights = _leggauss(m)
        return (_gauss_half(profile, xi1, E, xm, xc, +1.0, nodes, weights)
                + _gauss_half(profile, xi1, E, xp, xc, -1.0, nodes, weights))

    val = quad(n)
    if check:
        ref = quad(2 * n)
        if abs(ref - val) > 1e-7 * max(1.0, abs(ref)):
            raise QuadratureFailure(
                f"turning-point quadrature not converged: {val:.10g} vs {ref:.10g}")
        val = ref
    return math.copysign(1.0, E) * val


def drift_F_space(profile, xi1, x2, xi2, n=300):
    """|F| by the turning-point integral (the quadrature route)."""
    return abs(signed_drift_F_space(profile, xi1, x2, xi2, n=n))


def orbit_area(profile, xi1, E, x2_hint, n=300):
    """Area 2 int sqrt(g) dx enclosed by the orbit of energy E at fixed xi1."""
    if E == 0.0:
        raise NoClosedOrbit("E = 0 level set")
    xm, xp = _find_turning_points(profile, xi1, x2_hint, E)
    xc = 0.5 * (xm + xp)
    nodes, weights = _leggauss(n)

    def half(bnd, sgn):
        smax = math.sqrt(abs(xc - bnd))
        s = 0.5 * smax * (nodes + 1.0)
        w = 0.5 * smax * weights
        x = bnd + sgn * s * s
        b, bp, _ = profile.eval(x)
        g = np.maximum(bp * xi1 / E - xi1 * xi1 - b * b, 0.0)
        return float(np.sum(w * np.sqrt(g) * 2.0 * s))

    return 2.0 * (half(xm, +1.0) + half(xp, -1.0))


def action_A(profile, xi1, E, x2_hint=None):
    """Action A = (1/2pi) * loop integral of xi2 dx2 on the (xi1, E) orbit.

    The hint selects the librating interval when the profile admits several;
    by default the interval around the global maximizer of g is used.
    """
    if x2_hint is None:
        xs = np.linspace(0.0, 2.0 * math.pi, 721)
        b, bp, _ = profile.eval(xs)
        g = bp * xi1 / E - xi1 * xi1 - b * b
        if np.max(g) <= 0.0:
            raise NoClosedOrbit("level set is empty at this (xi1, E)")
        x2_hint = float(xs[int(np.argmax(g))])
    return orbit_area(profile, xi1, E, x2_hint) / (2.0 * math.pi)


def drift_F_action(profile, pt, rel_step=1e-3):
    """F from the action surface H(A, xi1), by centered differences.

    In action-angle form F = (2pi/omega) * dH/dxi1|_A with omega = dH/dA.
    Since A = a/2pi for loop area a, the frequency gives 2pi/omega = |da/dE|
    and F = |da/dE| * dE/dxi1|_a. The xi1 derivative at fixed action is
    taken by re-solving E from the area on neighboring xi1 values.
    """
    from scipy.optimize import brentq

    require_admissible(profile, pt)
    E0 = rossby_symbol_E(profile, pt)
    if E0 == 0.0:
        raise NoClosedOrbit("E = 0")
    xi1 = pt.xi1
    # anchor the well hint at the deepest point of the base orbit's interval:
    # pt.x2 itself may sit near a turning point and fall off perturbed levels
    xm, xp = _find_turning_points(profile, xi1, pt.x2, E0)
    xs = np.linspace(xm, xp, 201)
    b, bp, _ = profile.eval(xs)
    gs = bp * xi1 / E0 - xi1 * xi1 - b * b
    hint = float(xs[int(np.argmax(gs))])
    a0 = orbit_area(profile, xi1, E0, hint)

    dE = abs(E0) * rel_step
    dadE = (orbit_area(profile, xi1, E0 + dE, hint)
            - orbit_area(profile, xi1, E0 - dE, hint)) / (2.0 * dE)
    if not math.isfinite(dadE) or dadE == 0.0:
        raise TableOutOfRange("da/dE vanished; cannot invert the action table")

    h = max(abs(xi1) * rel_step, rel_step)

    def solve_E(x1v):
        def f(e):
            return orbit_area(profile, x1v, e, hint) - a0
        lo, hi = E0 * (1.0 - 64.0 * rel_step), E0 * (1.0 + 64.0 * rel_step)
        if lo > hi:
            lo, hi = hi, lo
        flo, fhi = f(lo), f(hi)
        if flo * fhi > 0.0:
            raise TableOutOfRange("action level left the tabulated E-bracket")
        return brentq(f, lo, hi, xtol=1e-14)

    Ep = solve_E(xi1 + h)
    Em = solve_E(xi1 - h)
    dEdxi1_at_a = (Ep - Em) / (2.0 * h)
    return abs(dadE) * dEdxi1_at_a
