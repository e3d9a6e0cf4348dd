"""Trapped-set construction: the zero set of the drift functional F.

Rays whose base point satisfies F(xi1, x2, xi2) = 0 have no secular x1
drift and stay over a bounded longitude band. This module locates those
roots in xi1 at fixed (x2, xi2), samples the resulting set as a point
cloud over a latitude/momentum grid, fits the small-xi1 divergence of F,
and checks that roots are critical points of the fixed-E orbit area.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import FitFailure, NoSignChange
from .rays import orbit_area, signed_drift_F_space
from .symbols import DELTA_XI1, PhasePoint, rossby_symbol_E

SCAN_QUAD_N = 160
ROOT_XTOL = 1e-10


@dataclass(frozen=True)
class LambdaPoint:
    """One root of xi1 -> F(xi1, x2, xi2), with its bisection bracket."""

    x2: float
    xi2: float
    xi1_root: float
    F_residual: float
    bracket: tuple


@dataclass(frozen=True)
class ScalingReport:
    """Fit of log|F| against log xi1 on a decreasing xi1 sequence."""

    slope: float
    intercept: float
    xi1_values: tuple
    F_values: tuple
    lower_bound_F_xi1: float  # min |F| * xi1 along the sequence
    root_free_below: bool     # no sign change between delta_xi1 and min(xi1)


@dataclass(frozen=True)
class ExtremalAreaReport:
    """Behavior of the fixed-E orbit area a(xi1) around a Lambda root."""

    xi1_root: float
    energy_E: float
    a_prime_root: float
    a_prime_left: float
    a_prime_right: float
    sign_change: bool
    a_second: float
    slope_over_F: float  # da/dxi1 divided by sign(E) F at an off-root node


def _scan_F(profile, x2, xi2, xi1_values):
    """Evaluate signed F along a xi1 scan; failures become NaN."""
    out = np.empty(len(xi1_values))
    for i, v in enumerate(xi1_values):
        try:
            out[i] = signed_drift_F_space(profile, float(v), x2, xi2,
                                          n=SCAN_QUAD_N, check=False)
        except Exception:
            out[i] = math.nan
    return out


def _log_grid(lo, hi, nodes_per_decade):
    n = max(2, int(math.ceil(nodes_per_decade * math.log10(hi / lo))) + 1)
    return np.exp(np.linspace(math.log(lo), math.log(hi), n))


def find_lambda_roots(profile, x2, xi2, xi1_range=(0.05, 32.0),
                      nodes_per_decade=64):
    """All roots of xi1 -> F at fixed (x2, xi2), on both signs of xi1.

    F is scanned on a log-spaced grid of |xi1| (the drift varies over
    decades near xi1 -> 0), sign changes are bisected to 1e-10, and each
    root is re-evaluated with the convergence-checked quadrature. Raises
    NoSignChange when no bracket exists anywhere in the range; the message
    reports the endpoint signs so the caller can widen the range.
    """
    lo, hi = float(xi1_range[0]), float(xi1_range[1])
    if not (DELTA_XI1 <= lo < hi):
        raise ValueError(f"xi1_range must satisfy {DELTA_XI1} <= lo < hi")
    mags = _log_grid(lo, hi, nodes_per_decade)

    roots = []
    endpoint_note = []
    for branch in (1.0, -1.0):
        xs = branch * mags
        Fs = _scan_F(profile, x2, xi2, xs)
        valid = np.isfinite(Fs)
        endpoint_note.append(
            f"F({xs[0]:+.3g}) = {Fs[0]:+.3g}, F({xs[-1]:+.3g}) = {Fs[-1]:+.3g}")
        for i in range(len(xs) - 1):
            if not (valid[i] and valid[i + 1]):
                continue
            if Fs[i] == 0.0:
                a, b = xs[max(i - 1, 0)], xs[i + 1]
            elif Fs[i] * Fs[i + 1] < 0.0:
                a, b = xs[i], xs[i + 1]
            else:
                continue

            def f(v):
                return signed_drift_F_space(profile, v, x2, xi2,
                                            n=SCAN_QUAD_N, check=False)

            r = brentq(f, a, b, xtol=ROOT_XTOL)
            resid = abs(signed_drift_F_space(profile, r, x2, xi2))
            lo_b, hi_b = (a, b) if a < b else (b, a)
            roots.append(LambdaPoint(x2=x2, xi2=xi2, xi1_root=float(r),
                                     F_residual=float(resid),
                                     bracket=(float(lo_b), float(hi_b))))
    if not roots:
        raise NoSignChange(
            "no sign change of F in the scanned range; endpoints: "
            + "; ".join(endpoint_note))
    roots.sort(key=lambda p: p.xi1_root)
    return roots


def sample_lambda(profile, x2_nodes, xi2_nodes, xi1_range=(0.3, 24.0),
                  nodes_per_decade=64, workers=None):
    """Sample the trapped set over a (x2, xi2) grid as a point cloud.

    Returns (points, summary, errors). Nodes where no root exists (or the
    scan fails) are recorded in `errors` and skipped; the summary reports
    the coverage fraction and, along covered grid neighbors, the largest
    jump of the smallest positive root, a proxy for the cloud forming a
    local graph xi1 = xi1(x2, xi2). The cloud carries no x1 coordinate:
    F does not depend on x1.
    """
    x2_nodes = np.asarray(x2_nodes, dtype=float)
    xi2_nodes = np.asarray(xi2_nodes, dtype=float)
    jobs = [(i, j, float(x2), float(xi2))
            for i, x2 in enumerate(x2_nodes)
            for j, xi2 in enumerate(xi2_nodes)]

    def solve(job):
        i, j, x2, xi2 = job
        try:
            return i, j, find_lambda_roots(profile, x2, xi2, xi1_range,
                                           nodes_per_decade), None
        except Exception as exc:  # per-node failures are data, not fatal
            return i, j, None, f"{type(exc).__name__}: {exc}"

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(solve, jobs))
    else:
        results = [solve(job) for job in jobs]

    points = []
    errors = []
    primary = np.full((len(x2_nodes), len(xi2_nodes)), math.nan)
    covered = 0
    for i, j, found, err in results:
        if found is None:
            errors.append({"x2": float(x2_nodes[i]), "xi2": float(xi2_nodes[j]),
                           "error": err})
            continue
        covered += 1
        points.extend(found)
        pos = [p.xi1_root for p in found if p.xi1_root > 0]
        if pos:
            primary[i, j] = min(pos)

    jumps = []
    for axis in (0, 1):
        d = np.abs(np.diff(primary, axis=axis))
        jumps.extend(d[np.isfinite(d)].tolist())
    summary = {
        "n_nodes": len(jobs),
        "n_covered": covered,
        "coverage": covered / len(jobs) if jobs else 0.0,
        "n_points": len(points),
        "max_residual": max((p.F_residual for p in points), default=0.0),
        "graph_max_jump": max(jumps) if jumps else math.nan,
    }
    return points, summary, errors


def smallxi_scaling(profile, x2, xi2, xi1_sequence=None, nodes_per_decade=64):
    """Least-squares exponent of |F| against xi1 on a decreasing sequence.

    The drift diverges like 1/xi1 as xi1 -> 0, so the expected slope is
    -1: trapping needs data oscillating fast enough in x1. FitFailure is
    raised if F changes sign inside the sampled range (log|F| would then
    straddle a root). The report also records whether F keeps its sign
    all the way down to the admissibility margin, i.e. no root hides
    below the smallest sampled xi1.
    """
    if xi1_sequence is None:
        xi1_sequence = (0.4, 0.2, 0.1, 0.05)
    xs = np.asarray(sorted(xi1_sequence, reverse=True), dtype=float)
    if xs.size < 2 or xs[-1] < DELTA_XI1:
        raise ValueError("need >= 2 xi1 values, all above the margin")
    Fs = np.array([signed_drift_F_space(profile, float(v), x2, xi2)
                   for v in xs])
    if np.any(Fs == 0.0) or np.any(np.sign(Fs[:-1]) != np.sign(Fs[1:])):
        raise FitFailure("F changes sign inside the fitted xi1 range")
    slope, intercept = np.polyfit(np.log(xs), np.log(np.abs(Fs)), 1)

    below = _log_grid(DELTA_XI1 * 10, float(xs[-1]), nodes_per_decade)
    Fb = _scan_F(profile, x2, xi2, below)
    fb = Fb[np.isfinite(Fb)]
    root_free = bool(fb.size and np.all(np.sign(fb) == np.sign(Fs[-1])))

    return ScalingReport(
        slope=float(slope), intercept=float(intercept),
        xi1_values=tuple(float(v) for v in xs),
        F_values=tuple(float(v) for v in Fs),
        lower_bound_F_xi1=float(np.min(np.abs(Fs) * xs)),
        root_free_below=root_free)


def _area_at(profile, xi1, E):
    """Fixed-E loop area with the hint at the deepest point of the well."""
    xs = np.linspace(0.0, 2.0 * math.pi, 721)
    b, bp, _ = profile.eval(xs)
    g = bp * xi1 / E - xi1 * xi1 - b * b
    hint = float(xs[int(np.argmax(g))])
    return orbit_area(profile, xi1, E, hint)


def _F_on_shell(profile, xi1, E):
    """Signed F on the (xi1, E) orbit, evaluated at the well's deepest point."""
    xs = np.linspace(0.0, 2.0 * math.pi, 721)
    b, bp, _ = profile.eval(xs)
    g = bp * xi1 / E - xi1 * xi1 - b * b
    k = int(np.argmax(g))
    return signed_drift_F_space(profile, xi1, float(xs[k]),
                                math.sqrt(max(g[k], 0.0)))


def extremal_area_check(profile, lp, rel_step=0.01):
    """Check that a Lambda root is a critical point of the fixed-E area.

    At fixed E = E(root), the loop area a(xi1) satisfies da/dxi1 =
    sign(E) F, so the derivative must vanish and change sign across the
    root bracket. The report carries the centered derivative at the root
    and at the bracket ends, the second derivative (its sign says min or
    max; neither is asserted), and the ratio of da/dxi1 to sign(E) F at
    an off-root node, which should be 1.
    """
    r = lp.xi1_root
    E = rossby_symbol_E(profile, PhasePoint(0.0, lp.x2, r, lp.xi2))
    h = abs(r) * rel_step

    def aprime(x):
        return (_area_at(profile, x + h, E) - _area_at(profile, x - h, E)) / (2 * h)

    lo, hi = lp.bracket
    # keep the side evaluations at least 2h from the root so the centered
    # difference is not dominated by truncation error when brentq lands on
    # a bracket end
    lo = min(lo, r - 2.0 * h)
    hi = max(hi, r + 2.0 * h)
    ap_root = aprime(r)
    ap_left = aprime(lo)
    ap_right = aprime(hi)
    a_second = (_area_at(profile, r + h, E) - 2.0 * _area_at(profile, r, E)
                + _area_at(profile, r - h, E)) / (h * h)

    off = hi + 4.0 * h
    ratio = aprime(off) / (math.copysign(1.0, E) * _F_on_shell(profile, off, E))

    return ExtremalAreaReport(
        xi1_root=r, energy_E=E, a_prime_root=ap_root,
        a_prime_left=ap_left, a_prime_right=ap_right,
        sign_change=bool(ap_left * ap_right < 0.0),
        a_second=a_second, slope_over_F=float(ratio))
