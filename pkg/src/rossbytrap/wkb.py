"""Oscillatory (WKB) initial data and their phase-space fingerprints.

A datum has the form (R0, U10, U20)(x) e^{i S(x)/epsilon}. Its energy
rides on the Lagrangian graph (x, grad S(x)) over the amplitude support,
split across the three wave branches by the polarization of the
amplitude vector. The builders here produce the two data used in the
dichotomy study: a slow-branch packet anchored on a root of the drift
functional, and a fast-branch datum whose slow weight vanishes
identically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import Inadmissible, ResolutionError
from .fields import StateField, spectral_tail_fraction
from .symbols import DELTA_B, DELTA_XI1, _cubic_roots_arrays

TAIL_TOL = 1e-8


@dataclass(frozen=True)
class WkbSpec:
    """Callable phase/amplitude bundle; all callables broadcast on grids."""

    phase: callable
    d1_phase: callable
    d2_phase: callable
    amp_rho: callable
    amp_u1: callable
    amp_u2: callable
    label: str = ""


@dataclass
class LagrangianCloud:
    """Support nodes of a WKB datum lifted to phase space.

    rossby_weight is the slow-branch row of the principal mode inverse
    applied to the amplitude vector; where it vanishes the datum carries
    no slow-branch content to leading order. slow_l2_weight is the L2
    mass of the reconstructed slow component w * q_slow per node (the
    slow column has squared norm D / xi1^2), so the mass fraction reads
    exactly 1 on a purely slow-polarized datum.
    """

    x1: np.ndarray
    x2: np.ndarray
    xi1: np.ndarray
    xi2: np.ndarray
    l2_weight: np.ndarray       # |amplitude|^2 * cell, sums to ~ norm^2
    rossby_weight: np.ndarray   # complex
    slow_l2_weight: np.ndarray

    def rossby_mass_fraction(self):
        tot = float(np.sum(self.l2_weight))
        if tot == 0.0:
            return 0.0
        return float(np.sum(self.slow_l2_weight) / tot)


def rossby_row_apply(b, xi1, xi2, amps):
    """Slow-branch row of the principal mode inverse applied to a vector.

    Closed form (i b xi1, -xi1 xi2, xi1^2) / D with D = xi1^2+xi2^2+b^2;
    cross-checked elsewhere against the full matrix inverse.
    """
    D = xi1 * xi1 + xi2 * xi2 + b * b
    return (1j * b * xi1 * amps[0] - xi1 * xi2 * amps[1]
            + xi1 * xi1 * amps[2]) / D


def wkb_initial(profile, spec, grid, normalize=None, check_margins=True):
    """Sample a WKB datum on the grid and lift its support to phase space.

    Returns (StateField, LagrangianCloud). Amplitudes must vanish
    wherever the induced frequencies violate the admissibility margins
    (slow-branch degeneracies); Inadmissible otherwise. ResolutionError
    if the sampled field is not spectrally resolved on this grid.
    """
    X1 = grid.x1[:, None]
    X2 = grid.x2[None, :]
    S = np.broadcast_to(spec.phase(X1, X2), (grid.N1, grid.N2))
    xi1 = np.broadcast_to(spec.d1_phase(X1, X2), S.shape)
    xi2 = np.broadcast_to(spec.d2_phase(X1, X2), S.shape)
    amps = np.stack([
        np.broadcast_to(np.asarray(f(X1, X2), dtype=complex), S.shape)
        for f in (spec.amp_rho, spec.amp_u1, spec.amp_u2)])

    support = np.max(np.abs(amps), axis=0) > 0.0
    b = profile.eval(grid.x2)[0][None, :]
    if check_margins and support.any():
        bad_xi1 = np.abs(xi1) < DELTA_XI1
        bad_d = xi2 * xi2 + np.broadcast_to(b, S.shape) ** 2 < DELTA_B
        if np.any(support & (bad_xi1 | bad_d)):
            raise Inadmissible(
                "amplitudes do not vanish inside the admissibility margins "
                "of the slow-branch degeneracy sets")

    phase_factor = np.exp(1j * S / grid.epsilon)
    values = amps * phase_factor[None, :, :]
    field = StateField(grid, values, time=0.0)
    if normalize is not None:
        nrm = field.norm()
        if nrm == 0.0:
            raise Inadmissible("cannot normalize a zero datum")
        field.values *= normalize / nrm
        amps = amps * (normalize / nrm)

    tail = spectral_tail_fraction(field)
    if tail > TAIL_TOL:
        raise ResolutionError(
            f"WKB datum spectral tail {tail:.2e} exceeds {TAIL_TOL:.0e}")

    idx = np.nonzero(support)
    b_n, xi1_n, xi2_n = (np.broadcast_to(b, S.shape)[idx], xi1[idx], xi2[idx])
    w = rossby_row_apply(b_n, xi1_n, xi2_n, amps[:, idx[0], idx[1]])
    D_n = xi1_n ** 2 + xi2_n ** 2 + b_n ** 2
    cloud = LagrangianCloud(
        x1=grid.x1[idx[0]], x2=grid.x2[idx[1]],
        xi1=xi1_n, xi2=xi2_n,
        l2_weight=np.sum(np.abs(amps[:, idx[0], idx[1]]) ** 2, axis=0)
        * grid.cell,
        rossby_weight=w,
        slow_l2_weight=np.abs(w) ** 2 * D_n / xi1_n ** 2 * grid.cell)
    return field, cloud


def _slow_column(profile, grid, xi1, xi2, x2):
    """Exact slow-branch polarization column at fixed (xi1, xi2) over x2."""
    b, bp, _ = profile.eval(x2)
    D = xi1 * xi1 + xi2 * xi2 + b * b
    c = grid.epsilon * bp * xi1
    _, tau0, _ = _cubic_roots_arrays(np.asarray(D, dtype=float),
                                     np.asarray(c, dtype=float))
    den = tau0 * tau0 - xi1 * xi1
    return ((-xi2 * tau0 + 1j * xi1 * b) / den,
            (xi1 * xi2 - 1j * b * tau0) / den,
            np.ones_like(D))


def _fast_column(profile, grid, xi1, xi2, x2):
    """Principal fast-branch polarization column, pointwise arrays.

    The column at root tau is the generator eigenvector at frequency
    -tau/epsilon, so tau = -sqrt(D) picks the branch whose group
    velocity is +xi1/sqrt(D): outward transport when the local
    frequency has the sign of x1.
    """
    b = profile.eval(x2)[0]
    D = xi1 * xi1 + xi2 * xi2 + b * b
    tau = -np.sqrt(D)
    den = tau * tau - xi1 * xi1  # = xi2^2 + b^2 > 0 even at xi1 = 0
    return ((-xi2 * tau + 1j * xi1 * b) / den,
            (xi1 * xi2 - 1j * b * tau) / den,
            np.ones_like(D))


def _periodic_gauss(x, center, sigma):
    d = x - center
    d = d - 2.0 * math.pi * np.round(d / (2.0 * math.pi))
    return np.exp(-0.5 * (d / sigma) ** 2)


def _smoothstep(u):
    """C3 ramp: exactly 0 for u <= 0 and 1 for u >= 1.

    Order-7 polynomial step; the four matched derivatives at each end
    push the Fourier ringing of tapered amplitudes below the spectral
    tail tolerance on resolved grids.
    """
    v = np.clip(u, 0.0, 1.0)
    return v ** 4 * (35.0 - 84.0 * v + 70.0 * v ** 2 - 20.0 * v ** 3)


def build_trapped_wkb(profile, grid, lambda_point, sigma1=0.6, sigma2=0.5,
                      x1_center=0.0):
    """Slow-branch packet riding a root of the drift functional.

    Linear phase with frequencies snapped to the grid's Fourier lattice
    (the x2 frequency must be an integer multiple of epsilon to stay
    periodic), Gaussian envelope, and the exact slow polarization column
    at the snapped frequencies. Where such a packet meets the trapped
    set, its longitude drift cancels and the local mass persists.
    """
    eps = grid.epsilon
    dk1 = 2.0 * math.pi * eps / grid.L1
    xi1_bar = dk1 * round(lambda_point.xi1_root / dk1)
    xi2_bar = eps * round(lambda_point.xi2 / eps)
    x2_bar = lambda_point.x2

    def phase(X1, X2):
        return xi1_bar * X1 + xi2_bar * X2

    def d1(X1, X2):
        return np.broadcast_to(xi1_bar, np.broadcast_shapes(X1.shape, X2.shape))

    def d2(X1, X2):
        return np.broadcast_to(xi2_bar, np.broadcast_shapes(X1.shape, X2.shape))

    def envelope(X1, X2):
        return (np.exp(-0.5 * ((X1 - x1_center) / sigma1) ** 2)
                * _periodic_gauss(X2, x2_bar, sigma2))

    def amp(component):
        def f(X1, X2):
            x2_line = np.atleast_1d(np.squeeze(np.asarray(X2)))
            col = _slow_column(profile, grid, xi1_bar, xi2_bar, x2_line)
            return envelope(X1, X2) * col[component][None, :]
        return f

    return WkbSpec(phase=phase, d1_phase=d1, d2_phase=d2,
                   amp_rho=amp(0), amp_u1=amp(1), amp_u2=amp(2),
                   label=f"trapped(xi1={xi1_bar:.6g},xi2={xi2_bar:.6g},"
                         f"x2={x2_bar:.6g})")


def build_untrapped_wkb(profile, grid, c1=0.2, sigma1=2.0, mu=0.4,
                        sigma2=0.9, x2_center=3.0, xi1_cap=1.3):
    """Fast-branch datum with identically vanishing slow weight.

    Quadratic longitude phase spreads the support over a band of
    longitudinal frequencies c1*x1; the amplitude vanishes quartically
    at x1 = 0, is tapered to exact zero inside the admissibility margin
    and above xi1_cap, and carries the principal fast polarization, so
    the slow row annihilates it pointwise. Every ray under the fast
    branches leaves a fixed longitude band except the O(epsilon) slab of
    near-zero group velocity; the quartic vanishing makes that slab's
    mass decay at a high finite order, steep enough to measure but never
    hitting the roundoff floor.
    """

    def phase(X1, X2):
        return 0.5 * c1 * X1 ** 2 - mu * np.cos(X2 - x2_center)

    def d1(X1, X2):
        return np.broadcast_to(c1 * X1, np.broadcast_shapes(X1.shape, X2.shape))

    def d2(X1, X2):
        return np.broadcast_to(mu * np.sin(X2 - x2_center),
                               np.broadcast_shapes(X1.shape, X2.shape))

    def envelope(X1, X2):
        xi1 = np.abs(c1 * X1)
        lo = _smoothstep((xi1 - DELTA_XI1) / (3.0 * DELTA_XI1))
        hi = 1.0 - _smoothstep((xi1 - (xi1_cap - 0.4)) / 0.4)
        radial = (X1 / sigma1) ** 4 * np.exp(-0.5 * (X1 / sigma1) ** 2)
        return radial * lo * hi * _periodic_gauss(X2, x2_center, sigma2)

    def amp(component):
        def f(X1, X2):
            shape = np.broadcast_shapes(X1.shape, X2.shape)
            xi1 = np.broadcast_to(c1 * X1, shape)
            xi2 = np.broadcast_to(mu * np.sin(X2 - x2_center), shape)
            x2 = np.broadcast_to(X2, shape)
            col = _fast_column(profile, grid, xi1, xi2, x2)
            return np.broadcast_to(envelope(X1, X2), shape) * col[component]
        return f

    return WkbSpec(phase=phase, d1_phase=d1, d2_phase=d2,
                   amp_rho=amp(0), amp_u1=amp(1), amp_u2=amp(2),
                   label=f"untrapped(c1={c1},cap={xi1_cap})")
