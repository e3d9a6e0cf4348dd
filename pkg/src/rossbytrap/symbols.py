"""Pointwise principal symbols: dispersion roots, mode matrix, projectors.

The dispersion relation of the linearized system at frozen coefficients is
the real cubic

    tau^3 - (xi1^2 + xi2^2 + b^2) tau + eps b' xi1 = 0,

whose three roots split into two fast branches tau_{+-} (gravity waves) and
one slow branch tau_0 of size O(eps) (the planetary branch). The columns of
the mode matrix are the corresponding polarization vectors; its inverse rows
are the projector symbols.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateRoots, Inadmissible

DELTA_XI1 = 1e-3
DELTA_B = 1e-3


@dataclass(frozen=True)
class PhasePoint:
    """A point (x1, x2, xi1, xi2) of phase space over the channel R x T."""

    x1: float
    x2: float
    xi1: float
    xi2: float

    def as_tuple(self):
        return (self.x1, self.x2, self.xi1, self.xi2)


def admissible(profile, pt, delta_xi1=DELTA_XI1, delta_b=DELTA_B):
    """Check |xi1| >= delta_xi1 and xi2^2 + b^2 >= delta_b.

    Points failing either margin sit where the mode matrix degenerates and
    the slow/fast splitting breaks down; they are representable but flagged.
    """
    if abs(pt.xi1) < delta_xi1:
        return False
    b = profile.eval_scalar(pt.x2)[0]
    return pt.xi2 * pt.xi2 + b * b >= delta_b


def require_admissible(profile, pt, delta_xi1=DELTA_XI1, delta_b=DELTA_B):
    if not admissible(profile, pt, delta_xi1, delta_b):
        raise Inadmissible(f"inadmissible phase point {pt}")


@dataclass(frozen=True)
class DispersionRoots:
    """Three real roots of the dispersion cubic with their residuals."""

    tau_minus: float
    tau_zero: float
    tau_plus: float
    epsilon: float
    residuals: tuple

    def as_tuple(self):
        return (self.tau_minus, self.tau_zero, self.tau_plus)


def _cubic_roots_arrays(D, c):
    """Roots of tau^3 - D tau + c = 0 with D > 0, elementwise.

    Trigonometric solution polished by one Newton step per root. Returns
    (t_minus, t_zero, t_plus) sorted ascending; the middle root is always
    the one of smallest modulus since the three roots sum to zero.
    """
    D = np.asarray(D, dtype=float)
    c = np.asarray(c, dtype=float)
    disc = 4.0 * D ** 3 - 27.0 * c ** 2
    if np.any(disc <= 0.0):
        raise DegenerateRoots("dispersion cubic discriminant <= 0")
    r = np.sqrt(D / 3.0)
    arg = np.clip(-1.5 * np.sqrt(3.0) * c / D ** 1.5, -1.0, 1.0)
    phi = np.arccos(arg) / 3.0
    shifts = np.array([0.0, 2.0 * np.pi / 3.0, 4.0 * np.pi / 3.0])
    taus = 2.0 * r[..., None] * np.cos(phi[..., None] - shifts)
    # Newton polish knocks the trig roundoff down to ~1e-16 relative
    for _ in range(2):
        f = taus ** 3 - D[..., None] * taus + c[..., None]
        fp = 3.0 * taus ** 2 - D[..., None]
        taus = taus - f / fp
    taus = np.sort(taus, axis=-1)
    exact = c == 0.0
    if np.any(exact):
        s = np.sqrt(D)
        taus[exact, 0] = -s[exact]
        taus[exact, 1] = 0.0
        taus[exact, 2] = s[exact]
    return taus[..., 0], taus[..., 1], taus[..., 2]


def dispersion_roots(profile, pt, epsilon):
    """Solve the dispersion cubic at a phase point.

    Returns a DispersionRoots with tau_minus < tau_zero < tau_plus. At
    epsilon = 0 (or wherever b' xi1 = 0) the exact factored roots
    (-sqrt(D), 0, sqrt(D)) are returned directly.
    """
    require_admissible(profile, pt)
    b, bp, _ = profile.eval_scalar(pt.x2)
    D = pt.xi1 ** 2 + pt.xi2 ** 2 + b * b
    c = epsilon * bp * pt.xi1
    # roundoff-level constants (e.g. b' at a numerically represented critical
    # point) are treated as exact zeros so the factored roots apply
    if abs(c) <= 1e-15 * D ** 1.5:
        s = math.sqrt(D)
        return DispersionRoots(-s, 0.0, s, epsilon, (0.0, 0.0, 0.0))
    tm, t0, tp = _cubic_roots_arrays(D, c)
    tm, t0, tp = float(tm), float(t0), float(tp)
    res = tuple(abs(t ** 3 - D * t + c) for t in (tm, t0, tp))
    return DispersionRoots(tm, t0, tp, epsilon, res)


def rossby_symbol_E(profile, pt):
    """Slow-branch drift Hamiltonian E = b'(x2) xi1 / (xi1^2 + xi2^2 + b^2)."""
    require_admissible(profile, pt)
    b, bp, _ = profile.eval_scalar(pt.x2)
    return bp * pt.xi1 / (pt.xi1 ** 2 + pt.xi2 ** 2 + b * b)


def mode_columns(b, xi1, xi2, tau):
    """Polarization column for branch frequency tau, elementwise.

    Entries are (rho, u1, u2) with u2 normalized to 1:
        rho = (-xi2 tau + i xi1 b) / (tau^2 - xi1^2)
        u1  = ( xi1 xi2 - i b tau) / (tau^2 - xi1^2)
        u2  = 1
    The denominator tau^2 - xi1^2 equals xi2^2 + b^2 on the fast branches
    at leading order and -xi1^2 on the slow branch, both admissible-safe.
    """
    den = tau * tau - xi1 * xi1
    rho = (-xi2 * tau + 1j * xi1 * b) / den
    u1 = (xi1 * xi2 - 1j * b * tau) / den
    u2 = np.ones_like(rho)
    return rho, u1, u2


@dataclass(frozen=True)
class ModeMatrix:
    """Leading-order polarization matrix q, its inverse p, and |det q|."""

    q: np.ndarray
    p: np.ndarray
    jacobian: float


def mode_matrix(profile, pt):
    """Assemble the 3x3 polarization matrix at leading order.

    Columns are the slow/fast polarization vectors at tau = (-sqrt(D), 0,
    +sqrt(D)) in the order (minus, zero, plus); rows of p = q^{-1} are the
    projector symbols. The middle row of p is the slow-branch projector
        (i b xi1 / D, -xi1 xi2 / D, xi1^2 / D).
    """
    require_admissible(profile, pt)
    b, _, _ = profile.eval_scalar(pt.x2)
    xi1, xi2 = pt.xi1, pt.xi2
    D = xi1 * xi1 + xi2 * xi2 + b * b
    s = math.sqrt(D)
    q = np.empty((3, 3), dtype=complex)
    for j, tau in enumerate((-s, 0.0, s)):
        rho, u1, u2 = mode_columns(b, xi1, xi2, tau)
        q[:, j] = (rho, u1, u2)
    p = np.linalg.inv(q)
    jac = abs(np.linalg.det(q))
    return ModeMatrix(q=q, p=p, jacobian=jac)


def jacobian_closed_form(profile, pt):
    """Reference |det q| = 2 D^{3/2} / ((xi2^2 + b^2) |xi1|)."""
    b, _, _ = profile.eval_scalar(pt.x2)
    D = pt.xi1 ** 2 + pt.xi2 ** 2 + b * b
    return 2.0 * D ** 1.5 / ((pt.xi2 ** 2 + b * b) * abs(pt.xi1))
