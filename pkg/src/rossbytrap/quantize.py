"""Quantized mode projectors, reconstructions, and latitude spectra.

Per zonal wavenumber the evolution reduces to operators on the latitude
circle, and a symbol a(x2, xi2) acts through its mixed representation

    (Op[a] u)(x2) = sum_n a(x2, eps n) u_hat(n) e^{i n x2},

a left quantization that is exact on Fourier multipliers and on
multiplication operators. Applying the rows of the inverse polarization
matrix splits a three-component state into two gravity parts and one
planetary part, each carried by a single scalar profile; applying the
columns rebuilds the state, with a round-trip remainder of one power of
epsilon. The same lattice carries the latitude operator
H2 = (-i eps d/dx2)^2 + b^2, whose low-lying eigenvalues obey the action
quantization rule inside a well of the potential b^2 and feed the
residual identity for the gravity-branch eigenvalue problem.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import ConfigError, Inadmissible, ResolutionError, WindowError
from .fields import Grid2D, StateField
from .pde import spectral_derivative_matrix
from .symbols import DELTA_B, DELTA_XI1, _cubic_roots_arrays, mode_columns

TAIL_TOL = 1e-8
MICROLOCAL_TOL = 1e-3
DISCARD_MASS_FRACTION = 1e-26

_BRANCHES = ("minus", "zero", "plus")
_BRANCH_ALIAS = {"minus": "minus", "zero": "zero", "plus": "plus",
                 "-": "minus", "0": "zero", "+": "plus"}

_PHASES = {}


def _phase_matrix(n):
    """Cached synthesis phases E[j, m] = e^{i m x_j} on the circle."""
    E = _PHASES.get(n)
    if E is None:
        x = 2.0 * np.pi * np.arange(n) / n
        modes = np.fft.fftfreq(n, d=1.0 / n).astype(int)
        E = np.exp(1j * np.outer(x, modes))
        _PHASES[n] = E
    return E


def _dual_modes(n):
    """Integer dual lattice with the unpaired Nyquist mode sent to zero.

    Matches the convention of the spectral derivative, so quantizing the
    symbol xi2 reproduces that matrix exactly.
    """
    modes = np.fft.fftfreq(n, d=1.0 / n).astype(float)
    if n % 2 == 0:
        modes[n // 2] = 0.0
    return modes


def _mixed_matrix(a, n):
    """Dense operator for the mixed-representation weights a[j, m]."""
    E = _phase_matrix(n)
    return (a * E) @ E.conj().T / n


@dataclass(frozen=True, eq=False)
class QuantizedSymbol:
    """One symbol frozen into a dense operator on the latitude grid."""

    k1: int
    matrix: np.ndarray
    symbol_id: str
    epsilon: float

    def apply(self, u):
        return self.matrix @ np.asarray(u, dtype=complex)


def quantize_symbol(symbol, k1, grid, epsilon=None, symbol_id="custom"):
    """Quantize a symbol (x2, xi2, xi1) -> complex at one zonal wavenumber.

    The symbol is sampled on the (x2, eps n) lattice and applied in the
    mixed representation: Fourier-analyze, weight, resynthesize. On a pure
    Fourier mode e^{i n x2} the result is symbol(x2, eps n) e^{i n x2}
    exactly, so multipliers and multiplication operators come out exact.
    Symbols whose x2-variation reaches the last eighth of the spectrum are
    rejected as unresolved.
    """
    eps = grid.epsilon if epsilon is None else float(epsilon)
    if abs(eps - grid.epsilon) > 1e-12 * grid.epsilon:
        raise ConfigError(f"epsilon {eps} does not match grid epsilon "
                          f"{grid.epsilon}")
    xi1 = eps * float(grid.kappa(int(k1)))
    x2 = grid.x2[:, None]
    xi2 = eps * _dual_modes(grid.N2)[None, :]
    a = np.asarray(symbol(x2, xi2, xi1), dtype=complex)
    a = np.broadcast_to(a, (grid.N2, grid.N2))
    ahat = np.fft.fft(a, axis=0)
    power = np.abs(ahat) ** 2
    total = float(power.sum())
    if total > 0.0:
        cut = (7.0 / 8.0) * (grid.N2 / 2.0)
        tail = float(power[np.abs(np.fft.fftfreq(grid.N2, d=1.0 / grid.N2)) > cut, :].sum())
        if tail > TAIL_TOL * total:
            raise ResolutionError(
                f"symbol varies below grid scale (tail share {tail / total:.2e})")
    return QuantizedSymbol(k1=int(k1), matrix=_mixed_matrix(a, grid.N2),
                           symbol_id=str(symbol_id), epsilon=eps)


@dataclass
class ScalarModeField:
    """Scalar carrier u2 of one branch, sampled on the full grid."""

    grid: Grid2D
    values: np.ndarray  # complex, shape (N1, N2)
    branch: str
    time: float = 0.0

    def __post_init__(self):
        want = (self.grid.N1, self.grid.N2)
        if self.values.shape != want:
            raise ConfigError(f"values shape {self.values.shape} != {want}")
        if self.branch not in _BRANCHES:
            raise ConfigError(f"unknown branch {self.branch!r}")
        self.values = np.ascontiguousarray(self.values, dtype=complex)

    def norm(self):
        return math.sqrt(float(np.sum(np.abs(self.values) ** 2)) * self.grid.cell)

    def copy(self):
        return ScalarModeField(self.grid, self.values.copy(), self.branch,
                               self.time)


def _active_columns(power, discard=DISCARD_MASS_FRACTION):
    """Indices keeping all but a `discard` share of the spectral mass."""
    total = float(power.sum())
    if total == 0.0:
        return np.empty(0, dtype=int)
    order = np.argsort(power)
    cum = np.cumsum(power[order])
    cut = int(np.searchsorted(cum, discard * total, side="right"))
    return np.sort(order[cut:])


def _require_microlocalized(profile, grid, pk1, pn):
    """Bound the spectral mass sitting over the degenerate margins.

    The stated validation is a phase-space mass outside the admissible
    region; the Gaussian windows of width sqrt(eps) cannot resolve the
    margin widths, so the sharp Fourier mass is used instead, which only
    overcounts.
    """
    total = float(pk1.sum())
    if total == 0.0:
        return
    xi1 = grid.epsilon * grid.kappa(grid.k1)
    bad = float(pk1[np.abs(xi1) < DELTA_XI1].sum())
    b = profile.eval(grid.x2)[0]
    gap_floor = float(np.min(b * b))
    xi2 = grid.epsilon * _dual_modes(grid.N2)
    bad += float(pn[xi2 * xi2 + gap_floor < DELTA_B].sum())
    if bad > MICROLOCAL_TOL * total:
        raise Inadmissible(
            f"mass share {bad / total:.2e} over the degenerate margins "
            f"exceeds {MICROLOCAL_TOL}")


def _lattice_symbols(profile, grid, xi1):
    """Common lattice samples used by the row and column builders."""
    b, bp, _ = profile.eval(grid.x2)
    b = b[:, None]
    bp = bp[:, None]
    xi2 = grid.epsilon * _dual_modes(grid.N2)[None, :]
    gap = xi2 * xi2 + b * b
    D = xi1 * xi1 + gap
    return b, bp, xi2, gap, D


def _projector_rows(profile, grid, xi1):
    """Rows of the inverse polarization matrix, shape (N2, N2, 3, 3).

    Lattice points inside the degeneracy margin get a zero row; callers
    have already checked that such points carry negligible mass.
    """
    b, _, xi2, gap, D = _lattice_symbols(profile, grid, xi1)
    s = np.sqrt(D)
    q = np.empty((grid.N2, grid.N2, 3, 3), dtype=complex)
    for j, tau in enumerate((-s, 0.0, s)):
        rho, u1, u2 = mode_columns(b, xi1, xi2, tau)
        q[..., 0, j] = np.broadcast_to(rho, D.shape)
        q[..., 1, j] = np.broadcast_to(u1, D.shape)
        q[..., 2, j] = np.broadcast_to(u2, D.shape)
    mask = gap < DELTA_B
    if mask.any():
        q[mask] = np.eye(3)
    p = np.linalg.inv(q)
    if mask.any():
        p[mask] = 0.0
    return p


def _polarization_column(profile, grid, xi1, branch):
    """One polarization column on the lattice, shape (N2, N2, 3).

    The gravity branches use their principal frequencies -+sqrt(D); the
    planetary branch uses the middle root of the dispersion cubic, which
    carries the order-epsilon drift correction on top of the vanishing
    principal level.
    """
    b, bp, xi2, gap, D = _lattice_symbols(profile, grid, xi1)
    mask = gap < DELTA_B
    if branch == "minus":
        tau = -np.sqrt(D)
    elif branch == "plus":
        tau = np.sqrt(D)
    else:
        c = np.broadcast_to(grid.epsilon * bp * xi1, D.shape)
        Dw = np.where(mask, 1.0, D)
        cw = np.where(mask, 0.0, c)
        bad = 4.0 * Dw ** 3 - 27.0 * cw * cw <= 0.0
        if bad.any():
            mask = mask | bad
            Dw = np.where(bad, 1.0, Dw)
            cw = np.where(bad, 0.0, cw)
        _, tau, _ = _cubic_roots_arrays(Dw, cw)
    rho, u1, u2 = mode_columns(b, xi1, xi2, tau)
    col = np.empty((grid.N2, grid.N2, 3), dtype=complex)
    col[..., 0] = np.broadcast_to(rho, D.shape)
    col[..., 1] = np.broadcast_to(u1, D.shape)
    col[..., 2] = np.broadcast_to(u2, D.shape)
    if mask.any():
        col[mask] = 0.0
    return col


def _run_tasks(work, items, workers):
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(work, items))
    else:
        for item in items:
            work(item)


def project_modes(profile, U, workers=1):
    """Split a state into its three scalar branch carriers.

    Returns (minus, zero, plus) as ScalarModeField. Per zonal mode the
    quantized projector rows act on the three components and are summed;
    columns with |xi1| inside the margin are left at zero, which the
    microlocalization check has bounded to a negligible mass share.
    """
    grid = U.grid
    hat = np.fft.fft2(U.values, axes=(1, 2))
    power = np.abs(hat) ** 2
    pk1 = power.sum(axis=(0, 2))
    pn = power.sum(axis=(0, 1))
    _require_microlocalized(profile, grid, pk1, pn)
    xi1_all = grid.epsilon * grid.kappa(grid.k1)
    active = [int(i) for i in _active_columns(pk1)
              if abs(float(xi1_all[i])) >= DELTA_XI1]
    cols = np.zeros((3, grid.N1, grid.N2), dtype=complex)
    E = _phase_matrix(grid.N2)

    def work(idx):
        p = _projector_rows(profile, grid, float(xi1_all[idx]))
        ghat = hat[:, idx, :] / grid.N2
        for j in range(3):
            cols[j, idx, :] = np.einsum("xnc,cn,xn->x", p[:, :, j, :], ghat, E)

    _run_tasks(work, active, workers)
    out = []
    for j, name in enumerate(_BRANCHES):
        vals = np.fft.ifft(cols[j], axis=0)
        out.append(ScalarModeField(grid, vals, branch=name, time=U.time))
    return tuple(out)


def reconstruct_mode(profile, u2j, j=None, workers=1):
    """Rebuild a three-component state from one scalar branch carrier.

    j defaults to the carrier's own branch label; "-", "0", "+" are
    accepted as shorthand. Summing the three reconstructions of
    project_modes output returns the original state up to O(epsilon).
    """
    grid = u2j.grid
    branch = _BRANCH_ALIAS.get(u2j.branch if j is None else str(j))
    if branch is None:
        raise ConfigError(f"unknown branch {j!r}")
    G = np.fft.fft(u2j.values, axis=0)
    ghat2 = np.fft.fft(G, axis=1)
    pk1 = (np.abs(G) ** 2).sum(axis=1)
    pn = (np.abs(ghat2) ** 2).sum(axis=0)
    _require_microlocalized(profile, grid, pk1, pn)
    xi1_all = grid.epsilon * grid.kappa(grid.k1)
    active = [int(i) for i in _active_columns(pk1)
              if abs(float(xi1_all[i])) >= DELTA_XI1]
    cols = np.zeros((3, grid.N1, grid.N2), dtype=complex)
    E = _phase_matrix(grid.N2)

    def work(idx):
        col = _polarization_column(profile, grid, float(xi1_all[idx]), branch)
        ghat = ghat2[idx, :] / grid.N2
        for c in range(3):
            cols[c, idx, :] = np.einsum("xn,n,xn->x", col[:, :, c], ghat, E)

    _run_tasks(work, active, workers)
    values = np.fft.ifft(cols, axis=1)
    return StateField(grid, values, time=u2j.time)


def _h2_matrix(profile, epsilon, n_grid):
    """Dense latitude operator (-i eps d/dx2)^2 + b^2, real symmetric."""
    x = 2.0 * np.pi * np.arange(n_grid) / n_grid
    d1 = spectral_derivative_matrix(n_grid)
    b = profile.eval(x)[0]
    h = -(epsilon * epsilon) * (d1 @ d1) + np.diag(b * b)
    return 0.5 * (h + h.T)


def _default_latitude_points(epsilon):
    need = max(256.0, 16.0 / epsilon)
    return 1 << math.ceil(math.log2(need))


def _well_geometry(profile):
    """Bottom and barrier of the potential b^2 on the circle.

    Coarse scan plus bounded polish; assumes a single librating well,
    which holds for the built-in profiles with nonvanishing b.
    """
    xs = np.linspace(0.0, 2.0 * np.pi, 4096, endpoint=False)
    b2 = profile.eval(xs)[0] ** 2
    dx = xs[1] - xs[0]

    def value(t):
        return profile.eval_scalar(t)[0] ** 2

    i0 = int(np.argmin(b2))
    lo = minimize_scalar(value, bounds=(xs[i0] - dx, xs[i0] + dx),
                         method="bounded", options={"xatol": 1e-12})
    i1 = int(np.argmax(b2))
    hi = minimize_scalar(lambda t: -value(t), bounds=(xs[i1] - dx, xs[i1] + dx),
                         method="bounded", options={"xatol": 1e-12})
    return float(lo.x), float(lo.fun), float(hi.x), float(-hi.fun)


def _well_action(profile, lam, x_top, x_bot):
    """Loop action (1/2pi) contour integral of xi2 dx2 at energy lam.

    Reduces to (1/pi) times the integral of sqrt(lam - b^2) across the
    well. Chebyshev nodes absorb the square-root turning points.
    """
    base = x_bot if x_bot > x_top else x_bot + 2.0 * np.pi

    def f(t):
        return profile.eval_scalar(t)[0] ** 2 - lam

    xl = brentq(f, x_top, base, xtol=1e-14)
    xr = brentq(f, base, x_top + 2.0 * np.pi, xtol=1e-14)
    m = 400
    theta = np.pi * np.arange(1, m + 1) / (m + 1.0)
    u = np.cos(theta)
    w = (np.pi / (m + 1.0)) * np.sin(theta) ** 2
    x = 0.5 * (xl + xr) + 0.5 * (xr - xl) * u
    val = np.clip(lam - profile.eval(x)[0] ** 2, 0.0, None)
    g = val / (1.0 - u * u)
    return 0.5 * (xr - xl) * float(np.sum(w * np.sqrt(g))) / np.pi


@dataclass(frozen=True)
class SpectrumTable:
    """Direct and action-rule eigenvalues of the latitude operator."""

    branch: str
    xi1: float
    eigenvalues: tuple  # of (k, lambda_direct, lambda_bs)
    epsilon: float

    def rows(self):
        """CSV-ready rows (k, lambda_direct, lambda_bs, diff)."""
        return [(k, ld, lb, ld - lb) for (k, ld, lb) in self.eigenvalues]


def bohr_sommerfeld_levels(profile, xi1, epsilon, k_range=range(8),
                           branch="plus", n_grid=None):
    """Compare low-lying latitude eigenvalues with the action rule.

    lambda_bs solves action(lambda) = (k + 1/2) eps inside the well of
    b^2; lambda_direct is the k-th eigenvalue of the discretized latitude
    operator, matched by ascending order. Levels pushed above the barrier
    raise WindowError. The branch label records which gravity family the
    table feeds; at this order both share the same latitude operator.
    """
    if branch not in ("plus", "minus"):
        raise ConfigError(f"branch must be plus or minus, got {branch!r}")
    ks = sorted(int(k) for k in k_range)
    if not ks or ks[0] < 0:
        raise ConfigError("k_range must be nonempty and nonnegative")
    x_bot, v_bot, x_top, v_top = _well_geometry(profile)
    if v_bot < DELTA_B:
        raise WindowError("well bottom sits inside the degeneracy margin")
    lam_cap = v_top - 1e-9 * (v_top - v_bot)
    a_cap = _well_action(profile, lam_cap, x_top, x_bot)
    n = n_grid or _default_latitude_points(epsilon)
    w = np.linalg.eigvalsh(_h2_matrix(profile, epsilon, n))
    entries = []
    for k in ks:
        target = (k + 0.5) * epsilon
        if target >= a_cap:
            raise WindowError(
                f"level k={k} lies above the barrier (action {target:.4f} "
                f"exceeds the well capacity {a_cap:.4f})")
        lam_bs = brentq(
            lambda lam: _well_action(profile, lam, x_top, x_bot) - target,
            v_bot + 1e-12 * (v_top - v_bot), lam_cap, xtol=1e-13)
        lam_direct = float(w[k])
        if lam_direct >= v_top:
            raise WindowError(
                f"direct level k={k} ({lam_direct:.4f}) above the barrier")
        entries.append((k, lam_direct, float(lam_bs)))
    return SpectrumTable(branch=branch, xi1=float(xi1),
                         eigenvalues=tuple(entries), epsilon=float(epsilon))


@dataclass(frozen=True)
class ScalarResidualReport:
    """Residuals of the dispersion identity on gravity eigenpairs."""

    profile: str
    xi1: float
    epsilon: float
    n_grid: int
    entries: tuple  # of (k, lam, residual)
    off_spectrum_residual: float

    def as_dict(self):
        return {
            "profile": self.profile,
            "xi1": self.xi1,
            "epsilon": self.epsilon,
            "n_grid": self.n_grid,
            "entries": [{"k": k, "lam": lam, "residual": r}
                        for (k, lam, r) in self.entries],
            "off_spectrum_residual": self.off_spectrum_residual,
        }


def scalar_residual_check(profile, xi1, epsilon, n_modes=5, n_grid=None,
                          off_spectrum_shift=0.1):
    """Apply the quantized full symbol to gravity eigenpairs.

    The upward gravity operator is realized as sqrt(H2 + xi1^2) by
    functional calculus of the discrete latitude operator. For each of
    its lowest eigenpairs (lam, psi) the quantized symbol

        h(x2, xi2; lam) = lam^2 - xi1^2 - xi2^2 - b^2 + eps b' xi1 / lam

    is applied to psi; the relative residual collapses by one power of
    epsilon on true eigenpairs and stays order one off spectrum.
    """
    if abs(xi1) < DELTA_XI1:
        raise Inadmissible(f"xi1 = {xi1} inside the degeneracy margin")
    n = n_grid or _default_latitude_points(epsilon)
    h2 = _h2_matrix(profile, epsilon, n)
    w, V = np.linalg.eigh(h2)
    x = 2.0 * np.pi * np.arange(n) / n
    b, bp, _ = profile.eval(x)
    xi2 = epsilon * _dual_modes(n)[None, :]

    def residual(lam, psi):
        a = (lam * lam - xi1 * xi1 - xi2 * xi2 - (b * b)[:, None]
             + epsilon * bp[:, None] * xi1 / lam)
        op = _mixed_matrix(a.astype(complex), n)
        return float(np.linalg.norm(op @ psi) / np.linalg.norm(psi))

    entries = []
    for k in range(n_modes):
        lam = math.sqrt(float(w[k]) + xi1 * xi1)
        entries.append((k, lam, residual(lam, V[:, k])))
    lam0 = entries[0][1]
    off = residual(lam0 + off_spectrum_shift, V[:, 0])
    return ScalarResidualReport(profile=profile.name, xi1=float(xi1),
                                epsilon=float(epsilon), n_grid=int(n),
                                entries=tuple(entries),
                                off_spectrum_residual=off)
