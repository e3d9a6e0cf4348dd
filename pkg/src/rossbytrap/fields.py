"""Grids, state fields, measurement regions, and phase-space diagnostics.

The x1 line is truncated to a periodic box of length L1 = 2 pi m and the
latitude circle keeps its native 2 pi period. Fields are sampled on the
tensor collocation grid; all norms are discrete L2 with the cell measure,
which is spectrally exact for band-limited integrands.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ResolutionError


def _is_pow2(n):
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid2D:
    """Collocation grid for one value of the oscillation scale epsilon.

    The resolution floor (8 points per epsilon-wavelength in each
    direction) guards the unitary spectral evolution against aliased
    initial data; constructing a coarser grid raises ResolutionError.
    """

    L1: float
    N1: int
    N2: int
    epsilon: float

    def __post_init__(self):
        if self.epsilon <= 0.0:
            raise ConfigError("epsilon must be positive")
        if not (_is_pow2(self.N1) and _is_pow2(self.N2)):
            raise ResolutionError(f"N1, N2 must be powers of two, got "
                                  f"{self.N1}, {self.N2}")
        need1 = 8.0 * self.L1 / (2.0 * math.pi * self.epsilon)
        need2 = 8.0 / self.epsilon
        if self.N1 < need1 - 1e-9 or self.N2 < need2 - 1e-9:
            raise ResolutionError(
                f"grid {self.N1}x{self.N2} below the 8-points-per-wavelength "
                f"floor ({need1:.0f}x{need2:.0f}) at epsilon = {self.epsilon}")

    @property
    def x1(self):
        """Collocation nodes on the centered box [-L1/2, L1/2)."""
        return -0.5 * self.L1 + self.L1 * np.arange(self.N1) / self.N1

    @property
    def x2(self):
        return 2.0 * math.pi * np.arange(self.N2) / self.N2

    @property
    def k1(self):
        """Integer Fourier indices along x1, FFT order."""
        return np.fft.fftfreq(self.N1, d=1.0 / self.N1).astype(int)

    @property
    def n2(self):
        """Integer Fourier indices along x2, FFT order."""
        return np.fft.fftfreq(self.N2, d=1.0 / self.N2).astype(int)

    def kappa(self, k1):
        """Physical x1 wavenumber of Fourier index k1."""
        return 2.0 * math.pi * np.asarray(k1) / self.L1

    @property
    def dx1(self):
        return self.L1 / self.N1

    @property
    def dx2(self):
        return 2.0 * math.pi / self.N2

    @property
    def cell(self):
        return self.dx1 * self.dx2


def grid_for(epsilon, m=4, margin=1.0, n2_min=None):
    """Smallest power-of-two grid satisfying the resolution floor.

    margin > 1 over-resolves by that factor; n2_min can force extra
    latitude resolution (profiles with strong b variation).
    """
    L1 = 2.0 * math.pi * m
    need1 = margin * 8.0 * L1 / (2.0 * math.pi * epsilon)
    need2 = margin * 8.0 / epsilon
    if n2_min:
        need2 = max(need2, n2_min)
    N1 = 1 << max(0, math.ceil(math.log2(need1)))
    N2 = 1 << max(0, math.ceil(math.log2(need2)))
    return Grid2D(L1=L1, N1=N1, N2=N2, epsilon=epsilon)


@dataclass
class StateField:
    """Sampled (rho, u1, u2) on a Grid2D at one instant."""

    grid: Grid2D
    values: np.ndarray  # complex, shape (3, N1, N2)
    time: float = 0.0

    def __post_init__(self):
        want = (3, self.grid.N1, self.grid.N2)
        if self.values.shape != want:
            raise ConfigError(f"values shape {self.values.shape} != {want}")
        self.values = np.ascontiguousarray(self.values, dtype=complex)

    def norm(self):
        """Total L2 norm over the box."""
        return math.sqrt(float(np.sum(np.abs(self.values) ** 2)) * self.grid.cell)

    def copy(self):
        return StateField(self.grid, self.values.copy(), self.time)


def zero_field(grid):
    return StateField(grid, np.zeros((3, grid.N1, grid.N2), dtype=complex))


def spectral_tail_fraction(field, band=7.0 / 8.0):
    """Fraction of L2 mass at Fourier indices beyond `band` of Nyquist."""
    hat = np.fft.fft2(field.values, axes=(1, 2))
    p = np.abs(hat) ** 2
    total = float(p.sum())
    if total == 0.0:
        return 0.0
    g = field.grid
    hi1 = np.abs(g.k1) > band * (g.N1 // 2)
    hi2 = np.abs(g.n2) > band * (g.N2 // 2)
    tail = float(p[:, hi1, :].sum()) + float(p[:, :, hi2].sum())
    return tail / total


@dataclass(frozen=True)
class RegionOmega:
    """Longitude band |x1 - center| <= half_width with a cosine collar.

    The weight is 1 on the band, rolls to 0 over `collar` grid cells, and
    the whole support must stay at least L1/8 away from the box seam so
    dispersing mass cannot wrap into the measurement region early.
    """

    grid: Grid2D
    half_width: float
    center: float = 0.0
    collar_cells: int = 4
    weights: np.ndarray = field(init=False, repr=False, default=None)

    def __post_init__(self):
        g = self.grid
        w_collar = self.collar_cells * g.dx1
        outer = self.half_width + w_collar
        if outer > 0.5 * g.L1 - g.L1 / 8.0:
            raise ConfigError(
                f"region (outer radius {outer:.3f}) closer than L1/8 "
                f"to the box seam (L1 = {g.L1:.3f})")
        d = np.abs(g.x1 - self.center)
        w = np.zeros(g.N1)
        w[d <= self.half_width] = 1.0
        ramp = (d > self.half_width) & (d < outer)
        w[ramp] = 0.5 * (1.0 + np.cos(math.pi * (d[ramp] - self.half_width)
                                      / w_collar))
        object.__setattr__(self, "weights", w)

    @classmethod
    def everything(cls, grid):
        r = object.__new__(cls)
        object.__setattr__(r, "grid", grid)
        object.__setattr__(r, "half_width", math.inf)
        object.__setattr__(r, "center", 0.0)
        object.__setattr__(r, "collar_cells", 0)
        object.__setattr__(r, "weights", np.ones(grid.N1))
        return r


def local_mass(field, omega):
    """Weighted L2 norm of the field over the region."""
    if omega.grid is not field.grid and omega.grid != field.grid:
        raise ConfigError("region and field live on different grids")
    p = np.sum(np.abs(field.values) ** 2, axis=(0, 2)) * field.grid.dx2
    return math.sqrt(float(np.sum(omega.weights * p)) * field.grid.dx1)


@dataclass
class HusimiDensity:
    """Marginals of the Gaussian-windowed phase-space density.

    The full density lives on (x1, x2, xi1, xi2); storing it densely is
    prohibitive, so the transform accumulates the pair marginals that the
    diagnostics actually read. `total` integrates the density and should
    reproduce the squared L2 norm. Axes: x centers are subsampled grid
    nodes, xi axes are the epsilon-scaled Fourier lattices, ascending.
    """

    x1_centers: np.ndarray
    x2_centers: np.ndarray
    xi1: np.ndarray
    xi2: np.ndarray
    x_density: np.ndarray      # (nc1, nc2)
    xi_density: np.ndarray     # (N1, N2)
    x1_xi1: np.ndarray         # (nc1, N1)
    x2_xi2: np.ndarray         # (nc2, N2)
    total: float
    full: np.ndarray = None    # (nc1, nc2, N1, N2) when requested

    def centroid(self):
        """Density-weighted means (x1, x2, xi1, xi2); x2 via circular mean."""
        wx1 = self.x_density.sum(axis=1)
        wx2 = self.x_density.sum(axis=0)
        wxi1 = self.xi_density.sum(axis=1)
        wxi2 = self.xi_density.sum(axis=0)
        x1 = float(np.sum(wx1 * self.x1_centers) / np.sum(wx1))
        ang = np.exp(1j * self.x2_centers)
        x2 = float(np.angle(np.sum(wx2 * ang)) % (2.0 * math.pi))
        xi1 = float(np.sum(wxi1 * self.xi1) / np.sum(wxi1))
        xi2 = float(np.sum(wxi2 * self.xi2) / np.sum(wxi2))
        return x1, x2, xi1, xi2


def husimi(field, stride1=None, stride2=None, keep_full=False,
           x1_window=None, x2_window=None):
    """Gaussian-windowed phase-space density of a state field.

    Windows have standard deviation sqrt(epsilon) in each position
    variable (and hence sqrt(epsilon) in each dual), the natural scale of
    the epsilon-frequency set. Window centers are grid nodes subsampled
    by `stride`; the default keeps center spacing below half a window
    width so the completeness sum holds to spectral accuracy. Restricting
    centers with x1_window/x2_window tracks a localized packet cheaply,
    at the price of `total` covering only the windowed region.
    """
    g = field.grid
    sig = math.sqrt(g.epsilon)
    if stride1 is None:
        stride1 = max(1, int(0.5 * sig / g.dx1))
    if stride2 is None:
        stride2 = max(1, int(0.5 * sig / g.dx2))
    if stride1 * g.dx1 > 0.75 * sig or stride2 * g.dx2 > 0.75 * sig:
        raise ResolutionError("husimi center spacing exceeds the window width")

    x1c = g.x1[::stride1]
    x2c = g.x2[::stride2]
    if x1_window is not None:
        x1c = x1c[(x1c >= x1_window[0]) & (x1c <= x1_window[1])]
    if x2_window is not None:
        lo, hi = x2_window
        d = (x2c - lo) % (2.0 * math.pi)
        x2c = x2c[d <= (hi - lo) % (2.0 * math.pi) + 1e-12]
    if len(x1c) == 0 or len(x2c) == 0:
        raise ConfigError("husimi center windows select no grid nodes")
    nc1, nc2 = len(x1c), len(x2c)

    # periodized, L2-normalized windows on the two circles
    def window(axis_pts, L, center):
        d = axis_pts - center
        d = d - L * np.round(d / L)
        w = np.exp(-d * d / (2.0 * sig * sig))
        return w / (math.pi * sig * sig) ** 0.25

    xi1 = np.fft.fftshift(g.epsilon * g.kappa(g.k1))
    xi2 = np.fft.fftshift(g.epsilon * g.n2.astype(float))

    x_density = np.zeros((nc1, nc2))
    xi_density = np.zeros((g.N1, g.N2))
    x1_xi1 = np.zeros((nc1, g.N1))
    x2_xi2 = np.zeros((nc2, g.N2))
    full = np.zeros((nc1, nc2, g.N1, g.N2)) if keep_full else None

    # measure making the completeness sum equal the squared norm
    dxi1 = 2.0 * math.pi * g.epsilon / g.L1
    dxi2 = g.epsilon
    meas = (stride1 * g.dx1) * (stride2 * g.dx2) * dxi1 * dxi2 \
        / (2.0 * math.pi * g.epsilon) ** 2

    w1_all = np.stack([window(g.x1, g.L1, c) for c in x1c])
    w2_all = np.stack([window(g.x2, 2.0 * math.pi, c) for c in x2c])

    cell = g.cell
    for i in range(nc1):
        win1 = w1_all[i][:, None]
        for j in range(nc2):
            v = field.values * (win1 * w2_all[j][None, :])
            amp = np.fft.fft2(v, axes=(1, 2)) * cell
            h = np.fft.fftshift(np.sum(np.abs(amp) ** 2, axis=0),
                                axes=(0, 1)) * meas
            s = float(h.sum())
            x_density[i, j] = s
            xi_density += h
            x1_xi1[i] += h.sum(axis=1)
            x2_xi2[j] += h.sum(axis=0)
            if keep_full:
                full[i, j] = h

    return HusimiDensity(
        x1_centers=x1c, x2_centers=x2c, xi1=xi1, xi2=xi2,
        x_density=x_density, xi_density=xi_density,
        x1_xi1=x1_xi1, x2_xi2=x2_xi2,
        total=float(x_density.sum()), full=full)
