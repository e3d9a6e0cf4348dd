"""Coriolis profiles b(x2) on the circle.

A profile carries the rotation rate b and its first two derivatives as
exact closed forms, plus the zero sets of b and b' on [0, 2pi). Built-ins
cover the profiles used throughout; arbitrary truncated Fourier series can
be supplied through configuration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

_TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class CoriolisProfile:
    """Latitude-dependent rotation rate with exact derivatives.

    Parameters
    ----------
    name : str
        Identifier, used in manifests and file names.
    constant : float
        Constant Fourier term.
    cos_coeffs : tuple of float
        Coefficients of cos(n x2), n = 1, 2, ...
    sin_coeffs : tuple of float
        Coefficients of sin(n x2), n = 1, 2, ...
    """

    name: str
    constant: float = 0.0
    cos_coeffs: tuple = ()
    sin_coeffs: tuple = ()
    _zeros_b: tuple = field(default=None, repr=False)
    _zeros_bp: tuple = field(default=None, repr=False)

    def eval(self, x2):
        """Return (b, b', b'') at x2. Accepts scalars or arrays."""
        if isinstance(x2, (float, int)):
            return self.eval_scalar(x2)
        x2 = np.asarray(x2, dtype=float)
        b = np.full_like(x2, self.constant)
        bp = np.zeros_like(x2)
        bpp = np.zeros_like(x2)
        for n, c in enumerate(self.cos_coeffs, start=1):
            if c == 0.0:
                continue
            b = b + c * np.cos(n * x2)
            bp = bp - c * n * np.sin(n * x2)
            bpp = bpp - c * n * n * np.cos(n * x2)
        for n, s in enumerate(self.sin_coeffs, start=1):
            if s == 0.0:
                continue
            b = b + s * np.sin(n * x2)
            bp = bp + s * n * np.cos(n * x2)
            bpp = bpp - s * n * n * np.sin(n * x2)
        if b.ndim == 0:
            return float(b), float(bp), float(bpp)
        return b, bp, bpp

    def eval_scalar(self, x2):
        """Fast scalar path used by the ray integrator's inner loop."""
        b = self.constant
        bp = 0.0
        bpp = 0.0
        for n, c in enumerate(self.cos_coeffs, start=1):
            if c == 0.0:
                continue
            cn, sn = math.cos(n * x2), math.sin(n * x2)
            b += c * cn
            bp -= c * n * sn
            bpp -= c * n * n * cn
        for n, s in enumerate(self.sin_coeffs, start=1):
            if s == 0.0:
                continue
            cn, sn = math.cos(n * x2), math.sin(n * x2)
            b += s * sn
            bp += s * n * cn
            bpp -= s * n * n * sn
        return b, bp, bpp

    def b(self, x2):
        return self.eval(x2)[0]

    @property
    def zeros_of_b(self):
        """Zeros of b on [0, 2pi), found to 1e-10."""
        if self._zeros_b is None:
            object.__setattr__(self, "_zeros_b",
                               _zero_set(lambda x: self.eval(x)[0]))
        return self._zeros_b

    @property
    def zeros_of_bprime(self):
        """Zeros of b' on [0, 2pi), found to 1e-10."""
        if self._zeros_bp is None:
            object.__setattr__(self, "_zeros_bp",
                               _zero_set(lambda x: self.eval(x)[1]))
        return self._zeros_bp


def _zero_set(f, n_scan=4096, tol=1e-12):
    """All zeros of a smooth 2pi-periodic function, by dense scan + bisection."""
    from scipy.optimize import brentq

    xs = np.linspace(0.0, _TWO_PI, n_scan + 1)
    vals = np.array([f(x) for x in xs])
    zeros = []
    for i in range(n_scan):
        a, b = vals[i], vals[i + 1]
        if a == 0.0:
            zeros.append(xs[i])
        elif a * b < 0.0:
            zeros.append(brentq(f, xs[i], xs[i + 1], xtol=tol))
    # collapse duplicates from exact grid hits
    out = []
    for z in zeros:
        z = z % _TWO_PI
        if not out or abs(z - out[-1]) > 1e-9:
            out.append(z)
    if out and abs(out[0] + _TWO_PI - out[-1]) < 1e-9:
        out.pop()
    return tuple(out)


_BUILTINS = {
    "sin": CoriolisProfile("sin", sin_coeffs=(1.0,)),
    "2+sin": CoriolisProfile("2+sin", constant=2.0, sin_coeffs=(1.0,)),
    "1+0.5cos": CoriolisProfile("1+0.5cos", constant=1.0, cos_coeffs=(0.5,)),
}


def builtin_profile(name):
    """Look up a built-in profile by name."""
    try:
        return _BUILTINS[name]
    except KeyError:
        raise ConfigError(
            f"unknown profile {name!r}; built-ins: {sorted(_BUILTINS)}")


def profile_from_config(spec):
    """Build a profile from its JSON description.

    Accepts either {"type": "builtin", "name": ...} or
    {"type": "fourier", "constant": c, "cos": [...], "sin": [...]}.
    """
    if not isinstance(spec, dict):
        raise ConfigError("profile spec must be an object")
    kind = spec.get("type")
    if kind == "builtin":
        return builtin_profile(spec.get("name", ""))
    if kind == "fourier":
        extra = set(spec) - {"type", "constant", "cos", "sin", "name"}
        if extra:
            raise ConfigError(f"unknown profile keys: {sorted(extra)}")
        cos = spec.get("cos", [])
        sin = spec.get("sin", [])
        if not all(isinstance(v, (int, float)) for v in list(cos) + list(sin)):
            raise ConfigError("profile coefficients must be numbers")
        const = spec.get("constant", 0.0)
        if not isinstance(const, (int, float)):
            raise ConfigError("profile constant must be a number")
        name = spec.get("name", "fourier")
        return CoriolisProfile(name, constant=float(const),
                               cos_coeffs=tuple(float(v) for v in cos),
                               sin_coeffs=tuple(float(v) for v in sin))
    raise ConfigError(f"unknown profile type {kind!r}")


def eval_profile(profile, x2):
    """Functional form of CoriolisProfile.eval, for symmetry with the other ops."""
    return profile.eval(x2)
