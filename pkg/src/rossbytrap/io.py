"""Run configuration, persistence, and manifests.

Configs are JSON documents validated against closed schemas: every key
is checked and unknown keys are rejected, so a typo fails before any
computation starts. Numeric series go to CSV, field snapshots to flat
binary, figures to SVG, and each run directory gets a manifest written
last through an atomic rename; an interrupted run therefore never
leaves a manifest claiming completion. All writers format numbers
through repr, which round-trips doubles exactly and keeps reruns
byte-identical.
"""

from __future__ import annotations

import csv
import hashlib
import io as _io
import json
import math
import os
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, IoError
from .profiles import CoriolisProfile, builtin_profile

MANIFEST_NAME = "manifest.json"

_BUILTIN_PROFILES = ("sin", "2+sin", "1+0.5cos")


def _check_keys(mapping, required, optional, where):
    if not isinstance(mapping, dict):
        raise ConfigError(f"{where} must be an object, got {type(mapping).__name__}")
    unknown = sorted(set(mapping) - set(required) - set(optional))
    if unknown:
        raise ConfigError(f"unknown keys {unknown} in {where}")
    missing = sorted(set(required) - set(mapping))
    if missing:
        raise ConfigError(f"missing keys {missing} in {where}")


def _number(value, where, lo=None, hi=None):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where} must be a number, got {value!r}")
    v = float(value)
    if not math.isfinite(v):
        raise ConfigError(f"{where} must be finite")
    if lo is not None and v < lo:
        raise ConfigError(f"{where} = {v} below minimum {lo}")
    if hi is not None and v > hi:
        raise ConfigError(f"{where} = {v} above maximum {hi}")
    return v


def _integer(value, where, lo=None):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{where} must be an integer, got {value!r}")
    if lo is not None and value < lo:
        raise ConfigError(f"{where} = {value} below minimum {lo}")
    return int(value)


def parse_epsilon_list(text):
    """Parse a comma-separated epsilon list; fractions like 1/8 allowed."""
    values = []
    for tok in str(text).split(","):
        tok = tok.strip()
        if not tok:
            continue
        try:
            if "/" in tok:
                num, den = tok.split("/")
                values.append(float(num) / float(den))
            else:
                values.append(float(tok))
        except (ValueError, ZeroDivisionError):
            raise ConfigError(f"cannot parse epsilon {tok!r}")
    if not values:
        raise ConfigError("empty epsilon list")
    return tuple(_number(v, "epsilon", lo=1e-12) for v in values)


def profile_from_spec(spec):
    """Build a Coriolis profile from its config object."""
    _check_keys(spec, ("name",), ("constant", "cos_coeffs", "sin_coeffs"),
                "profile")
    name = spec["name"]
    if set(spec) == {"name"}:
        if name not in _BUILTIN_PROFILES:
            raise ConfigError(f"unknown builtin profile {name!r}; "
                              f"choose from {_BUILTIN_PROFILES} or give "
                              f"coefficients")
        return builtin_profile(name)
    return CoriolisProfile(
        name=str(name),
        constant=_number(spec.get("constant", 0.0), "profile.constant"),
        cos_coeffs=tuple(_number(c, "profile.cos_coeffs")
                         for c in spec.get("cos_coeffs", ())),
        sin_coeffs=tuple(_number(c, "profile.sin_coeffs")
                         for c in spec.get("sin_coeffs", ())))


SCENARIOS = ("rays", "lambda", "evolve", "modes", "spectrum", "report")

# scenarios whose numerics live at the symbol level and ignore epsilon
_SYMBOL_LEVEL = ("rays", "lambda")


@dataclass(frozen=True)
class RunConfig:
    """A validated run request: scenario, physics, and output plumbing."""

    scenario: str
    profile: CoriolisProfile
    grid: dict
    epsilons: tuple
    seed: int
    out: str
    threads: int
    params: dict
    raw: dict


def _validate_grid(spec):
    _check_keys(spec, (), ("m", "margin", "n2_min"), "grid")
    return {
        "m": _integer(spec.get("m", 4), "grid.m", lo=1),
        "margin": _number(spec.get("margin", 1.0), "grid.margin", lo=1.0),
        "n2_min": (_integer(spec["n2_min"], "grid.n2_min", lo=2)
                   if "n2_min" in spec else None),
    }


def _validate_datum(spec):
    _check_keys(spec, ("kind",), (
        "x2", "xi2", "xi1_root", "sigma1", "sigma2", "x1_center",
        "c1", "mu", "x2_center", "xi1_cap", "normalize"), "params.datum")
    kind = spec["kind"]
    if kind == "trapped":
        out = {"kind": "trapped",
               "x2": _number(spec.get("x2", 3.0), "datum.x2"),
               "xi2": _number(spec.get("xi2", 0.5), "datum.xi2"),
               "xi1_root": _number(spec["xi1_root"], "datum.xi1_root", lo=1e-3)
               if "xi1_root" in spec else None,
               "sigma1": _number(spec.get("sigma1", 0.6), "datum.sigma1", lo=1e-3),
               "sigma2": _number(spec.get("sigma2", 0.5), "datum.sigma2", lo=1e-3),
               "x1_center": _number(spec.get("x1_center", 0.0), "datum.x1_center")}
        if out["xi1_root"] is None:
            raise ConfigError("trapped datum needs xi1_root (a root of the "
                              "drift, from a lambda run)")
        return out
    if kind == "untrapped":
        return {"kind": "untrapped",
                "c1": _number(spec.get("c1", 0.2), "datum.c1", lo=1e-6),
                "sigma1": _number(spec.get("sigma1", 2.0), "datum.sigma1", lo=1e-3),
                "mu": _number(spec.get("mu", 0.4), "datum.mu"),
                "sigma2": _number(spec.get("sigma2", 0.9), "datum.sigma2", lo=1e-3),
                "x2_center": _number(spec.get("x2_center", 3.0), "datum.x2_center"),
                "xi1_cap": _number(spec.get("xi1_cap", 1.3), "datum.xi1_cap", lo=0.1)}
    raise ConfigError(f"unknown datum kind {kind!r}")


def _validate_evolve(params):
    _check_keys(params, ("datum",), (
        "branch", "omega", "window", "extra_times", "normalize",
        "save_snapshots"), "params")
    window = params.get("window", {})
    _check_keys(window, (), ("t_start", "t_end", "count"), "params.window")
    omega = params.get("omega", {})
    _check_keys(omega, (), ("half_width", "center", "collar_cells"),
                "params.omega")
    branch = params.get("branch", "full")
    if branch not in ("full", "slow", "fast"):
        raise ConfigError(f"unknown evolution branch {branch!r}")
    t0 = _number(window.get("t_start", 1.0), "window.t_start", lo=0.0)
    t1 = _number(window.get("t_end", 2.0), "window.t_end")
    if t1 <= t0:
        raise ConfigError("window.t_end must exceed window.t_start")
    return {
        "datum": _validate_datum(params["datum"]),
        "branch": branch,
        "omega": {
            "half_width": _number(omega.get("half_width", 2.3),
                                  "omega.half_width", lo=0.1),
            "center": _number(omega.get("center", 0.0), "omega.center"),
            "collar_cells": _integer(omega.get("collar_cells", 4),
                                     "omega.collar_cells", lo=1),
        },
        "window": {"t_start": t0, "t_end": t1,
                   "count": _integer(window.get("count", 9), "window.count", lo=2)},
        "extra_times": tuple(_number(t, "extra_times", lo=0.0)
                             for t in params.get("extra_times", (10.0,))),
        "normalize": _number(params.get("normalize", 1.0), "normalize", lo=0.0),
        "save_snapshots": bool(params.get("save_snapshots", False)),
    }


def _validate_rays(params):
    _check_keys(params, (), (
        "count", "x2_range", "xi2_range", "xi1_range", "t_span",
        "orbit_csv_count", "max_attempts"), "params")

    def pair(key, default):
        v = params.get(key, default)
        if (not isinstance(v, (list, tuple)) or len(v) != 2
                or _number(v[1], key) <= _number(v[0], key)):
            raise ConfigError(f"{key} must be an increasing pair")
        return (float(v[0]), float(v[1]))

    count = _integer(params.get("count", 100), "count", lo=1)
    return {
        "count": count,
        "x2_range": pair("x2_range", (0.3, 6.0)),
        "xi2_range": pair("xi2_range", (-1.2, 1.2)),
        "xi1_range": pair("xi1_range", (0.4, 2.2)),
        "t_span": _number(params.get("t_span", 40.0), "t_span", lo=1.0),
        "orbit_csv_count": _integer(params.get("orbit_csv_count", 3),
                                    "orbit_csv_count", lo=0),
        "max_attempts": _integer(params.get("max_attempts", 4 * count),
                                 "max_attempts", lo=count),
    }


def _validate_lambda(params):
    _check_keys(params, (), (
        "n_x2", "n_xi2", "x2_range", "xi2_range", "xi1_range",
        "nodes_per_decade", "scaling_points"), "params")

    def pair(key, default, lo=None):
        v = params.get(key, default)
        if (not isinstance(v, (list, tuple)) or len(v) != 2
                or _number(v[1], key) <= _number(v[0], key, lo=lo)):
            raise ConfigError(f"{key} must be an increasing pair")
        return (float(v[0]), float(v[1]))

    points = params.get("scaling_points", ())
    cleaned = []
    for pt in points:
        if not isinstance(pt, (list, tuple)) or len(pt) != 2:
            raise ConfigError("scaling_points entries must be [x2, xi2] pairs")
        cleaned.append((_number(pt[0], "scaling_points.x2"),
                        _number(pt[1], "scaling_points.xi2")))
    return {
        "n_x2": _integer(params.get("n_x2", 32), "n_x2", lo=2),
        "n_xi2": _integer(params.get("n_xi2", 32), "n_xi2", lo=2),
        "x2_range": pair("x2_range", (0.1, 6.18)),
        "xi2_range": pair("xi2_range", (-1.5, 1.5)),
        "xi1_range": pair("xi1_range", (0.3, 24.0), lo=1e-3),
        "nodes_per_decade": _integer(params.get("nodes_per_decade", 64),
                                     "nodes_per_decade", lo=8),
        "scaling_points": tuple(cleaned),
    }


def _validate_modes(params):
    _check_keys(params, ("datum",), ("t_final", "check_evolution"), "params")
    datum = _validate_datum(params["datum"])
    if datum["kind"] != "trapped":
        raise ConfigError("modes scenario expects a trapped datum")
    return {
        "datum": datum,
        "t_final": _number(params.get("t_final", 1.0), "t_final", lo=0.0),
        "check_evolution": bool(params.get("check_evolution", True)),
    }


def _validate_spectrum(params):
    _check_keys(params, (), (
        "xi1", "k_max", "branch", "residual_modes", "off_spectrum_shift"),
        "params")
    branch = params.get("branch", "plus")
    if branch not in ("plus", "minus"):
        raise ConfigError(f"branch must be plus or minus, got {branch!r}")
    return {
        "xi1": _number(params.get("xi1", 1.5), "xi1"),
        "k_max": _integer(params.get("k_max", 8), "k_max", lo=1),
        "branch": branch,
        "residual_modes": _integer(params.get("residual_modes", 5),
                                   "residual_modes", lo=1),
        "off_spectrum_shift": _number(params.get("off_spectrum_shift", 0.1),
                                      "off_spectrum_shift"),
    }


def _validate_report(params):
    _check_keys(params, ("runs",), (), "params")
    runs = params["runs"]
    if not isinstance(runs, (list, tuple)) or not runs:
        raise ConfigError("params.runs must be a nonempty list of run dirs")
    return {"runs": tuple(str(r) for r in runs)}


_PARAM_VALIDATORS = {
    "evolve": _validate_evolve,
    "rays": _validate_rays,
    "lambda": _validate_lambda,
    "modes": _validate_modes,
    "spectrum": _validate_spectrum,
    "report": _validate_report,
}


def validate_config(doc):
    """Validate a parsed JSON document into a RunConfig."""
    _check_keys(doc, ("scenario",), (
        "profile", "grid", "epsilons", "seed", "out", "threads", "params"),
        "config")
    scenario = doc["scenario"]
    if scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario {scenario!r}; choose from "
                          f"{SCENARIOS}")
    profile = profile_from_spec(doc.get("profile", {"name": "2+sin"}))
    epsilons = tuple(_number(e, "epsilons", lo=1e-12)
                     for e in doc.get("epsilons", ()))
    if scenario not in _SYMBOL_LEVEL and scenario != "report" and not epsilons:
        raise ConfigError(f"scenario {scenario!r} needs a nonempty epsilons list")
    params = _PARAM_VALIDATORS[scenario](doc.get("params", {}))
    return RunConfig(
        scenario=scenario,
        profile=profile,
        grid=_validate_grid(doc.get("grid", {})),
        epsilons=epsilons,
        seed=_integer(doc.get("seed", 0), "seed"),
        out=str(doc.get("out", f"{scenario}_run")),
        threads=_integer(doc.get("threads", 1), "threads", lo=1),
        params=params,
        raw=doc,
    )


def load_config(path):
    """Read and validate a JSON config file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise IoError(f"cannot read config {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}")
    return validate_config(doc)


def _to_jsonable(obj):
    """Recursively convert numpy scalars and arrays for json.dumps."""
    if isinstance(obj, dict):
        return {str(k): _to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_to_jsonable(v) for v in obj.tolist()]
    return obj


def atomic_write_bytes(path, data):
    """Write via a sibling temp file and rename into place."""
    tmp = f"{path}.tmp"
    try:
        with open(tmp, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}")


def write_json(path, obj):
    text = json.dumps(_to_jsonable(obj), indent=2, sort_keys=True)
    atomic_write_bytes(path, text.encode("utf-8") + b"\n")


def write_csv(path, header, rows):
    """Write a CSV with repr-exact numbers and unix newlines."""
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        out = []
        for v in row:
            if isinstance(v, (np.floating, float)):
                out.append(repr(float(v)))
            elif isinstance(v, (np.integer, int)):
                out.append(int(v))
            else:
                out.append(v)
        writer.writerow(out)
    atomic_write_bytes(path, buf.getvalue().encode("utf-8"))


def read_csv(path):
    """Read a CSV written by write_csv: (header, rows of strings)."""
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            rows = list(reader)
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}")
    if not rows:
        raise IoError(f"{path} is empty")
    return rows[0], rows[1:]


def write_snapshot(path, field):
    """Flat binary snapshot of a state; returns its manifest record."""
    data = np.ascontiguousarray(field.values, dtype=np.complex128).tobytes()
    atomic_write_bytes(path, data)
    return {"dtype": "complex128", "shape": list(field.values.shape),
            "order": "C", "time": float(field.time)}


def sha256_file(path):
    digest = hashlib.sha256()
    try:
        with open(path, "rb") as fh:
            for chunk in iter(lambda: fh.read(1 << 20), b""):
                digest.update(chunk)
    except OSError as exc:
        raise IoError(f"cannot hash {path}: {exc}")
    return digest.hexdigest()


def write_manifest(out_dir, scenario, config_raw, artifact_names, extra=None):
    """Hash the artifacts and write the manifest last, atomically."""
    artifacts = {}
    for name in sorted(artifact_names):
        path = os.path.join(out_dir, name)
        artifacts[name] = {"sha256": sha256_file(path),
                           "bytes": os.path.getsize(path)}
    manifest = {
        "package": "rossbytrap",
        "version": _package_version(),
        "scenario": scenario,
        "config": _to_jsonable(config_raw),
        "artifacts": artifacts,
        "status": "complete",
    }
    if extra:
        manifest.update(_to_jsonable(extra))
    write_json(os.path.join(out_dir, MANIFEST_NAME), manifest)
    return manifest


def _package_version():
    from . import __version__
    return __version__


def read_manifest(run_dir):
    path = os.path.join(run_dir, MANIFEST_NAME)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            manifest = json.load(fh)
    except OSError as exc:
        raise IoError(f"no manifest in {run_dir}: {exc}")
    except json.JSONDecodeError as exc:
        raise IoError(f"corrupt manifest in {run_dir}: {exc}")
    if manifest.get("status") != "complete":
        raise IoError(f"manifest in {run_dir} does not claim completion")
    return manifest


def epsilon_tag(eps):
    """Stable filename tag: eps8 for 1/8, eps0p3 for 0.3."""
    inv = 1.0 / eps
    if abs(inv - round(inv)) < 1e-9:
        return str(int(round(inv)))
    return repr(float(eps)).replace(".", "p").replace("-", "m")
