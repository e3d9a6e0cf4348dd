"""Scenario engines behind the command line.

Each engine takes a validated RunConfig, computes into an output
directory, and finishes by writing the manifest. Given the same config,
seed, and build, the artifacts are byte-identical on rerun; nothing
here consults the clock or the filesystem state.
"""

from __future__ import annotations

import os

import numpy as np

from .errors import (ComputeError, ConfigError, IoError, ManifestMismatch,
                     RossbytrapError)
from .fields import (RegionOmega, StateField, grid_for, local_mass,
                     spectral_tail_fraction)
from .io import epsilon_tag, write_csv, write_json, write_manifest, write_snapshot
from .pde import EvolveWorkspace
from .quantize import (bohr_sommerfeld_levels, project_modes, reconstruct_mode,
                       scalar_residual_check)
from .rays import (PhasePoint, drift_F_action, drift_F_time, find_period,
                   integrate_ray, signed_drift_F_space)
from .symbols import require_admissible
from .trapped import LambdaPoint, sample_lambda, smallxi_scaling
from .wkb import build_trapped_wkb, build_untrapped_wkb, wkb_initial


def _make_grid(config, eps):
    g = config.grid
    return grid_for(eps, m=g["m"], margin=g["margin"], n2_min=g["n2_min"])


def _build_datum(config, grid):
    """Sample the configured WKB datum; returns (field, cloud, label)."""
    d = dict(config.params["datum"])
    kind = d.pop("kind")
    normalize = config.params.get("normalize", 1.0)
    normalize = None if normalize == 0.0 else normalize
    if kind == "trapped":
        lp = LambdaPoint(x2=d["x2"], xi2=d["xi2"], xi1_root=d["xi1_root"],
                         F_residual=0.0,
                         bracket=(0.99 * d["xi1_root"], 1.01 * d["xi1_root"]))
        spec = build_trapped_wkb(config.profile, grid, lp,
                                 sigma1=d["sigma1"], sigma2=d["sigma2"],
                                 x1_center=d["x1_center"])
    else:
        spec = build_untrapped_wkb(config.profile, grid, c1=d["c1"],
                                   sigma1=d["sigma1"], mu=d["mu"],
                                   sigma2=d["sigma2"],
                                   x2_center=d["x2_center"],
                                   xi1_cap=d["xi1_cap"])
    field, cloud = wkb_initial(config.profile, spec, grid,
                               normalize=normalize)
    return field, cloud, kind


def _run_evolve(config, out_dir):
    params = config.params
    artifacts = []
    summary = {"scenario": "evolve", "kind": params["datum"]["kind"],
               "branch": params["branch"], "per_epsilon": {}}
    win = params["window"]
    for eps in config.epsilons:
        tag = epsilon_tag(eps)
        grid = _make_grid(config, eps)
        U0, cloud, kind = _build_datum(config, grid)
        om = params["omega"]
        omega = RegionOmega(grid, half_width=om["half_width"],
                            center=om["center"],
                            collar_cells=om["collar_cells"])
        slow_times = sorted(set(
            [0.0]
            + list(np.linspace(win["t_start"], win["t_end"], win["count"]))
            + list(params["extra_times"])))
        times = [t / eps for t in slow_times]

        ws = EvolveWorkspace(config.profile, grid, workers=config.threads)
        records = ws.evolve_times(
            U0, times, branch=params["branch"],
            observer=lambda f: (f.time, local_mass(f, omega), f.norm()))

        norm0 = U0.norm()
        branch_share = None
        if params["branch"] != "full":
            # The branch eigenspaces are exactly invariant, so restricting
            # amounts to preparing the datum: drop the complementary part
            # at t = 0 and renormalize. The series then describes the unit
            # restricted state and its evolution is unitary on the nose.
            ref = records[0][2]
            if ref <= 0.0:
                raise ComputeError(
                    f"branch {params['branch']!r} removes the whole datum")
            branch_share = ref / norm0
            records = [(t, loc / ref, tot / ref) for (t, loc, tot) in records]
            norm0 = 1.0
        rows = [(t, t * eps, loc, tot) for (t, loc, tot) in records]
        name = f"series_eps{tag}.csv"
        write_csv(os.path.join(out_dir, name),
                  ("t", "t_slow", "local_mass", "total_mass"), rows)
        artifacts.append(name)

        in_window = [loc for (_, ts, loc, _) in rows
                     if win["t_start"] - 1e-9 <= ts <= win["t_end"] + 1e-9]
        drift = max(abs(tot - norm0) for (_, _, _, tot) in rows) / norm0
        entry = {
            "epsilon": eps,
            "grid": {"N1": grid.N1, "N2": grid.N2, "L1": grid.L1},
            "norm0": norm0,
            "loc0": rows[0][2],
            "m_window": min(in_window),
            "unitarity_drift": drift,
            "rossby_mass_fraction": cloud.rossby_mass_fraction(),
            "spectral_tail": spectral_tail_fraction(U0),
        }
        if branch_share is not None:
            entry["branch_share"] = branch_share
        if params["save_snapshots"]:
            sname = f"state0_eps{tag}.bin"
            entry["snapshot"] = write_snapshot(os.path.join(out_dir, sname), U0)
            entry["snapshot"]["file"] = sname
            artifacts.append(sname)
        summary["per_epsilon"][tag] = entry

    write_json(os.path.join(out_dir, "summary.json"), summary)
    artifacts.append("summary.json")
    return artifacts, summary


def _run_rays(config, out_dir):
    params = config.params
    rng = np.random.default_rng(config.seed)
    rows = []
    failures = []
    orbits = []
    attempts = 0
    while len(rows) < params["count"] and attempts < params["max_attempts"]:
        attempts += 1
        x2 = rng.uniform(*params["x2_range"])
        xi2 = rng.uniform(*params["xi2_range"])
        xi1 = rng.uniform(*params["xi1_range"])
        pt = PhasePoint(0.0, x2, xi1, xi2)
        try:
            require_admissible(config.profile, pt)
            pd = find_period(config.profile, pt)
            if pd.classification != "periodic":
                raise RossbytrapError(f"orbit {pd.classification}")
            f_time = drift_F_time(config.profile, pt, period=pd.period)
            f_space = signed_drift_F_space(config.profile, xi1, x2, xi2)
            f_action = drift_F_action(config.profile, pt)
        except RossbytrapError as exc:
            failures.append({"x2": x2, "xi2": xi2, "xi1": xi1,
                             "error": f"{type(exc).__name__}: {exc}"})
            continue
        rel_ts = abs(f_time - f_space) / max(abs(f_time), 1e-300)
        rows.append((xi1, x2, xi2, pd.period, f_time, f_space, f_action,
                     rel_ts, abs(f_action - f_space)))
        if len(orbits) < params["orbit_csv_count"]:
            orbits.append(pt)

    if not rows:
        raise ComputeError("rays: no librating orbit converged; widen the "
                           "sampling ranges")
    artifacts = []
    write_csv(os.path.join(out_dir, "f_table.csv"),
              ("xi1", "x2", "xi2", "period", "F_time", "F_space", "F_action",
               "rel_time_space", "abs_action_space"), rows)
    artifacts.append("f_table.csv")

    energy_drifts = []
    for i, pt in enumerate(orbits):
        traj = integrate_ray(config.profile, pt, t_end=params["t_span"])
        orows = [(s.time, s.point.x1, s.point.x2, s.point.xi1, s.point.xi2,
                  s.energy_E) for s in traj.samples]
        name = f"orbit_{i}.csv"
        write_csv(os.path.join(out_dir, name),
                  ("t", "x1", "x2", "xi1", "xi2", "E"), orows)
        artifacts.append(name)
        energy_drifts.append(traj.conserved_drift[0])

    summary = {
        "scenario": "rays",
        "n_requested": params["count"],
        "n_converged": len(rows),
        "n_attempts": attempts,
        "max_rel_time_space": max(r[7] for r in rows),
        "max_abs_action_space": max(r[8] for r in rows),
        "max_energy_drift": max(energy_drifts) if energy_drifts else None,
        "failures": failures,
    }
    write_json(os.path.join(out_dir, "summary.json"), summary)
    artifacts.append("summary.json")
    return artifacts, summary


def _run_lambda(config, out_dir):
    params = config.params
    x2_nodes = np.linspace(*params["x2_range"], params["n_x2"])
    xi2_nodes = np.linspace(*params["xi2_range"], params["n_xi2"])
    points, cover, errors = sample_lambda(
        config.profile, x2_nodes, xi2_nodes, xi1_range=params["xi1_range"],
        nodes_per_decade=params["nodes_per_decade"],
        workers=config.threads if config.threads > 1 else None)

    artifacts = []
    write_csv(os.path.join(out_dir, "lambda_cloud.csv"),
              ("x2", "xi2", "xi1_root", "F_residual", "bracket_lo",
               "bracket_hi"),
              [(p.x2, p.xi2, p.xi1_root, p.F_residual, p.bracket[0],
                p.bracket[1]) for p in points])
    artifacts.append("lambda_cloud.csv")

    scaling_rows = []
    fits = []
    for x2, xi2 in params["scaling_points"]:
        rep = smallxi_scaling(config.profile, x2, xi2)
        for xv, fv in zip(rep.xi1_values, rep.F_values):
            scaling_rows.append((x2, xi2, xv, abs(fv)))
        fits.append({"x2": x2, "xi2": xi2, "slope": rep.slope,
                     "intercept": rep.intercept,
                     "lower_bound_F_xi1": rep.lower_bound_F_xi1,
                     "root_free_below": rep.root_free_below})
    if scaling_rows:
        write_csv(os.path.join(out_dir, "scaling.csv"),
                  ("x2", "xi2", "xi1", "F_abs"), scaling_rows)
        artifacts.append("scaling.csv")

    summary = {"scenario": "lambda", "coverage": cover,
               "n_points": len(points), "scaling_fits": fits,
               "errors": errors}
    write_json(os.path.join(out_dir, "summary.json"), summary)
    artifacts.append("summary.json")
    return artifacts, summary


def _run_modes(config, out_dir):
    params = config.params
    rows = []
    per_eps = {}
    for eps in config.epsilons:
        tag = epsilon_tag(eps)
        grid = _make_grid(config, eps)
        U0, cloud, _ = _build_datum(config, grid)
        parts = project_modes(config.profile, U0, workers=config.threads)
        recon = [reconstruct_mode(config.profile, p, workers=config.threads)
                 for p in parts]
        total = StateField(grid, recon[0].values + recon[1].values
                           + recon[2].values)
        norm0 = U0.norm()
        remainder = _state_gap(U0, total) / norm0
        fast = StateField(grid, recon[0].values + recon[2].values)
        fast_fraction = fast.norm() / norm0

        entry = {"epsilon": eps, "roundtrip_remainder": remainder,
                 "fast_fraction": fast_fraction,
                 "rossby_mass_fraction": cloud.rossby_mass_fraction()}
        if params["check_evolution"]:
            slow0 = recon[1]
            t = params["t_final"] / eps
            ws = EvolveWorkspace(config.profile, grid, workers=config.threads)
            full_t = ws.evolve_times(slow0, [t], branch="full")[0]
            slow_t = ws.evolve_times(slow0, [t], branch="slow")[0]
            entry["evolution_gap"] = _state_gap(full_t, slow_t) / slow0.norm()
            entry["fast_content"] = ws.project_fast(slow0).norm() / slow0.norm()
        per_eps[tag] = entry
        rows.append((eps, remainder, fast_fraction,
                     entry.get("evolution_gap", float("nan")),
                     entry.get("fast_content", float("nan"))))

    artifacts = []
    write_csv(os.path.join(out_dir, "modes.csv"),
              ("epsilon", "roundtrip_remainder", "fast_fraction",
               "evolution_gap", "fast_content"), rows)
    artifacts.append("modes.csv")

    summary = {"scenario": "modes", "per_epsilon": per_eps}
    if len(rows) >= 2:
        es = np.log([r[0] for r in rows])
        summary["roundtrip_slope"] = _fit_slope(es, [r[1] for r in rows])
        if params["check_evolution"]:
            summary["evolution_gap_slope"] = _fit_slope(es, [r[3] for r in rows])
    write_json(os.path.join(out_dir, "summary.json"), summary)
    artifacts.append("summary.json")
    return artifacts, summary


def _state_gap(a, b):
    return StateField(a.grid, a.values - b.values).norm()


def _fit_slope(log_x, values):
    y = np.log(np.maximum(np.abs(np.asarray(values, dtype=float)), 1e-300))
    return float(np.polyfit(np.asarray(log_x, dtype=float), y, 1)[0])


def shifted_level_fit(epsilons, diffs_by_k):
    """Joint per-level fit diff = mu_k eps + c_k eps^2; returns the fit.

    Removing only the fitted linear part isolates the genuinely
    quadratic remainder; fitting mu_k alone against quadratic data would
    steal part of the eps^2 signal and corrupt the convergence rate.
    With a single epsilon the shift is indeterminate and mu_k is 0.
    """
    eps = np.asarray(epsilons, dtype=float)
    fit = {}
    for k, diffs in diffs_by_k.items():
        d = np.asarray(diffs, dtype=float)
        if len(eps) >= 2:
            A = np.stack([eps, eps ** 2], axis=1)
            (mu, c), *_ = np.linalg.lstsq(A, d, rcond=None)
        else:
            mu, c = 0.0, float(d[0] / eps[0] ** 2)
        fit[k] = {"mu": float(mu), "c": float(c),
                  "shifted": [float(v) for v in d - mu * eps]}
    return fit


def _run_spectrum(config, out_dir):
    params = config.params
    artifacts = []
    per_eps = {}
    diffs_by_k = {k: [] for k in range(params["k_max"])}
    for eps in config.epsilons:
        tag = epsilon_tag(eps)
        table = bohr_sommerfeld_levels(
            config.profile, params["xi1"], eps,
            k_range=range(params["k_max"]), branch=params["branch"])
        name = f"spectrum_eps{tag}.csv"
        write_csv(os.path.join(out_dir, name),
                  ("k", "lambda_direct", "lambda_bs", "diff"), table.rows())
        artifacts.append(name)
        for k, ld, lb in table.eigenvalues:
            diffs_by_k[k].append(ld - lb)

        rep = scalar_residual_check(
            config.profile, params["xi1"], eps,
            n_modes=params["residual_modes"],
            off_spectrum_shift=params["off_spectrum_shift"])
        rname = f"residual_eps{tag}.json"
        write_json(os.path.join(out_dir, rname), rep.as_dict())
        artifacts.append(rname)
        per_eps[tag] = {
            "epsilon": eps,
            "max_diff": max(abs(ld - lb) for _, ld, lb in table.eigenvalues),
            "max_residual": max(r for _, _, r in rep.entries),
            "off_spectrum_residual": rep.off_spectrum_residual,
        }

    fit = shifted_level_fit(config.epsilons, diffs_by_k)
    summary = {"scenario": "spectrum", "xi1": params["xi1"],
               "branch": params["branch"], "per_epsilon": per_eps,
               "level_fit": {str(k): v for k, v in fit.items()}}
    if len(config.epsilons) >= 2:
        log_e = np.log(config.epsilons)
        shifted_max = [max(abs(fit[k]["shifted"][i]) for k in fit)
                       for i in range(len(config.epsilons))]
        raw_max = [per_eps[epsilon_tag(e)]["max_diff"]
                   for e in config.epsilons]
        res_max = [per_eps[epsilon_tag(e)]["max_residual"]
                   for e in config.epsilons]
        summary["shifted_diff_slope"] = _fit_slope(log_e, shifted_max)
        summary["raw_diff_slope"] = _fit_slope(log_e, raw_max)
        summary["residual_slope"] = _fit_slope(log_e, res_max)
    write_json(os.path.join(out_dir, "summary.json"), summary)
    artifacts.append("summary.json")
    return artifacts, summary


_ENGINES = {
    "evolve": _run_evolve,
    "rays": _run_rays,
    "lambda": _run_lambda,
    "modes": _run_modes,
    "spectrum": _run_spectrum,
}


def run_config(config, out_dir=None):
    """Execute one scenario run; returns the manifest dict.

    The manifest is written last, after all artifacts are hashed, so a
    directory with no manifest is by construction an incomplete run.
    """
    if config.scenario == "report":
        from .report import build_report
        return build_report(config.params["runs"], out_dir or config.out,
                            config=config)
    engine = _ENGINES.get(config.scenario)
    if engine is None:
        raise ConfigError(f"scenario {config.scenario!r} has no engine")
    out = out_dir or config.out
    try:
        os.makedirs(out, exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create output dir {out}: {exc}")
    try:
        artifacts, _ = engine(config, out)
    except (ConfigError, IoError, ManifestMismatch):
        raise
    except RossbytrapError as exc:
        raise ComputeError(
            f"{config.scenario}: {type(exc).__name__}: {exc}") from exc
    except (np.linalg.LinAlgError, FloatingPointError, ZeroDivisionError) as exc:
        raise ComputeError(f"{config.scenario}: {exc}") from exc
    return write_manifest(out, config.scenario, config.raw, artifacts,
                          extra={"epsilons": list(config.epsilons),
                                 "seed": config.seed})
