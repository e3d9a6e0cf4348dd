"""Assemble completed runs into comparison tables and figures.

The report is a read-only consumer: it loads run directories through
their manifests, verifies the recorded digests before trusting any
artifact, and emits merged CSV tables plus standalone SVG figures. The
output is itself a run directory with a manifest, and regenerating it
from the same inputs is byte-identical.
"""

from __future__ import annotations

import os

from .errors import ConfigError, IoError, ManifestMismatch
from .io import (atomic_write_bytes, epsilon_tag, read_csv, read_manifest,
                 sha256_file, write_csv, write_json, write_manifest)
from .svgplot import line_figure, scatter_figure


def _verified_csv(run_dir, manifest, name):
    """Read an artifact CSV after checking it against its manifest hash."""
    rec = manifest.get("artifacts", {}).get(name)
    if rec is None:
        raise IoError(f"run {run_dir} has no artifact {name}")
    path = os.path.join(run_dir, name)
    if sha256_file(path) != rec.get("sha256"):
        raise IoError(f"artifact {name} in {run_dir} does not match its "
                      "manifest digest")
    return read_csv(path)


def _columns(header, rows, names, where):
    try:
        idx = [header.index(n) for n in names]
    except ValueError:
        missing = [n for n in names if n not in header]
        raise IoError(f"{where} is missing columns {missing}")
    return [[row[i] for i in idx] for row in rows]


def _eps_label(eps):
    tag = epsilon_tag(eps)
    return f"1/{tag}" if tag.isdigit() else tag.replace("p", ".")


def _collect_evolve(runs):
    """Gather (kind, eps) -> series rows; enforce consistent epsilon sets."""
    series = {}
    eps_sets = {"trapped": set(), "untrapped": set()}
    for run_dir, manifest in runs:
        kind = (manifest.get("config", {}).get("params", {})
                .get("datum", {}).get("kind"))
        if kind not in eps_sets:
            raise IoError(f"evolve run {run_dir} has no datum kind in its "
                          "config echo")
        for eps in manifest.get("epsilons", ()):
            eps = float(eps)
            if eps in eps_sets[kind]:
                raise ManifestMismatch(
                    f"duplicate {kind} run at epsilon {eps}")
            eps_sets[kind].add(eps)
            name = f"series_eps{epsilon_tag(eps)}.csv"
            header, rows = _verified_csv(run_dir, manifest, name)
            cols = _columns(header, rows,
                            ("t", "t_slow", "local_mass", "total_mass"),
                            f"{run_dir}/{name}")
            series[(kind, eps)] = [tuple(float(v) for v in row)
                                   for row in cols]
    if eps_sets["trapped"] and eps_sets["untrapped"]:
        if eps_sets["trapped"] != eps_sets["untrapped"]:
            raise ManifestMismatch(
                "trapped and untrapped runs cover different epsilon sets: "
                f"{sorted(eps_sets['trapped'])} vs "
                f"{sorted(eps_sets['untrapped'])}")
    return series


def _emit_dichotomy(series, out_dir):
    rows = []
    curves = []
    for kind in ("trapped", "untrapped"):
        eps_list = sorted((e for (k, e) in series if k == kind), reverse=True)
        for eps in eps_list:
            data = series[(kind, eps)]
            label = f"{kind} eps={_eps_label(eps)}"
            for t, ts, loc, tot in data:
                rows.append((label, eps, t, ts, loc, tot))
            pts = [(ts, loc) for _, ts, loc, _ in data if ts > 0]
            pts.sort()
            curves.append((label, [p[0] for p in pts], [p[1] for p in pts]))
    write_csv(os.path.join(out_dir, "dichotomy.csv"),
              ("label", "epsilon", "t", "t_slow", "local_mass",
               "total_mass"), rows)
    svg = line_figure(curves, "Local mass in the fixed band",
                      "slow time (epsilon t)", "local mass", logy=True)
    atomic_write_bytes(os.path.join(out_dir, "dichotomy.svg"),
                               svg.encode("utf-8"))
    return ["dichotomy.csv", "dichotomy.svg"]


def _emit_rays(runs, out_dir):
    merged = []
    names = ("xi1", "x2", "xi2", "period", "F_time", "F_space", "F_action",
             "rel_time_space", "abs_action_space")
    for run_dir, manifest in runs:
        header, rows = _verified_csv(run_dir, manifest, "f_table.csv")
        cols = _columns(header, rows, names, f"{run_dir}/f_table.csv")
        merged.extend(tuple(float(v) for v in row) for row in cols)
    merged.sort()
    write_csv(os.path.join(out_dir, "f_table.csv"), names, merged)
    return ["f_table.csv"]


def _emit_spectrum(runs, out_dir):
    merged = []
    for run_dir, manifest in runs:
        for eps in manifest.get("epsilons", ()):
            eps = float(eps)
            name = f"spectrum_eps{epsilon_tag(eps)}.csv"
            header, rows = _verified_csv(run_dir, manifest, name)
            cols = _columns(header, rows,
                            ("k", "lambda_direct", "lambda_bs", "diff"),
                            f"{run_dir}/{name}")
            merged.extend((eps, int(float(r[0])), float(r[1]), float(r[2]),
                           float(r[3])) for r in cols)
    merged.sort(key=lambda r: (-r[0], r[1]))
    write_csv(os.path.join(out_dir, "spectrum.csv"),
              ("epsilon", "k", "lambda_direct", "lambda_bs", "diff"), merged)
    return ["spectrum.csv"]


def _emit_lambda(runs, out_dir):
    names = ("x2", "xi2", "xi1_root", "F_residual", "bracket_lo",
             "bracket_hi")
    merged = []
    for run_dir, manifest in runs:
        header, rows = _verified_csv(run_dir, manifest, "lambda_cloud.csv")
        cols = _columns(header, rows, names, f"{run_dir}/lambda_cloud.csv")
        merged.extend(tuple(float(v) for v in row) for row in cols)
    merged.sort()
    write_csv(os.path.join(out_dir, "lambda_cloud.csv"), names, merged)
    svg = scatter_figure([r[0] for r in merged], [r[1] for r in merged],
                         [r[2] for r in merged],
                         "Trapped set, roots of the drift", "x2", "xi2",
                         color_label="xi1 root")
    atomic_write_bytes(os.path.join(out_dir, "lambda_cloud.svg"),
                               svg.encode("utf-8"))
    return ["lambda_cloud.csv", "lambda_cloud.svg"]


def build_report(run_dirs, out_dir, config=None):
    """Merge completed run directories into one report directory."""
    run_dirs = [str(r) for r in run_dirs]
    if not run_dirs:
        raise ConfigError("report needs at least one run directory")
    groups = {}
    for run_dir in run_dirs:
        manifest = read_manifest(run_dir)
        groups.setdefault(manifest.get("scenario"), []).append(
            (run_dir, manifest))

    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create report dir {out_dir}: {exc}")

    artifacts = []
    sections = {}
    if "evolve" in groups:
        series = _collect_evolve(groups["evolve"])
        artifacts += _emit_dichotomy(series, out_dir)
        sections["dichotomy"] = {
            f"{kind} {_eps_label(eps)}": {
                "floor": min(loc for _, ts, loc, _ in data if ts > 0),
            }
            for (kind, eps), data in sorted(series.items())}
    if "rays" in groups:
        artifacts += _emit_rays(groups["rays"], out_dir)
        sections["rays"] = {"runs": len(groups["rays"])}
    if "spectrum" in groups:
        artifacts += _emit_spectrum(groups["spectrum"], out_dir)
        sections["spectrum"] = {"runs": len(groups["spectrum"])}
    if "lambda" in groups:
        artifacts += _emit_lambda(groups["lambda"], out_dir)
        sections["lambda"] = {"runs": len(groups["lambda"])}
    if not artifacts:
        raise ConfigError("no reportable scenarios among the given runs; "
                          f"saw {sorted(groups)}")

    summary = {"scenario": "report", "inputs": run_dirs,
               "sections": sections}
    write_json(os.path.join(out_dir, "summary.json"), summary)
    artifacts.append("summary.json")
    raw = config.raw if config is not None else {"scenario": "report",
                                                 "params": {"runs": run_dirs}}
    return write_manifest(out_dir, "report", raw, artifacts)
