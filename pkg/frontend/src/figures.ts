/**
 * Figure kinds over run output tables.
 *
 * Two figures cover the headline experiments: the localized-mass decay
 * comparison ("dichotomy") and the trapped-set point cloud ("lambda").
 * Inputs are CSV files produced by the runs; this module never computes
 * physics, it only replots what the tables contain.
 */

import { basename } from "node:path";
import { writeFileSync } from "node:fs";

import { numberAt, readTable, requireColumns, SchemaError, Table } from "./schema.js";
import { lineChart, scatterChart, Series } from "./svg.js";

export type FigureKind = "dichotomy" | "lambda";

export interface FigureSpec {
  kind: FigureKind;
  /** CSV paths; concatenated when a kind accepts several. */
  inputs: string[];
  output: string;
  title?: string;
  xLabel?: string;
  yLabel?: string;
}

/**
 * Collect (label, t_slow, local_mass) from one table.
 *
 * Accepts either a merged comparison table carrying a `label` column or
 * a single-run time series, in which case the file name provides the
 * label.
 */
function dichotomySeries(table: Table): Map<string, Array<[number, number]>> {
  const out = new Map<string, Array<[number, number]>>();
  const hasLabel = table.header.includes("label");
  const [tsCol, massCol] = requireColumns(table, ["t_slow", "local_mass"]);
  const labelCol = hasLabel ? table.header.indexOf("label") : -1;
  const fallback = basename(table.path).replace(/\.csv$/, "");
  for (const row of table.rows) {
    const label = hasLabel ? (row[labelCol] ?? fallback) : fallback;
    const pts = out.get(label) ?? [];
    pts.push([numberAt(table, row, tsCol!), numberAt(table, row, massCol!)]);
    out.set(label, pts);
  }
  return out;
}

export function renderDichotomy(spec: FigureSpec): string {
  const curves = new Map<string, Array<[number, number]>>();
  for (const path of spec.inputs) {
    for (const [label, pts] of dichotomySeries(readTable(path))) {
      const existing = curves.get(label);
      if (existing) existing.push(...pts);
      else curves.set(label, pts);
    }
  }
  if (curves.size === 0) {
    throw new SchemaError("dichotomy: no data rows in the given tables");
  }
  const series: Series[] = [...curves.entries()].map(([label, pts]) => {
    const sorted = [...pts].sort((a, b) => a[0] - b[0]);
    return {
      label,
      x: sorted.map((p) => p[0]),
      y: sorted.map((p) => p[1]),
    };
  });
  return lineChart(
    series,
    {
      title: spec.title ?? "Local mass in the fixed band",
      xLabel: spec.xLabel ?? "slow time (epsilon t)",
      yLabel: spec.yLabel ?? "local mass",
    },
    { logY: true },
  );
}

export function renderLambda(spec: FigureSpec): string {
  const points: Array<{ x: number; y: number; c: number }> = [];
  for (const path of spec.inputs) {
    const table = readTable(path);
    const [x2, xi2, root] = requireColumns(table, ["x2", "xi2", "xi1_root"]);
    for (const row of table.rows) {
      points.push({
        x: numberAt(table, row, x2!),
        y: numberAt(table, row, xi2!),
        c: numberAt(table, row, root!),
      });
    }
  }
  if (points.length === 0) {
    throw new SchemaError("lambda: no data rows in the given tables");
  }
  return scatterChart(
    points,
    {
      title: spec.title ?? "Trapped set, roots of the drift",
      xLabel: spec.xLabel ?? "x2",
      yLabel: spec.yLabel ?? "xi2",
    },
    "xi1 root",
  );
}

const RENDERERS: Record<FigureKind, (spec: FigureSpec) => string> = {
  dichotomy: renderDichotomy,
  lambda: renderLambda,
};

export function figureKinds(): FigureKind[] {
  return Object.keys(RENDERERS) as FigureKind[];
}

/** Render the figure and write it to spec.output; returns the SVG text. */
export function renderFigure(spec: FigureSpec): string {
  const renderer = RENDERERS[spec.kind];
  if (renderer === undefined) {
    throw new SchemaError(
      `unknown figure kind ${JSON.stringify(spec.kind)}; ` +
        `choose from ${figureKinds().join(", ")}`,
    );
  }
  if (spec.inputs.length === 0) {
    throw new SchemaError(`${spec.kind}: no input tables given`);
  }
  const svg = renderer(spec);
  writeFileSync(spec.output, svg, "utf-8");
  return svg;
}
