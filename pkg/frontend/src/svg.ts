/**
 * Dependency-free SVG output.
 *
 * Every coordinate passes through one rounding rule and the documents
 * contain nothing run-dependent (no ids, no timestamps), so rendering
 * the same tables twice produces identical bytes.
 */

export const PALETTE = [
  "#1f77b4",
  "#d62728",
  "#2ca02c",
  "#9467bd",
  "#ff7f0e",
  "#8c564b",
] as const;

const FONT = "Helvetica, Arial, sans-serif";

const WIDTH = 720;
const HEIGHT = 480;
const MARGIN = { left: 72, right: 30, top: 44, bottom: 58 } as const;

/** Six significant digits, shortest decimal form of the rounded value. */
export function fmt(v: number): string {
  if (v === 0) return "0";
  const rounded = Number(v.toPrecision(6));
  const s = rounded.toString();
  return s === "-0" ? "0" : s;
}

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

function niceStep(span: number, target = 6): number {
  const raw = span / Math.max(target, 1);
  const mag = 10 ** Math.floor(Math.log10(raw));
  for (const mult of [1, 2, 5, 10]) {
    if (raw <= mult * mag * (1 + 1e-12)) return mult * mag;
  }
  return 10 * mag;
}

function linearTicks(lo: number, hi: number): number[] {
  if (hi <= lo) hi = lo + 1;
  const step = niceStep(hi - lo);
  const ticks: number[] = [];
  let t = Math.ceil(lo / step - 1e-9) * step;
  while (t <= hi + 1e-9 * step) {
    ticks.push(Math.abs(t) < 1e-12 * step ? 0 : t);
    t += step;
  }
  return ticks;
}

function logTicks(lo: number, hi: number): number[] {
  const d0 = Math.floor(Math.log10(lo) + 1e-12);
  const d1 = Math.ceil(Math.log10(hi) - 1e-12);
  const decades: number[] = [];
  for (let d = d0; d <= d1; d++) decades.push(10 ** d);
  const inside = (v: number) => lo / 1.001 <= v && v <= hi * 1.001;
  let ticks = decades.filter(inside);
  if (ticks.length < 3) {
    for (const d of decades) {
      for (const m of [2, 5]) if (inside(m * d)) ticks.push(m * d);
    }
    ticks = ticks.sort((a, b) => a - b);
  }
  return ticks;
}

export interface AxisOptions {
  logX?: boolean;
  logY?: boolean;
}

class Frame {
  readonly x0: number;
  readonly x1: number;
  readonly y0: number;
  readonly y1: number;
  readonly px0 = MARGIN.left;
  readonly px1 = WIDTH - MARGIN.right;
  readonly py0 = HEIGHT - MARGIN.bottom;
  readonly py1 = MARGIN.top;

  constructor(
    xlim: [number, number],
    ylim: [number, number],
    private readonly opts: AxisOptions,
  ) {
    [this.x0, this.x1] = Frame.pad(xlim, opts.logX ?? false);
    [this.y0, this.y1] = Frame.pad(ylim, opts.logY ?? false);
  }

  private static pad(
    [lo, hi]: [number, number],
    log: boolean,
  ): [number, number] {
    if (log) {
      lo = Math.max(lo, 1e-300);
      hi = Math.max(hi, lo * 1.0001);
      const llo = Math.log10(lo);
      const lhi = Math.log10(hi);
      const pad = 0.05 * (lhi - llo) || 0.5;
      return [10 ** (llo - pad), 10 ** (lhi + pad)];
    }
    if (hi <= lo) hi = lo + 1;
    const pad = 0.05 * (hi - lo);
    return [lo - pad, hi + pad];
  }

  px(x: number): number {
    const t = this.opts.logX
      ? (Math.log10(Math.max(x, 1e-300)) - Math.log10(this.x0)) /
        (Math.log10(this.x1) - Math.log10(this.x0))
      : (x - this.x0) / (this.x1 - this.x0);
    return this.px0 + t * (this.px1 - this.px0);
  }

  py(y: number): number {
    const t = this.opts.logY
      ? (Math.log10(Math.max(y, 1e-300)) - Math.log10(this.y0)) /
        (Math.log10(this.y1) - Math.log10(this.y0))
      : (y - this.y0) / (this.y1 - this.y0);
    return this.py0 + t * (this.py1 - this.py0);
  }

  xticks(): number[] {
    return this.opts.logX
      ? logTicks(this.x0, this.x1)
      : linearTicks(this.x0, this.x1);
  }

  yticks(): number[] {
    return this.opts.logY
      ? logTicks(this.y0, this.y1)
      : linearTicks(this.y0, this.y1);
  }
}

interface Labels {
  title: string;
  xLabel: string;
  yLabel: string;
}

function frameParts(ax: Frame, labels: Labels): string[] {
  const parts = [
    '<?xml version="1.0" encoding="UTF-8"?>',
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" ` +
      `height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}">`,
    `<rect x="0" y="0" width="${WIDTH}" height="${HEIGHT}" fill="#ffffff"/>`,
  ];
  for (const xv of ax.xticks()) {
    const px = fmt(ax.px(xv));
    parts.push(
      `<line x1="${px}" y1="${fmt(ax.py0)}" x2="${px}" y2="${fmt(ax.py1)}" ` +
        'stroke="#e6e6e6" stroke-width="1"/>',
      `<text x="${px}" y="${fmt(ax.py0 + 18)}" font-family="${FONT}" ` +
        'font-size="12" fill="#333333" text-anchor="middle">' +
        `${esc(fmt(xv))}</text>`,
    );
  }
  for (const yv of ax.yticks()) {
    const py = fmt(ax.py(yv));
    parts.push(
      `<line x1="${fmt(ax.px0)}" y1="${py}" x2="${fmt(ax.px1)}" y2="${py}" ` +
        'stroke="#e6e6e6" stroke-width="1"/>',
      `<text x="${fmt(ax.px0 - 6)}" y="${fmt(Number(py) + 4)}" ` +
        `font-family="${FONT}" font-size="12" fill="#333333" ` +
        `text-anchor="end">${esc(fmt(yv))}</text>`,
    );
  }
  const midX = fmt(0.5 * (ax.px0 + ax.px1));
  const midY = fmt(0.5 * (ax.py0 + ax.py1));
  parts.push(
    `<rect x="${fmt(ax.px0)}" y="${fmt(ax.py1)}" ` +
      `width="${fmt(ax.px1 - ax.px0)}" height="${fmt(ax.py0 - ax.py1)}" ` +
      'fill="none" stroke="#333333" stroke-width="1"/>',
    `<text x="${midX}" y="22" font-family="${FONT}" font-size="15" ` +
      `fill="#111111" text-anchor="middle">${esc(labels.title)}</text>`,
    `<text x="${midX}" y="${fmt(ax.py0 + 42)}" font-family="${FONT}" ` +
      `font-size="13" fill="#111111" text-anchor="middle">` +
      `${esc(labels.xLabel)}</text>`,
    `<text x="18" y="${midY}" font-family="${FONT}" font-size="13" ` +
      `fill="#111111" text-anchor="middle" ` +
      `transform="rotate(-90 18 ${midY})">${esc(labels.yLabel)}</text>`,
  );
  return parts;
}

export interface Series {
  label: string;
  x: number[];
  y: number[];
}

export function lineChart(
  series: Series[],
  labels: Labels,
  opts: AxisOptions = {},
): string {
  const cleaned = series.map((s) => {
    const pts: Array<[number, number]> = [];
    for (let i = 0; i < s.x.length; i++) {
      const x = s.x[i];
      const y = s.y[i];
      if (x === undefined || y === undefined) continue;
      if (!Number.isFinite(x) || !Number.isFinite(y)) continue;
      if (opts.logX && x <= 0) continue;
      if (opts.logY && y <= 0) continue;
      pts.push([x, y]);
    }
    return { label: s.label, pts };
  });
  const xs = cleaned.flatMap((s) => s.pts.map((p) => p[0]));
  const ys = cleaned.flatMap((s) => s.pts.map((p) => p[1]));
  const lim = (v: number[]): [number, number] =>
    v.length > 0 ? [Math.min(...v), Math.max(...v)] : [0, 1];
  const ax = new Frame(lim(xs), lim(ys), opts);
  const parts = frameParts(ax, labels);
  cleaned.forEach((s, i) => {
    const color = PALETTE[i % PALETTE.length];
    const coords = s.pts
      .map(([x, y]) => `${fmt(ax.px(x))},${fmt(ax.py(y))}`)
      .join(" ");
    if (coords.length > 0) {
      parts.push(
        `<polyline points="${coords}" fill="none" stroke="${color}" ` +
          'stroke-width="1.8"/>',
      );
    }
  });
  cleaned.forEach((s, i) => {
    const color = PALETTE[i % PALETTE.length];
    const ly = ax.py1 + 16 + 18 * i;
    const lx = ax.px1 - 170;
    parts.push(
      `<line x1="${fmt(lx)}" y1="${fmt(ly - 4)}" x2="${fmt(lx + 26)}" ` +
        `y2="${fmt(ly - 4)}" stroke="${color}" stroke-width="2.5"/>`,
      `<text x="${fmt(lx + 32)}" y="${fmt(ly)}" font-family="${FONT}" ` +
        `font-size="12" fill="#111111" text-anchor="start">` +
        `${esc(s.label)}</text>`,
    );
  });
  parts.push("</svg>");
  return parts.join("\n") + "\n";
}

const CMAP_STOPS: Array<[number, [number, number, number]]> = [
  [0.0, [68, 1, 84]],
  [0.25, [59, 82, 139]],
  [0.5, [33, 145, 140]],
  [0.75, [94, 201, 98]],
  [1.0, [253, 231, 37]],
];

function colormap(t: number): string {
  const u = Math.min(Math.max(t, 0), 1);
  for (let i = 1; i < CMAP_STOPS.length; i++) {
    const [t1, c1] = CMAP_STOPS[i]!;
    if (u <= t1) {
      const [t0, c0] = CMAP_STOPS[i - 1]!;
      const w = t1 === t0 ? 0 : (u - t0) / (t1 - t0);
      const rgb = c0.map((a, j) => Math.round(a + w * ((c1[j] ?? 0) - a)));
      return (
        "#" + rgb.map((v) => v.toString(16).padStart(2, "0")).join("")
      );
    }
  }
  const last = CMAP_STOPS[CMAP_STOPS.length - 1]![1];
  return "#" + last.map((v) => v.toString(16).padStart(2, "0")).join("");
}

export interface ScatterPoint {
  x: number;
  y: number;
  c: number;
}

export function scatterChart(
  points: ScatterPoint[],
  labels: Labels,
  colorLabel = "",
): string {
  const finite = points.filter(
    (p) => Number.isFinite(p.x) && Number.isFinite(p.y) && Number.isFinite(p.c),
  );
  const lim = (v: number[]): [number, number] =>
    v.length > 0 ? [Math.min(...v), Math.max(...v)] : [0, 1];
  const ax = new Frame(
    lim(finite.map((p) => p.x)),
    lim(finite.map((p) => p.y)),
    {},
  );
  const clo = finite.length > 0 ? Math.min(...finite.map((p) => p.c)) : 0;
  const chi = finite.length > 0 ? Math.max(...finite.map((p) => p.c)) : 1;
  const span = chi - clo;
  const parts = frameParts(ax, labels);
  for (const p of finite) {
    const t = span <= 0 ? 0.5 : (p.c - clo) / span;
    parts.push(
      `<circle cx="${fmt(ax.px(p.x))}" cy="${fmt(ax.py(p.y))}" r="3" ` +
        `fill="${colormap(t)}" fill-opacity="0.85"/>`,
    );
  }
  if (colorLabel.length > 0) {
    parts.push(
      `<text x="${fmt(ax.px1)}" y="${fmt(ax.py1 - 8)}" ` +
        `font-family="${FONT}" font-size="12" fill="#111111" ` +
        `text-anchor="end">${esc(colorLabel)} in ` +
        `[${esc(fmt(clo))}, ${esc(fmt(chi))}]</text>`,
    );
  }
  parts.push("</svg>");
  return parts.join("\n") + "\n";
}
