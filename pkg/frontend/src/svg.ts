/**
 * Hand-rolled SVG chart: one polyline per curve, legend with solver and
 * per-iteration batch size, log-scale y by default.
 */

import type { Curve } from "./trace.js";

export interface PlotOptions {
  xAxis: "iter" | "cum_samples";
  logY: boolean;
  width?: number;
  height?: number;
  title?: string;
}

const COLORS = ["#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
const MARGIN = { top: 40, right: 30, bottom: 52, left: 72 };

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

function niceTicks(lo: number, hi: number, count = 6): number[] {
  if (!(hi > lo)) return [lo];
  const span = hi - lo;
  const step = Math.pow(10, Math.floor(Math.log10(span / count)));
  const err = (span / count) / step;
  const mult = err >= 7.5 ? 10 : err >= 3.5 ? 5 : err >= 1.5 ? 2 : 1;
  const s = step * mult;
  const ticks: number[] = [];
  for (let v = Math.ceil(lo / s) * s; v <= hi + 1e-12 * span; v += s) {
    ticks.push(v);
  }
  return ticks;
}

function logTicks(lo: number, hi: number): number[] {
  const ticks: number[] = [];
  for (let e = Math.floor(Math.log10(lo)); e <= Math.ceil(Math.log10(hi)); e++) {
    const v = Math.pow(10, e);
    if (v >= lo / 1.0001 && v <= hi * 1.0001) ticks.push(v);
  }
  return ticks.length >= 2 ? ticks : niceTicks(lo, hi);
}

function fmt(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-3) return v.toExponential(0);
  return Number(v.toPrecision(4)).toString();
}

export function renderSvg(curves: Curve[], opts: PlotOptions): string {
  const width = opts.width ?? 860;
  const height = opts.height ?? 520;
  const plotW = width - MARGIN.left - MARGIN.right;
  const plotH = height - MARGIN.top - MARGIN.bottom;

  const xOf = (r: { iter: number; cumSamples: number }) =>
    opts.xAxis === "iter" ? r.iter : r.cumSamples;

  const allRows = curves.flatMap((c) => c.rows);
  let xMin = Math.min(...allRows.map(xOf));
  let xMax = Math.max(...allRows.map(xOf));
  if (xMax === xMin) {
    xMin -= 0.5;
    xMax += 0.5;
  }

  let logY = opts.logY;
  const ys = allRows.map((r) => r.testLoss);
  if (logY && ys.some((y) => y <= 0)) {
    process.stderr.write("plot_traces: nonpositive test_loss values; falling back to linear y\n");
    logY = false;
  }
  let yMin = Math.min(...ys);
  let yMax = Math.max(...ys);
  if (yMax === yMin) {
    yMin -= 0.5;
    yMax += 0.5;
  }
  const yT = (v: number) => (logY ? Math.log10(v) : v);
  const [tMin, tMax] = [yT(yMin), yT(yMax)];

  const px = (x: number) => MARGIN.left + ((x - xMin) / (xMax - xMin)) * plotW;
  const py = (y: number) => MARGIN.top + plotH - ((yT(y) - tMin) / (tMax - tMin || 1)) * plotH;

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}" font-family="Helvetica, Arial, sans-serif">`,
  );
  parts.push(`<rect width="${width}" height="${height}" fill="white"/>`);
  if (opts.title) {
    parts.push(
      `<text x="${width / 2}" y="22" text-anchor="middle" font-size="15">${esc(opts.title)}</text>`,
    );
  }

  // axes + grid
  const xTicks = niceTicks(xMin, xMax);
  const yTicks = logY ? logTicks(yMin, yMax) : niceTicks(yMin, yMax);
  for (const t of xTicks) {
    const x = px(t);
    parts.push(`<line x1="${x}" y1="${MARGIN.top}" x2="${x}" y2="${MARGIN.top + plotH}" stroke="#e5e5e5"/>`);
    parts.push(
      `<text x="${x}" y="${MARGIN.top + plotH + 18}" text-anchor="middle" font-size="11">${fmt(t)}</text>`,
    );
  }
  for (const t of yTicks) {
    const y = py(t);
    parts.push(`<line x1="${MARGIN.left}" y1="${y}" x2="${MARGIN.left + plotW}" y2="${y}" stroke="#e5e5e5"/>`);
    parts.push(
      `<text x="${MARGIN.left - 8}" y="${y + 4}" text-anchor="end" font-size="11">${fmt(t)}</text>`,
    );
  }
  parts.push(
    `<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${plotW}" height="${plotH}" fill="none" stroke="#333"/>`,
  );
  const xLabel = opts.xAxis === "iter" ? "iteration" : "cumulative samples";
  parts.push(
    `<text x="${MARGIN.left + plotW / 2}" y="${height - 14}" text-anchor="middle" font-size="13">${xLabel}</text>`,
  );
  parts.push(
    `<text x="20" y="${MARGIN.top + plotH / 2}" text-anchor="middle" font-size="13" transform="rotate(-90 20 ${MARGIN.top + plotH / 2})">test loss${logY ? " (log scale)" : ""}</text>`,
  );

  // curves
  curves.forEach((curve, i) => {
    const color = COLORS[i % COLORS.length];
    const pts = curve.rows.map((r) => `${px(xOf(r)).toFixed(2)},${py(r.testLoss).toFixed(2)}`);
    if (pts.length === 1) {
      const [x, y] = pts[0].split(",");
      parts.push(`<circle cx="${x}" cy="${y}" r="4" fill="${color}"/>`);
    } else {
      parts.push(
        `<polyline points="${pts.join(" ")}" fill="none" stroke="${color}" stroke-width="1.8"/>`,
      );
    }
  });

  // legend (solver + inferred per-iteration batch)
  curves.forEach((curve, i) => {
    const color = COLORS[i % COLORS.length];
    const y = MARGIN.top + 16 + i * 18;
    const batch = curve.samplesPerIter !== null ? `, ${curve.samplesPerIter} samples/iter` : "";
    const label = `${curve.solver} (${curve.file}${batch})`;
    parts.push(
      `<line x1="${MARGIN.left + 12}" y1="${y - 4}" x2="${MARGIN.left + 40}" y2="${y - 4}" stroke="${color}" stroke-width="2"/>`,
    );
    parts.push(
      `<text class="legend" x="${MARGIN.left + 46}" y="${y}" font-size="12">${esc(label)}</text>`,
    );
  });

  parts.push("</svg>");
  return parts.join("\n");
}
