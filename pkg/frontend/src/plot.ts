/**
 * Log-log SVG renderer for sweep error curves.
 *
 * Epsilon decreases from left to right (the sliver limit is on the right).
 * Rows whose status is not "ok" become gaps in the polylines.  Optional
 * overlays: an eps^(-1/2) slope guide and vertical dash-dot lines at the
 * dof-drop offsets.
 */

import { SERIES_COLUMNS, SeriesName, SweepData, seriesValue } from "./csv.js";
import { dofDropMarkers } from "./markers.js";

export interface PlotSpec {
  data: SweepData;
  series: SeriesName[];
  markers: boolean;
  guide: boolean;
  title?: string;
  width?: number;
  height?: number;
}

const COLORS: Record<SeriesName, string> = {
  energy: "#1f77b4",
  h1: "#d62728",
  l2: "#2ca02c",
};

const MARGIN = { top: 36, right: 24, bottom: 48, left: 64 };

export class LogScale {
  private readonly a: number;
  private readonly b: number;

  constructor(
    readonly lo: number,
    readonly hi: number,
    readonly rangeLo: number,
    readonly rangeHi: number,
  ) {
    if (!(lo > 0) || !(hi > 0) || lo === hi) {
      throw new Error(`log scale needs a positive nondegenerate domain, got [${lo}, ${hi}]`);
    }
    this.a = (rangeHi - rangeLo) / (Math.log10(hi) - Math.log10(lo));
    this.b = rangeLo - this.a * Math.log10(lo);
  }

  map(x: number): number {
    return this.a * Math.log10(x) + this.b;
  }

  ticks(): number[] {
    const lo = Math.ceil(Math.log10(Math.min(this.lo, this.hi)));
    const hi = Math.floor(Math.log10(Math.max(this.lo, this.hi)));
    const out: number[] = [];
    for (let e = lo; e <= hi; e++) {
      out.push(Number(`1e${e}`));
    }
    return out;
  }
}

function fmtPow10(v: number): string {
  const e = Math.log10(v);
  return Number.isInteger(e) ? `1e${e}` : v.toPrecision(2);
}

function polylineSegments(points: Array<[number, number] | null>): string[] {
  const paths: string[] = [];
  let current: string[] = [];
  const flush = () => {
    if (current.length > 1) {
      paths.push(`M${current.join("L")}`);
    }
    current = [];
  };
  for (const p of points) {
    if (p === null) {
      flush();
    } else {
      current.push(`${p[0].toFixed(2)},${p[1].toFixed(2)}`);
    }
  }
  flush();
  return paths;
}

export function renderPlot(spec: PlotSpec): string {
  if (spec.series.length === 0) {
    throw new Error("select at least one series");
  }
  for (const s of spec.series) {
    if (!(s in SERIES_COLUMNS)) {
      throw new Error(`unknown series '${s}'`);
    }
  }
  const width = spec.width ?? 720;
  const height = spec.height ?? 480;
  const rows = spec.data.rows;
  const okRows = rows.filter((r) => r.status === "ok");
  if (okRows.length === 0) {
    throw new Error("no ok rows to plot");
  }

  const epsValues = rows.map((r) => r.epsilon);
  const errValues = okRows.flatMap((r) =>
    spec.series.map((s) => seriesValue(r, s)),
  ).filter((v) => v > 0);
  const x = new LogScale(
    Math.max(...epsValues),
    Math.min(...epsValues),
    MARGIN.left,
    width - MARGIN.right,
  );
  const y = new LogScale(
    Math.min(...errValues) / 1.5,
    Math.max(...errValues) * 1.5,
    height - MARGIN.bottom,
    MARGIN.top,
  );

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}" font-family="sans-serif" font-size="12">`,
  );
  parts.push(`<rect width="${width}" height="${height}" fill="white"/>`);

  for (const t of x.ticks()) {
    const px = x.map(t);
    parts.push(
      `<line x1="${px.toFixed(2)}" y1="${MARGIN.top}" x2="${px.toFixed(2)}" y2="${height - MARGIN.bottom}" stroke="#eee"/>`,
      `<text x="${px.toFixed(2)}" y="${height - MARGIN.bottom + 18}" text-anchor="middle">${fmtPow10(t)}</text>`,
    );
  }
  for (const t of y.ticks()) {
    const py = y.map(t);
    parts.push(
      `<line x1="${MARGIN.left}" y1="${py.toFixed(2)}" x2="${width - MARGIN.right}" y2="${py.toFixed(2)}" stroke="#eee"/>`,
      `<text x="${MARGIN.left - 8}" y="${(py + 4).toFixed(2)}" text-anchor="end">${fmtPow10(t)}</text>`,
    );
  }
  parts.push(
    `<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${width - MARGIN.left - MARGIN.right}" height="${height - MARGIN.top - MARGIN.bottom}" fill="none" stroke="#333"/>`,
    `<text x="${(width / 2).toFixed(0)}" y="${height - 12}" text-anchor="middle">geometry offset (decreasing to the right)</text>`,
    `<text transform="translate(16,${(height / 2).toFixed(0)}) rotate(-90)" text-anchor="middle">error</text>`,
  );
  if (spec.title) {
    parts.push(
      `<text x="${(width / 2).toFixed(0)}" y="22" text-anchor="middle" font-size="14">${spec.title}</text>`,
    );
  }

  if (spec.markers) {
    for (const eps of dofDropMarkers(rows)) {
      const px = x.map(eps);
      parts.push(
        `<line class="dof-drop" x1="${px.toFixed(2)}" y1="${MARGIN.top}" x2="${px.toFixed(2)}" y2="${height - MARGIN.bottom}" stroke="gray" stroke-dasharray="8 3 2 3"/>`,
      );
    }
  }

  if (spec.guide) {
    // eps^(-1/2) slope reference anchored at the median ok point
    const anchor = okRows[Math.floor(okRows.length / 2)];
    const ref = seriesValue(anchor, spec.series[0]);
    const guidePts: Array<[number, number]> = okRows.map((r) => [
      x.map(r.epsilon),
      y.map(ref * Math.sqrt(anchor.epsilon / r.epsilon)),
    ]);
    for (const d of polylineSegments(guidePts)) {
      parts.push(
        `<path class="guide" d="${d}" fill="none" stroke="#999" stroke-dasharray="5 4"/>`,
      );
    }
    parts.push(
      `<text x="${width - MARGIN.right - 4}" y="${MARGIN.top + 14}" text-anchor="end" fill="#999">slope -1/2 guide</text>`,
    );
  }

  spec.series.forEach((s, i) => {
    const pts: Array<[number, number] | null> = rows.map((r) =>
      r.status === "ok" && seriesValue(r, s) > 0
        ? [x.map(r.epsilon), y.map(seriesValue(r, s))]
        : null,
    );
    for (const d of polylineSegments(pts)) {
      parts.push(
        `<path class="series-${s}" d="${d}" fill="none" stroke="${COLORS[s]}" stroke-width="1.6"/>`,
      );
    }
    for (const p of pts) {
      if (p) {
        parts.push(
          `<circle cx="${p[0].toFixed(2)}" cy="${p[1].toFixed(2)}" r="2.4" fill="${COLORS[s]}"/>`,
        );
      }
    }
    parts.push(
      `<text x="${MARGIN.left + 8}" y="${MARGIN.top + 16 + 16 * i}" fill="${COLORS[s]}">${SERIES_COLUMNS[s]}</text>`,
    );
  });

  parts.push("</svg>");
  return parts.join("\n");
}
