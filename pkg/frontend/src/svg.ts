/**
 * Standalone SVG rendering of one metric-vs-S figure.
 *
 * Conventions: the fixed scheme is drawn with solid lines, the adaptive
 * scheme dashed with circle markers; simulation series carry error bars,
 * the closed-form curve does not.  Censored points are drawn hollow.
 * Every figure embeds a machine-readable <metadata> block naming the
 * plotted series.
 */

import { scaleLinear, scaleLog } from "d3-scale";
import type { FigureSpec } from "./figures.js";
import { ResultRow, ResultsTable, SchemaError, requireColumns } from "./schema.js";

const WIDTH = 760;
const HEIGHT = 500;
const MARGIN = { left: 72, right: 24, top: 24, bottom: 56 };
const BLUE = "#1f77b4";
const DARK = "#17446f";

interface SeriesStyle {
  scheme: string;
  source: string;
  stroke: string;
  dash: string | null;
  marker: "circle" | "square" | "none";
  errorBars: boolean;
  label: string;
}

const SERIES_ORDER: SeriesStyle[] = [
  {
    scheme: "fixed",
    source: "analytic",
    stroke: DARK,
    dash: null,
    marker: "none",
    errorBars: false,
    label: "fixed (closed form)",
  },
  {
    scheme: "fixed",
    source: "sim",
    stroke: BLUE,
    dash: null,
    marker: "square",
    errorBars: true,
    label: "fixed (simulation)",
  },
  {
    scheme: "adaptive",
    source: "sim",
    stroke: BLUE,
    dash: "6 4",
    marker: "circle",
    errorBars: true,
    label: "adaptive (simulation)",
  },
];

interface Point {
  s: number;
  value: number;
  stderr: number;
  censored: boolean;
}

function seriesPoints(rows: ResultRow[], spec: FigureSpec, style: SeriesStyle): Point[] {
  const factor = spec.yFactor ?? 1.0;
  return rows
    .filter((r) => r.scheme === style.scheme && r.source === style.source)
    .map((r) => ({
      s: r.S_seconds,
      value: (r[spec.metric] as number) * factor,
      stderr: (r[spec.stderr] as number) * factor,
      censored: Boolean(r.censored_flag),
    }))
    .filter((p) => Number.isFinite(p.value))
    .sort((a, b) => a.s - b.s);
}

function fmtTick(value: number): string {
  if (value >= 1000 || value < 1e-3) return value.toExponential(0);
  return Number(value.toPrecision(3)).toString();
}

export function renderFigure(table: ResultsTable, spec: FigureSpec): string {
  requireColumns(table, ["scheme", "source", "S_seconds", spec.metric, spec.stderr], spec.name);

  const series = SERIES_ORDER.map((style) => ({
    style,
    points: seriesPoints(table.rows, spec, style),
  })).filter((s) => s.points.length > 0);
  if (series.length === 0) {
    throw new SchemaError(`${spec.name}: no plottable series in CSV`);
  }

  const allPoints = series.flatMap((s) => s.points);
  const xs = allPoints.map((p) => p.s);
  const positive = allPoints.filter((p) => p.value > 0);
  const values =
    spec.yScale === "log" ? positive.map((p) => p.value) : allPoints.map((p) => p.value);
  const x = scaleLog()
    .domain([Math.min(...xs), Math.max(...xs)])
    .range([MARGIN.left, WIDTH - MARGIN.right]);
  const lo = Math.min(...values);
  const hi = Math.max(...values);
  const y =
    spec.yScale === "log"
      ? scaleLog()
          .domain([lo / 1.3, hi * 1.3])
          .range([HEIGHT - MARGIN.bottom, MARGIN.top])
      : scaleLinear()
          .domain([Math.min(0, lo), hi * 1.08])
          .range([HEIGHT - MARGIN.bottom, MARGIN.top])
          .nice();

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="Helvetica, Arial, sans-serif">`,
  );
  const metadata = {
    metric: spec.metric,
    x_axis: "S_seconds",
    y_scale: spec.yScale,
    series: series.map((s) => ({
      scheme: s.style.scheme,
      source: s.style.source,
      label: s.style.label,
      line: s.style.dash ? "dashed" : "solid",
      marker: s.style.marker,
      error_bars: s.style.errorBars,
      points: s.points.length,
      censored_points: s.points.filter((p) => p.censored).length,
    })),
  };
  parts.push(`<metadata id="figure-meta">${JSON.stringify(metadata)}</metadata>`);
  parts.push(`<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`);

  // axes and grid
  const axis: string[] = [`<g class="axes" stroke="#999" stroke-width="1" font-size="12">`];
  for (const tick of x.ticks(8)) {
    const px = x(tick);
    axis.push(
      `<line x1="${px.toFixed(1)}" y1="${MARGIN.top}" x2="${px.toFixed(1)}" y2="${
        HEIGHT - MARGIN.bottom
      }" stroke="#e0e0e0"/>`,
    );
    axis.push(
      `<text x="${px.toFixed(1)}" y="${HEIGHT - MARGIN.bottom + 18}" fill="#333" stroke="none" text-anchor="middle">${fmtTick(tick)}</text>`,
    );
  }
  const yTicks = spec.yScale === "log" ? y.ticks(6) : (y as any).ticks(8);
  for (const tick of yTicks) {
    const py = y(tick);
    axis.push(
      `<line x1="${MARGIN.left}" y1="${py.toFixed(1)}" x2="${WIDTH - MARGIN.right}" y2="${py.toFixed(1)}" stroke="#e0e0e0"/>`,
    );
    axis.push(
      `<text x="${MARGIN.left - 8}" y="${(py + 4).toFixed(1)}" fill="#333" stroke="none" text-anchor="end">${fmtTick(tick)}</text>`,
    );
  }
  axis.push(
    `<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${WIDTH - MARGIN.left - MARGIN.right}" height="${
      HEIGHT - MARGIN.top - MARGIN.bottom
    }" fill="none" stroke="#333"/>`,
  );
  axis.push(
    `<text x="${(MARGIN.left + WIDTH - MARGIN.right) / 2}" y="${HEIGHT - 12}" fill="#111" stroke="none" text-anchor="middle" font-size="14">Mean message generation time S [s]</text>`,
  );
  axis.push(
    `<text transform="translate(16 ${(HEIGHT - MARGIN.bottom + MARGIN.top) / 2}) rotate(-90)" fill="#111" stroke="none" text-anchor="middle" font-size="14">${spec.yLabel}</text>`,
  );
  axis.push("</g>");
  parts.push(axis.join(""));

  // data series
  for (const { style, points } of series) {
    const plottable = points.filter((p) => spec.yScale !== "log" || p.value > 0);
    const group: string[] = [
      `<g class="series" data-scheme="${style.scheme}" data-source="${style.source}" stroke="${style.stroke}" fill="${style.stroke}">`,
    ];
    const path = plottable
      .map((p, i) => `${i === 0 ? "M" : "L"}${x(p.s).toFixed(2)} ${y(p.value).toFixed(2)}`)
      .join(" ");
    const dash = style.dash ? ` stroke-dasharray="${style.dash}"` : "";
    group.push(`<path d="${path}" fill="none" stroke-width="1.8"${dash}/>`);
    for (const p of plottable) {
      const px = x(p.s);
      const py = y(p.value);
      if (style.errorBars && Number.isFinite(p.stderr) && p.stderr > 0) {
        const yHi = y(p.value + p.stderr);
        const yLo = spec.yScale === "log" && p.value - p.stderr <= 0 ? py : y(p.value - p.stderr);
        group.push(
          `<line class="errorbar" x1="${px.toFixed(2)}" y1="${yLo.toFixed(2)}" x2="${px.toFixed(2)}" y2="${yHi.toFixed(2)}" stroke-width="1.2"/>`,
          `<line class="errorbar" x1="${(px - 3).toFixed(2)}" y1="${yHi.toFixed(2)}" x2="${(px + 3).toFixed(2)}" y2="${yHi.toFixed(2)}" stroke-width="1.2"/>`,
          `<line class="errorbar" x1="${(px - 3).toFixed(2)}" y1="${yLo.toFixed(2)}" x2="${(px + 3).toFixed(2)}" y2="${yLo.toFixed(2)}" stroke-width="1.2"/>`,
        );
      }
      const fill = p.censored ? "white" : style.stroke;
      const klass = p.censored ? "marker censored" : "marker";
      if (style.marker === "circle") {
        group.push(
          `<circle class="${klass}" cx="${px.toFixed(2)}" cy="${py.toFixed(2)}" r="3.4" fill="${fill}" stroke-width="1.4"/>`,
        );
      } else if (style.marker === "square") {
        group.push(
          `<rect class="${klass}" x="${(px - 3).toFixed(2)}" y="${(py - 3).toFixed(2)}" width="6" height="6" fill="${fill}" stroke-width="1.4"/>`,
        );
      }
    }
    group.push("</g>");
    parts.push(group.join(""));
  }

  // legend
  const legend: string[] = [`<g class="legend" font-size="13">`];
  series.forEach(({ style }, i) => {
    const ly = MARGIN.top + 16 + i * 20;
    const lx = MARGIN.left + 14;
    const dash = style.dash ? ` stroke-dasharray="${style.dash}"` : "";
    legend.push(
      `<line x1="${lx}" y1="${ly}" x2="${lx + 34}" y2="${ly}" stroke="${style.stroke}" stroke-width="1.8"${dash}/>`,
    );
    if (style.marker === "circle") {
      legend.push(`<circle cx="${lx + 17}" cy="${ly}" r="3.4" fill="${style.stroke}"/>`);
    } else if (style.marker === "square") {
      legend.push(
        `<rect x="${lx + 14}" y="${ly - 3}" width="6" height="6" fill="${style.stroke}"/>`,
      );
    }
    legend.push(`<text x="${lx + 42}" y="${ly + 4}" fill="#111">${style.label}</text>`);
  });
  legend.push("</g>");
  parts.push(legend.join(""));

  parts.push("</svg>");
  return parts.join("\n");
}
