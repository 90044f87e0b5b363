import { createHash } from "crypto";
import { mkdtempSync, readFileSync, readdirSync } from "fs";
import { tmpdir } from "os";
import { join } from "path";
import { describe, expect, it } from "vitest";

import { FIGURES } from "../src/figures.js";
import { renderAll } from "../src/render.js";
import { parseResultsCsv, SchemaError } from "../src/schema.js";
import { renderFigure } from "../src/svg.js";

const FIXTURES = join(__dirname, "fixtures");

function tmpOut(): string {
  return mkdtempSync(join(tmpdir(), "sicra-figs-"));
}

function figureMeta(svg: string): any {
  const match = svg.match(/<metadata id="figure-meta">(.*?)<\/metadata>/s);
  expect(match).not.toBeNull();
  return JSON.parse(match![1]);
}

function seriesGroup(svg: string, scheme: string, source: string): string {
  const re = new RegExp(
    `<g class="series" data-scheme="${scheme}" data-source="${source}".*?</g>`,
    "s",
  );
  const match = svg.match(re);
  expect(match, `${scheme}/${source} series missing`).not.toBeNull();
  return match![0];
}

describe("renderAll", () => {
  it("emits exactly five figures named after the metrics", () => {
    const out = tmpOut();
    const rendered = renderAll(FIXTURES, out);
    expect(rendered).toHaveLength(5);
    const files = readdirSync(out).sort();
    expect(files).toEqual([
      "fig1_pdr.svg",
      "fig2_access_delay.svg",
      "fig3_throughput.svg",
      "fig4_normalized_throughput.svg",
      "fig5_aoi.svg",
    ]);
    expect(rendered.map((f) => f.metric)).toEqual([
      "pdr",
      "mean_access_delay_s",
      "throughput_bps",
      "normalized_throughput",
      "mean_aoi_s",
    ]);
  });

  it("never mutates its input directory", () => {
    const before = createHash("sha256")
      .update(readFileSync(join(FIXTURES, "results.csv")))
      .digest("hex");
    renderAll(FIXTURES, tmpOut());
    const after = createHash("sha256")
      .update(readFileSync(join(FIXTURES, "results.csv")))
      .digest("hex");
    expect(after).toBe(before);
  });

  it("embeds the plotted series names in figure metadata", () => {
    const out = tmpOut();
    renderAll(FIXTURES, out);
    for (const spec of FIGURES) {
      const svg = readFileSync(join(out, `${spec.name}.svg`), "utf8");
      const meta = figureMeta(svg);
      expect(meta.metric).toBe(spec.metric);
      const names = meta.series.map((s: any) => `${s.scheme}/${s.source}`).sort();
      expect(names).toEqual(["adaptive/sim", "fixed/analytic", "fixed/sim"]);
    }
  });

  it("follows the line-style conventions", () => {
    const out = tmpOut();
    renderAll(FIXTURES, out);
    const svg = readFileSync(join(out, "fig1_pdr.svg"), "utf8");
    const meta = figureMeta(svg);
    const byName = Object.fromEntries(
      meta.series.map((s: any) => [`${s.scheme}/${s.source}`, s]),
    );
    expect(byName["fixed/analytic"].line).toBe("solid");
    expect(byName["fixed/sim"].line).toBe("solid");
    expect(byName["adaptive/sim"].line).toBe("dashed");
    expect(byName["adaptive/sim"].marker).toBe("circle");
    expect(byName["fixed/analytic"].error_bars).toBe(false);
    expect(byName["fixed/sim"].error_bars).toBe(true);
    expect(byName["adaptive/sim"].error_bars).toBe(true);

    const adaptive = seriesGroup(svg, "adaptive", "sim");
    expect(adaptive).toContain("stroke-dasharray");
    expect(adaptive).toContain("<circle");
    expect(adaptive).toContain('class="errorbar"');
    const analytic = seriesGroup(svg, "fixed", "analytic");
    expect(analytic).not.toContain("stroke-dasharray");
    expect(analytic).not.toContain("errorbar");
    const sim = seriesGroup(svg, "fixed", "sim");
    expect(sim).not.toContain("stroke-dasharray");
    expect(sim).toContain('class="errorbar"');
  });

  it("flags censored points visually and in metadata", () => {
    const out = tmpOut();
    renderAll(FIXTURES, out);
    const svg = readFileSync(join(out, "fig5_aoi.svg"), "utf8");
    const meta = figureMeta(svg);
    const adaptive = meta.series.find((s: any) => s.scheme === "adaptive");
    expect(adaptive.censored_points).toBe(1);
    expect(seriesGroup(svg, "adaptive", "sim")).toContain('class="marker censored"');
  });
});

describe("schema errors", () => {
  it("names a missing column", () => {
    const text = readFileSync(join(FIXTURES, "results.csv"), "utf8");
    const noPdr = text
      .split("\n")
      .map((line) => (line.startsWith("#") ? line : line.replace(/(^|,)pdr(,|$)/, "$1pdr_renamed$2")))
      .join("\n");
    const table = parseResultsCsv(noPdr);
    expect(() => renderFigure(table, FIGURES[0])).toThrowError(/missing column 'pdr'/);
  });

  it("rejects an empty CSV", () => {
    expect(() => parseResultsCsv("# only=comments\n")).toThrowError(SchemaError);
    expect(() => parseResultsCsv("")).toThrowError(/empty CSV/);
  });

  it("rejects a directory without results.csv", () => {
    expect(() => renderAll(tmpOut(), tmpOut())).toThrowError(/no results.csv/);
  });
});
