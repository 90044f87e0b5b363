/** Batch rendering of all five figures from a sweep output directory. */

import { existsSync, mkdirSync, writeFileSync } from "fs";
import { join } from "path";
import { FIGURES } from "./figures.js";
import { loadResults, SchemaError } from "./schema.js";
import { renderFigure } from "./svg.js";

export const RESULTS_FILE = "results.csv";

export interface RenderedFigure {
  name: string;
  metric: string;
  path: string;
}

/**
 * Read `results.csv` from csvDir and write one SVG per figure into outDir.
 * Rendering is read-only over the inputs.
 */
export function renderAll(csvDir: string, outDir: string): RenderedFigure[] {
  const resultsPath = join(csvDir, RESULTS_FILE);
  if (!existsSync(resultsPath)) {
    throw new SchemaError(`no ${RESULTS_FILE} in ${csvDir}`);
  }
  const table = loadResults(resultsPath);
  mkdirSync(outDir, { recursive: true });
  const rendered: RenderedFigure[] = [];
  for (const spec of FIGURES) {
    const svg = renderFigure(table, spec);
    const path = join(outDir, `${spec.name}.svg`);
    writeFileSync(path, svg);
    rendered.push({ name: spec.name, metric: spec.metric, path });
  }
  return rendered;
}
