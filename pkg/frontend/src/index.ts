#!/usr/bin/env node
/** CLI: sicra-figures --in <csv_dir> --out <img_dir> */

import { renderAll } from "./render.js";
import { SchemaError } from "./schema.js";

function parseArgs(argv: string[]): { inDir: string; outDir: string } {
  let inDir: string | undefined;
  let outDir: string | undefined;
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    if (arg === "--in") inDir = argv[++i];
    else if (arg === "--out") outDir = argv[++i];
    else if (arg === "--help" || arg === "-h") {
      console.log("usage: sicra-figures --in <csv_dir> --out <img_dir>");
      process.exit(0);
    } else {
      console.error(`unknown argument: ${arg}`);
      process.exit(2);
    }
  }
  if (!inDir || !outDir) {
    console.error("usage: sicra-figures --in <csv_dir> --out <img_dir>");
    process.exit(2);
  }
  return { inDir, outDir };
}

const { inDir, outDir } = parseArgs(process.argv.slice(2));
try {
  const figures = renderAll(inDir, outDir);
  for (const fig of figures) {
    console.log(`${fig.name} (${fig.metric}) -> ${fig.path}`);
  }
} catch (err) {
  if (err instanceof SchemaError) {
    console.error(`error: ${err.message}`);
    process.exit(1);
  }
  throw err;
}
