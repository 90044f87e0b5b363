/**
 * Reader for the sweep results CSV contract.
 *
 * The file carries '#'-prefixed metadata lines followed by one header row
 * and one record per (scheme, source, S) aggregate.
 */

import { readFileSync } from "fs";
import Papa from "papaparse";

export interface ResultRow {
  scheme: string;
  source: string;
  S_seconds: number;
  [metric: string]: string | number | boolean;
}

export interface ResultsTable {
  rows: ResultRow[];
  columns: string[];
  meta: Record<string, string>;
}

export class SchemaError extends Error {}

export function parseResultsCsv(text: string, name = "results.csv"): ResultsTable {
  const meta: Record<string, string> = {};
  const dataLines: string[] = [];
  for (const line of text.split(/\r?\n/)) {
    if (line.startsWith("#")) {
      const body = line.slice(1).trim();
      const eq = body.indexOf("=");
      if (eq > 0) meta[body.slice(0, eq).trim()] = body.slice(eq + 1).trim();
      continue;
    }
    if (line.trim().length > 0) dataLines.push(line);
  }
  if (dataLines.length === 0) {
    throw new SchemaError(`${name}: empty CSV (no header row)`);
  }
  const parsed = Papa.parse<Record<string, string>>(dataLines.join("\n"), {
    header: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    throw new SchemaError(`${name}: ${parsed.errors[0].message}`);
  }
  const columns = parsed.meta.fields ?? [];
  const rows = parsed.data.map((record) => {
    const row: ResultRow = { scheme: "", source: "", S_seconds: NaN };
    for (const [key, value] of Object.entries(record)) {
      if (key === "scheme" || key === "source") row[key] = value;
      else if (key === "censored_flag") row[key] = value === "1";
      else row[key] = Number(value);
    }
    return row;
  });
  if (rows.length === 0) {
    throw new SchemaError(`${name}: empty CSV (no data rows)`);
  }
  return { rows, columns, meta };
}

export function loadResults(path: string): ResultsTable {
  return parseResultsCsv(readFileSync(path, "utf8"), path);
}

export function requireColumns(table: ResultsTable, needed: string[], name: string): void {
  for (const column of needed) {
    if (!table.columns.includes(column)) {
      throw new SchemaError(`${name}: missing column '${column}'`);
    }
  }
}
