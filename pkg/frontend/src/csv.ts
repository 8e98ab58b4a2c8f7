/** Minimal CSV reader for the numeric tables the pipeline emits. */

import { readFileSync } from "node:fs";

export interface Table {
  columns: string[];
  rows: string[][];
}

export function readCsv(path: string): Table {
  const text = readFileSync(path, "utf8").trim();
  if (!text) {
    throw new Error(`${path}: empty CSV`);
  }
  const lines = text.split(/\r?\n/);
  const columns = lines[0].split(",");
  const rows = lines.slice(1).map((line) => line.split(","));
  return { columns, rows };
}

/** Column values as numbers; throws with a column diagnostic when missing. */
export function numericColumn(table: Table, name: string, path: string): number[] {
  const idx = table.columns.indexOf(name);
  if (idx < 0) {
    throw new Error(
      `${path}: schema mismatch, missing column '${name}' (have: ${table.columns.join(", ")})`,
    );
  }
  return table.rows.map((r, i) => {
    const v = Number(r[idx]);
    if (!Number.isFinite(v)) {
      throw new Error(`${path}: non-numeric value '${r[idx]}' in column '${name}' row ${i + 2}`);
    }
    return v;
  });
}

export function stringColumn(table: Table, name: string, path: string): string[] {
  const idx = table.columns.indexOf(name);
  if (idx < 0) {
    throw new Error(
      `${path}: schema mismatch, missing column '${name}' (have: ${table.columns.join(", ")})`,
    );
  }
  return table.rows.map((r) => r[idx]);
}
