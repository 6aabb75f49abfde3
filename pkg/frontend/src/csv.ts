/**
 * Strict parsing of the numeric CSVs the predcp CLI emits: a header row of
 * plain column names and unquoted numeric cells.  Schema mismatches raise
 * errors that name the missing column, since that is the question a user
 * actually has when a render fails.
 */

import { readFileSync } from "node:fs";

export interface Table {
  columns: string[];
  rows: number[][];
  /** column values by name */
  col(name: string): number[];
}

export class SchemaError extends Error {}

export function parseCsv(text: string, source = "<string>"): Table {
  const lines = text.trim().split(/\r?\n/);
  if (lines.length < 2) {
    throw new SchemaError(`${source}: expected a header row plus data rows`);
  }
  const columns = lines[0].split(",").map((c) => c.trim());
  const rows: number[][] = [];
  for (let i = 1; i < lines.length; i++) {
    const cells = lines[i].split(",");
    if (cells.length !== columns.length) {
      throw new SchemaError(
        `${source}:${i + 1}: expected ${columns.length} cells, got ${cells.length}`,
      );
    }
    const row = cells.map((c) => Number(c));
    if (row.some((v) => Number.isNaN(v))) {
      throw new SchemaError(`${source}:${i + 1}: non-numeric cell`);
    }
    rows.push(row);
  }
  return {
    columns,
    rows,
    col(name: string): number[] {
      const k = columns.indexOf(name);
      if (k < 0) {
        throw new SchemaError(
          `${source}: missing column "${name}" (have: ${columns.join(", ")})`,
        );
      }
      return rows.map((r) => r[k]);
    },
  };
}

export function loadCsv(path: string): Table {
  return parseCsv(readFileSync(path, "utf8"), path);
}

/** Require exactly one of the given column names to be present; return it. */
export function pickColumn(table: Table, candidates: string[], source: string): string {
  const hit = candidates.filter((c) => table.columns.includes(c));
  if (hit.length === 0) {
    throw new SchemaError(
      `${source}: missing column; expected one of "${candidates.join('", "')}" ` +
        `(have: ${table.columns.join(", ")})`,
    );
  }
  return hit[0];
}
