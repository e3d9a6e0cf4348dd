/**
 * CSV loading with explicit column contracts.
 *
 * The figure scripts are read-only consumers of run output tables; any
 * missing column is a schema violation, reported by name, rather than a
 * silently empty plot.
 */

import { readFileSync } from "node:fs";
import Papa from "papaparse";

export class SchemaError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "SchemaError";
  }
}

export interface Table {
  /** Source path, used in error messages and derived labels. */
  path: string;
  header: string[];
  rows: string[][];
}

export function readTable(path: string): Table {
  const text = readFileSync(path, "utf-8").trim();
  if (text === "") {
    throw new SchemaError(`${path}: empty table`);
  }
  const parsed = Papa.parse<string[]>(text, { delimiter: "," });
  if (parsed.errors.length > 0) {
    const first = parsed.errors[0];
    throw new SchemaError(`${path}: cannot parse CSV (${first?.message})`);
  }
  const data = parsed.data;
  if (data.length === 0 || data[0] === undefined) {
    throw new SchemaError(`${path}: empty table`);
  }
  return { path, header: data[0], rows: data.slice(1) };
}

/** Indices of the named columns; throws SchemaError listing any absent. */
export function requireColumns(table: Table, names: string[]): number[] {
  const missing = names.filter((n) => !table.header.includes(n));
  if (missing.length > 0) {
    throw new SchemaError(
      `${table.path}: missing column${missing.length > 1 ? "s" : ""} ` +
        `${missing.join(", ")} (header: ${table.header.join(", ")})`,
    );
  }
  return names.map((n) => table.header.indexOf(n));
}

export function numberAt(table: Table, row: string[], col: number): number {
  const raw = row[col];
  const value = Number(raw);
  if (raw === undefined || raw === "" || Number.isNaN(value)) {
    throw new SchemaError(
      `${table.path}: non-numeric value ${JSON.stringify(raw)} in column ` +
        `${table.header[col]}`,
    );
  }
  return value;
}
