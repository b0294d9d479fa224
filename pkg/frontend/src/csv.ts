/**
 * Reader for the sweep CSV dialect: '#' comment lines, a header row, then
 * plain comma-separated cells (values never contain commas or quotes).
 */

import { readFileSync } from "node:fs";

export class MissingColumnError extends Error {
  constructor(public column: string, public file: string) {
    super(`missing column '${column}' in ${file}`);
  }
}

export class EmptyInputError extends Error {
  constructor(public file: string) {
    super(`no data rows in ${file}`);
  }
}

export interface Table {
  file: string;
  columns: string[];
  rows: string[][];
}

export function parseCsv(text: string, file = "<string>"): Table {
  const lines = text.split(/\r?\n/).filter((l) => l.length > 0 && !l.startsWith("#"));
  if (lines.length === 0) {
    return { file, columns: [], rows: [] };
  }
  const [head, ...rest] = lines;
  return { file, columns: head.split(","), rows: rest.map((l) => l.split(",")) };
}

export function readCsv(path: string): Table {
  return parseCsv(readFileSync(path, "utf8"), path);
}

export function columnIndex(table: Table, name: string): number {
  const i = table.columns.indexOf(name);
  if (i < 0) throw new MissingColumnError(name, table.file);
  return i;
}

/** Pull named columns; throws MissingColumnError / EmptyInputError. */
export function records(table: Table, names: string[]): Record<string, string>[] {
  const idx = names.map((n) => columnIndex(table, n));
  if (table.rows.length === 0) throw new EmptyInputError(table.file);
  return table.rows.map((row) => {
    const rec: Record<string, string> = {};
    names.forEach((n, j) => (rec[n] = row[idx[j]]));
    return rec;
  });
}

export function toCsv(columns: string[], rows: (string | number)[][]): string {
  const fmt = (v: string | number) => (typeof v === "number" ? trimNum(v) : v);
  return [columns.join(","), ...rows.map((r) => r.map(fmt).join(","))].join("\n") + "\n";
}

/** Stable short number formatting shared by dumps and SVG coordinates. */
export function trimNum(v: number): string {
  if (Number.isInteger(v)) return String(v);
  return String(Number(v.toPrecision(12)));
}
