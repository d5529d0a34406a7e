/**
 * Reader for the simulator's output format: one JSON metadata line followed
 * by CSV. Rendering never recomputes physics; everything comes from here.
 */

import { readFileSync } from "fs";

export interface FileMeta {
  format: string;
  version: string;
  command: string;
  metadata: Record<string, unknown>;
  extra?: Record<string, unknown>;
}

export interface DataFile {
  meta: FileMeta;
  columns: string[];
  rows: number[][];
  path: string;
}

export class FormatError extends Error {
  constructor(message: string, public readonly path?: string) {
    super(path ? `${message} (${path})` : message);
  }
}

export function parseDataText(text: string, path = "<memory>"): DataFile {
  const lines = text.split(/\r?\n/).filter((l) => l.length > 0);
  if (lines.length === 0) {
    throw new FormatError("empty file", path);
  }
  let meta: FileMeta;
  try {
    meta = JSON.parse(lines[0]) as FileMeta;
  } catch {
    throw new FormatError("first line is not a JSON metadata header", path);
  }
  if (meta.format !== "cavrotor/v1") {
    throw new FormatError(
      `unsupported format ${JSON.stringify(meta.format)}; expected cavrotor/v1`,
      path,
    );
  }
  if (lines.length < 2) {
    throw new FormatError("missing CSV header line", path);
  }
  const columns = lines[1].split(",");
  const rows: number[][] = [];
  for (let i = 2; i < lines.length; i++) {
    const parts = lines[i].split(",");
    if (parts.length !== columns.length) {
      throw new FormatError(
        `row ${i + 1} has ${parts.length} fields, expected ${columns.length}`,
        path,
      );
    }
    const row = parts.map(Number);
    if (row.some((x) => Number.isNaN(x))) {
      throw new FormatError(`row ${i + 1} contains a non-numeric field`, path);
    }
    rows.push(row);
  }
  if (rows.length === 0) {
    throw new FormatError("no data rows", path);
  }
  return { meta, columns, rows, path };
}

export function readDataFile(path: string): DataFile {
  return parseDataText(readFileSync(path, "utf-8"), path);
}

/** Columns by name, failing loudly when one is missing. */
export function column(file: DataFile, name: string): number[] {
  const idx = file.columns.indexOf(name);
  if (idx < 0) {
    throw new FormatError(
      `missing column ${JSON.stringify(name)}; have [${file.columns.join(", ")}]`,
      file.path,
    );
  }
  return file.rows.map((r) => r[idx]);
}

/** The producing command must match what the figure kind expects. */
export function requireCommand(file: DataFile, expected: string): void {
  if (file.meta.command !== expected) {
    throw new FormatError(
      `metadata mismatch: file was produced by ${JSON.stringify(
        file.meta.command,
      )}, figure needs ${JSON.stringify(expected)}`,
      file.path,
    );
  }
}
