import { readFileSync } from "fs";

export const ERROR_COLUMNS = [
  "eps",
  "dt",
  "n_paths",
  "error1",
  "error2",
  "stderr1",
  "stderr2",
] as const;

export interface ErrorRow {
  eps: number;
  dt: number;
  n_paths: number;
  error1: number;
  error2: number;
  stderr1: number;
  stderr2: number;
}

export interface ErrorTable {
  path: string;
  rows: ErrorRow[];
  /** Which column varies across rows and serves as the x axis. */
  abscissa: "eps" | "dt";
}

/** Read an error table, enforcing the documented column schema. */
export function readErrorTable(path: string): ErrorTable {
  const text = readFileSync(path, "utf8");
  const lines = text.split(/\r?\n/).filter((l) => l.length > 0);
  if (lines.length === 0) {
    throw new Error(`${path}: empty file`);
  }
  const header = lines[0].split(",");
  for (const col of ERROR_COLUMNS) {
    if (!header.includes(col)) {
      throw new Error(`${path}: schema mismatch, missing column '${col}'`);
    }
  }
  const extra = header.filter((c) => !(ERROR_COLUMNS as readonly string[]).includes(c));
  if (extra.length > 0) {
    throw new Error(`${path}: schema mismatch, unexpected column '${extra[0]}'`);
  }
  const idx = Object.fromEntries(header.map((c, i) => [c, i]));
  const rows: ErrorRow[] = [];
  for (const [n, line] of lines.slice(1).entries()) {
    const cells = line.split(",");
    if (cells.length !== header.length) {
      throw new Error(`${path}: row ${n + 1} has ${cells.length} cells, want ${header.length}`);
    }
    const num = (c: string) => {
      const v = Number(cells[idx[c]]);
      if (!Number.isFinite(v)) {
        throw new Error(`${path}: row ${n + 1}, column '${c}' is not a finite number`);
      }
      return v;
    };
    rows.push({
      eps: num("eps"),
      dt: num("dt"),
      n_paths: num("n_paths"),
      error1: num("error1"),
      error2: num("error2"),
      stderr1: num("stderr1"),
      stderr2: num("stderr2"),
    });
  }
  if (rows.length === 0) {
    throw new Error(`${path}: zero data rows`);
  }
  const dtVaries = new Set(rows.map((r) => r.dt)).size > 1;
  return { path, rows, abscissa: dtVaries ? "dt" : "eps" };
}
