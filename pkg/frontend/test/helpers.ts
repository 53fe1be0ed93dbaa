/** Shared fixtures: synthetic trace CSVs shaped like simulator output. */

import * as fs from "fs";
import * as os from "os";
import * as path from "path";
import { TRACE_COLUMNS } from "../src/schema";

export interface FakeRow {
  t: number;
  iter: number;
  algorithm: string;
  topology: string;
  seed: number;
  objective: number;
  consensus: number;
}

export function traceCsv(rows: FakeRow[]): string {
  const lines = [TRACE_COLUMNS.join(",")];
  for (const r of rows) {
    lines.push(
      [r.t, r.iter, r.algorithm, r.topology, r.seed, r.objective, r.consensus].join(","),
    );
  }
  return lines.join("\n") + "\n";
}

/** A short, monotone-looking run for one (algorithm, topology, seed). */
export function fakeRun(
  algorithm: string,
  topology: string,
  seed: number,
  n = 5,
  offset = 0,
): FakeRow[] {
  const rows: FakeRow[] = [];
  for (let k = 0; k < n; k++) {
    rows.push({
      t: k * 0.5,
      iter: k * 3,
      algorithm,
      topology,
      seed,
      objective: -1 - k - offset,
      consensus: 1 / (1 + k + offset),
    });
  }
  return rows;
}

export function makeTmpDir(): string {
  return fs.mkdtempSync(path.join(os.tmpdir(), "barysim-plots-"));
}

export function writeFile(dir: string, name: string, text: string): string {
  const file = path.join(dir, name);
  fs.writeFileSync(file, text, "utf8");
  return file;
}
