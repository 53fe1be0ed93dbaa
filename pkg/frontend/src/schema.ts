/**
 * Trace CSV schema shared with the simulator.
 *
 * The simulator emits one row per objective snapshot with a fixed seven
 * column header.  Everything downstream keys off that header, so parsing
 * is strict: any drift in column order, name, or cell type is reported
 * with the offending column named rather than silently coerced.
 */

import * as fs from "fs";
import Papa from "papaparse";

// ---------------------------------------------------------------------------
// Row model
// ---------------------------------------------------------------------------

export const TRACE_COLUMNS = [
  "virtual_time_s",
  "global_iter",
  "algorithm",
  "topology",
  "seed",
  "dual_objective",
  "consensus_distance",
] as const;

export type TraceColumn = (typeof TRACE_COLUMNS)[number];

export interface TraceRow {
  virtualTimeS: number;
  globalIter: number;
  algorithm: string;
  topology: string;
  seed: number;
  dualObjective: number;
  consensusDistance: number;
}

/** Raised for any malformed input: bad header, bad cell, or no data rows. */
export class SchemaError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "SchemaError";
  }
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

function parseFinite(cell: string, column: TraceColumn, rowIndex: number, label: string): number {
  const value = Number(cell);
  if (cell.trim() === "" || !Number.isFinite(value)) {
    throw new SchemaError(
      `${label}: row ${rowIndex} column '${column}' has non-numeric value '${cell}'`,
    );
  }
  return value;
}

function parseCount(cell: string, column: TraceColumn, rowIndex: number, label: string): number {
  const value = parseFinite(cell, column, rowIndex, label);
  if (!Number.isInteger(value) || value < 0) {
    throw new SchemaError(
      `${label}: row ${rowIndex} column '${column}' must be a non-negative integer, got '${cell}'`,
    );
  }
  return value;
}

function checkHeader(header: string[], label: string): void {
  const shared = Math.min(header.length, TRACE_COLUMNS.length);
  for (let i = 0; i < shared; i++) {
    if (header[i] !== TRACE_COLUMNS[i]) {
      throw new SchemaError(
        `${label}: column ${i + 1} is '${header[i]}', expected '${TRACE_COLUMNS[i]}'`,
      );
    }
  }
  if (header.length !== TRACE_COLUMNS.length) {
    throw new SchemaError(
      `${label}: header has ${header.length} columns, expected ${TRACE_COLUMNS.length}`,
    );
  }
}

/**
 * Parse one trace CSV into typed rows.
 *
 * `label` names the source in error messages (normally the file path).
 * A header-only file is an error: an empty trace means the run produced
 * nothing worth plotting and the caller should hear about it.
 */
export function parseTrace(text: string, label: string): TraceRow[] {
  const parsed = Papa.parse<string[]>(text, { delimiter: ",", skipEmptyLines: true });
  if (parsed.errors.length > 0) {
    const first = parsed.errors[0]!;
    throw new SchemaError(`${label}: ${first.message}`);
  }
  const grid = parsed.data;
  if (grid.length === 0) {
    throw new SchemaError(`${label}: file is empty, expected a trace header`);
  }
  checkHeader(grid[0]!, label);
  if (grid.length === 1) {
    throw new SchemaError(`${label}: no data rows under the trace header`);
  }

  const rows: TraceRow[] = [];
  for (let r = 1; r < grid.length; r++) {
    const cells = grid[r]!;
    if (cells.length !== TRACE_COLUMNS.length) {
      throw new SchemaError(
        `${label}: row ${r} has ${cells.length} columns, expected ${TRACE_COLUMNS.length}`,
      );
    }
    rows.push({
      virtualTimeS: parseFinite(cells[0]!, "virtual_time_s", r, label),
      globalIter: parseCount(cells[1]!, "global_iter", r, label),
      algorithm: cells[2]!,
      topology: cells[3]!,
      seed: parseCount(cells[4]!, "seed", r, label),
      dualObjective: parseFinite(cells[5]!, "dual_objective", r, label),
      consensusDistance: parseFinite(cells[6]!, "consensus_distance", r, label),
    });
  }
  return rows;
}

/** Read and parse a trace file; the path doubles as the error label. */
export function readTrace(path: string): TraceRow[] {
  let text: string;
  try {
    text = fs.readFileSync(path, "utf8");
  } catch (err) {
    throw new SchemaError(`${path}: ${(err as Error).message}`);
  }
  return parseTrace(text, path);
}
