/**
 * Batch renderer: trace CSVs in, one convergence figure per group out.
 *
 * Rows from every input file are pooled, split by the grouping column
 * (topology unless told otherwise), and drawn as one curve per algorithm.
 * When a group holds several seeds of the same algorithm the curve is the
 * per-snapshot median across seeds, taken only at snapshot times every
 * seed shares; within a single run points are plotted exactly as traced,
 * in virtual-time order, never resampled.
 *
 * All inputs are validated before the first file is written, so a bad
 * trace leaves the output directory untouched.
 */

import * as fs from "fs";
import * as path from "path";
import { buildFigure, Curve, FigureSpec, PanelSpec } from "./figure";
import { readTrace, SchemaError, TraceRow } from "./schema";

// ---------------------------------------------------------------------------
// Plot request
// ---------------------------------------------------------------------------

export const GROUP_KEYS = ["topology", "algorithm", "seed"] as const;
export type GroupKey = (typeof GROUP_KEYS)[number];

export interface PlotSpec {
  /** Trace CSV paths; rows from all files are pooled before grouping. */
  inputs: string[];
  outDir: string;
  logObjective: boolean;
  logConsensus: boolean;
  /** Column whose distinct values become separate figures. */
  groupKey: GroupKey;
}

const CURVE_COLORS: Record<string, string> = {
  a2dwb: "#4361ee",
  a2dwbn: "#e63946",
  sync_baseline: "#2d6a4f",
};
const FALLBACK_COLORS = ["#7209b7", "#f3722c", "#277da1", "#90be6d", "#577590"];

// ---------------------------------------------------------------------------
// Curve assembly
// ---------------------------------------------------------------------------

function groupValue(row: TraceRow, key: GroupKey): string {
  if (key === "topology") return row.topology;
  if (key === "algorithm") return row.algorithm;
  return String(row.seed);
}

function median(values: number[]): number {
  const sorted = [...values].sort((a, b) => a - b);
  const mid = sorted.length >> 1;
  if (sorted.length % 2 === 1) {
    return sorted[mid]!;
  }
  return 0.5 * (sorted[mid - 1]! + sorted[mid]!);
}

/**
 * Collapse one algorithm's runs to a single (time, value) series.
 *
 * One seed: the run verbatim.  Several seeds: the per-time median over
 * the snapshot times common to all seeds, so no run is extrapolated.
 */
export function medianSeries(
  runs: Map<number, Array<[number, number]>>,
  context: string,
): Array<[number, number]> {
  const perSeed: Array<Map<number, number>> = [];
  for (const [seed, points] of runs) {
    const byTime = new Map<number, number>();
    for (const [t, v] of points) {
      if (byTime.has(t)) {
        throw new SchemaError(`${context}: seed ${seed} has two snapshots at virtual_time_s=${t}`);
      }
      byTime.set(t, v);
    }
    perSeed.push(byTime);
  }
  if (perSeed.length === 1) {
    return [...runs.values()][0]!.slice().sort((a, b) => a[0] - b[0]);
  }
  let shared = [...perSeed[0]!.keys()];
  for (const byTime of perSeed.slice(1)) {
    shared = shared.filter((t) => byTime.has(t));
  }
  shared.sort((a, b) => a - b);
  if (shared.length === 0) {
    throw new SchemaError(`${context}: seeds share no snapshot times, cannot take a median curve`);
  }
  return shared.map((t) => [t, median(perSeed.map((byTime) => byTime.get(t)!))]);
}

interface GroupCurves {
  objective: Curve[];
  consensus: Curve[];
}

function buildGroupCurves(rows: TraceRow[], group: string): GroupCurves {
  const algorithms = [...new Set(rows.map((r) => r.algorithm))].sort();
  const objective: Curve[] = [];
  const consensus: Curve[] = [];
  let fallback = 0;
  for (const algorithm of algorithms) {
    const color = CURVE_COLORS[algorithm] ?? FALLBACK_COLORS[fallback++ % FALLBACK_COLORS.length]!;
    const objectiveRuns = new Map<number, Array<[number, number]>>();
    const consensusRuns = new Map<number, Array<[number, number]>>();
    for (const row of rows) {
      if (row.algorithm !== algorithm) continue;
      if (!objectiveRuns.has(row.seed)) {
        objectiveRuns.set(row.seed, []);
        consensusRuns.set(row.seed, []);
      }
      objectiveRuns.get(row.seed)!.push([row.virtualTimeS, row.dualObjective]);
      consensusRuns.get(row.seed)!.push([row.virtualTimeS, row.consensusDistance]);
    }
    const context = `group '${group}' algorithm '${algorithm}'`;
    objective.push({ label: algorithm, color, points: medianSeries(objectiveRuns, context) });
    consensus.push({ label: algorithm, color, points: medianSeries(consensusRuns, context) });
  }
  return { objective, consensus };
}

function checkPositive(curves: Curve[], column: string, group: string): void {
  for (const curve of curves) {
    for (const [t, v] of curve.points) {
      if (!(v > 0)) {
        throw new SchemaError(
          `group '${group}' algorithm '${curve.label}': column '${column}' has ` +
            `non-positive value ${v} at virtual_time_s=${t}, cannot use a log scale`,
        );
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

function fileSafe(value: string): string {
  return value.replace(/[^A-Za-z0-9._-]/g, "-");
}

/**
 * Render every requested figure and return the written paths, sorted.
 * File names are a pure function of the group values, so a rerun over
 * the same inputs produces the same file set with the same bytes.
 */
export function render(spec: PlotSpec): string[] {
  if (spec.inputs.length === 0) {
    throw new SchemaError("no input files given");
  }
  if (!GROUP_KEYS.includes(spec.groupKey)) {
    throw new SchemaError(`unknown group key '${spec.groupKey}'`);
  }

  const rows: TraceRow[] = [];
  for (const input of spec.inputs) {
    rows.push(...readTrace(input));
  }

  const groups = new Map<string, TraceRow[]>();
  for (const row of rows) {
    const value = groupValue(row, spec.groupKey);
    if (!groups.has(value)) {
      groups.set(value, []);
    }
    groups.get(value)!.push(row);
  }

  // build every figure before writing anything
  const figures: Array<[string, string]> = [];
  for (const group of [...groups.keys()].sort()) {
    const curves = buildGroupCurves(groups.get(group)!, group);
    if (spec.logObjective) {
      checkPositive(curves.objective, "dual_objective", group);
    }
    if (spec.logConsensus) {
      checkPositive(curves.consensus, "consensus_distance", group);
    }
    const left: PanelSpec = {
      title: "dual objective",
      yLabel: "dual objective",
      logScale: spec.logObjective,
      curves: curves.objective,
    };
    const right: PanelSpec = {
      title: "consensus distance",
      yLabel: "consensus distance",
      logScale: spec.logConsensus,
      curves: curves.consensus,
    };
    const figure: FigureSpec = {
      title: `barycenter convergence (${spec.groupKey} = ${group})`,
      xLabel: "virtual time (s)",
      panels: [left, right],
    };
    figures.push([path.join(spec.outDir, `convergence_${fileSafe(group)}.svg`), buildFigure(figure)]);
  }

  fs.mkdirSync(spec.outDir, { recursive: true });
  const written: string[] = [];
  for (const [file, svg] of figures) {
    fs.writeFileSync(file, svg, "utf8");
    written.push(file);
  }
  return written.sort();
}
