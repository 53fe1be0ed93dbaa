import { describe, expect, it } from "vitest";
import { parseTrace, SchemaError, TRACE_COLUMNS } from "../src/schema";
import { fakeRun, traceCsv } from "./helpers";

describe("parseTrace", () => {
  it("parses a well-formed trace into typed rows", () => {
    const rows = parseTrace(traceCsv(fakeRun("a2dwb", "cycle", 3, 2)), "t.csv");
    expect(rows).toHaveLength(2);
    expect(rows[0]).toEqual({
      virtualTimeS: 0,
      globalIter: 0,
      algorithm: "a2dwb",
      topology: "cycle",
      seed: 3,
      dualObjective: -1,
      consensusDistance: 1,
    });
    expect(rows[1]!.virtualTimeS).toBeCloseTo(0.5, 12);
  });

  it("accepts scientific-notation floats", () => {
    const text =
      TRACE_COLUMNS.join(",") + "\n" + "1.5e-2,7,a2dwb,star,0,-3.25e+1,9.9999999999999995e-07\n";
    const rows = parseTrace(text, "t.csv");
    expect(rows[0]!.virtualTimeS).toBeCloseTo(0.015, 15);
    expect(rows[0]!.consensusDistance).toBeCloseTo(1e-6, 18);
  });

  it("names the offending column on a renamed header field", () => {
    const text = traceCsv(fakeRun("a2dwb", "cycle", 0, 1)).replace("global_iter", "iteration");
    expect(() => parseTrace(text, "bad.csv")).toThrow(SchemaError);
    expect(() => parseTrace(text, "bad.csv")).toThrow(
      "bad.csv: column 2 is 'iteration', expected 'global_iter'",
    );
  });

  it("names the first mismatch when columns are swapped", () => {
    const text = traceCsv(fakeRun("a2dwb", "cycle", 0, 1)).replace(
      "algorithm,topology",
      "topology,algorithm",
    );
    expect(() => parseTrace(text, "swap.csv")).toThrow("column 3 is 'topology'");
  });

  it("rejects a header with a trailing extra column", () => {
    const text = traceCsv(fakeRun("a2dwb", "cycle", 0, 1))
      .replace("consensus_distance", "consensus_distance,runtime_s")
      .replace(/^(\d.*)$/m, "$1,0.1");
    expect(() => parseTrace(text, "wide.csv")).toThrow("header has 8 columns, expected 7");
  });

  it("rejects a header missing the last column", () => {
    const text = "virtual_time_s,global_iter,algorithm,topology,seed,dual_objective\n";
    expect(() => parseTrace(text, "narrow.csv")).toThrow("header has 6 columns, expected 7");
  });

  it("rejects an empty file", () => {
    expect(() => parseTrace("", "empty.csv")).toThrow("empty.csv: file is empty");
  });

  it("rejects a header-only file", () => {
    const text = TRACE_COLUMNS.join(",") + "\n";
    expect(() => parseTrace(text, "hdr.csv")).toThrow("no data rows under the trace header");
  });

  it("names column and row for a non-numeric cell", () => {
    const text = TRACE_COLUMNS.join(",") + "\n" + "0.0,0,a2dwb,cycle,0,NaN?,0.5\n";
    expect(() => parseTrace(text, "cell.csv")).toThrow(
      "cell.csv: row 1 column 'dual_objective' has non-numeric value 'NaN?'",
    );
  });

  it("rejects non-integer iteration counts", () => {
    const text = TRACE_COLUMNS.join(",") + "\n" + "0.0,2.5,a2dwb,cycle,0,-1.0,0.5\n";
    expect(() => parseTrace(text, "iter.csv")).toThrow(
      "row 1 column 'global_iter' must be a non-negative integer",
    );
  });

  it("rejects negative seeds", () => {
    const text = TRACE_COLUMNS.join(",") + "\n" + "0.0,2,a2dwb,cycle,-1,-1.0,0.5\n";
    expect(() => parseTrace(text, "seed.csv")).toThrow("column 'seed' must be a non-negative integer");
  });

  it("rejects a data row with too few cells", () => {
    const text = TRACE_COLUMNS.join(",") + "\n" + "0.0,0,a2dwb,cycle,0,-1.0\n";
    expect(() => parseTrace(text, "short.csv")).toThrow("row 1 has 6 columns, expected 7");
  });

  it("reports the row number of the first bad row, not the header", () => {
    const good = "0.0,0,a2dwb,cycle,0,-1.0,0.5";
    const text = TRACE_COLUMNS.join(",") + "\n" + good + "\n" + "0.5,1,a2dwb,cycle,0,oops,0.4\n";
    expect(() => parseTrace(text, "t.csv")).toThrow("row 2 column 'dual_objective'");
  });
});
