/**
 * Command line wrapper around the renderer.
 *
 *   barysim-plots --input runs/a.csv runs/b.csv --out-dir figures
 *
 * Exits 0 on success, 2 on any input problem (bad flags, unreadable or
 * malformed traces, log scale over non-positive values).  `main` is
 * exported and side-effect free apart from the files it writes, so tests
 * drive it in process.
 */

import yargs from "yargs";
import { GROUP_KEYS, GroupKey, PlotSpec, render } from "./render";
import { SchemaError } from "./schema";

export async function main(argv: string[]): Promise<number> {
  let parsed;
  try {
    parsed = await yargs(argv)
      .usage("Render per-topology convergence figures from simulator trace CSVs")
      .option("input", {
        type: "string",
        array: true,
        demandOption: true,
        describe: "trace CSV files (rows from all files are pooled)",
      })
      .option("out-dir", {
        type: "string",
        default: "figures",
        describe: "directory the SVG figures are written into",
      })
      .option("log-objective", {
        type: "boolean",
        default: false,
        describe: "log-scale the dual objective panel",
      })
      .option("log-consensus", {
        type: "boolean",
        default: false,
        describe: "log-scale the consensus distance panel",
      })
      .option("group-key", {
        type: "string",
        choices: GROUP_KEYS as unknown as string[],
        default: "topology",
        describe: "column whose distinct values become separate figures",
      })
      .strict()
      .exitProcess(false)
      .fail((msg, err) => {
        throw err ?? new Error(msg);
      })
      .parseAsync();
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 2;
  }

  const spec: PlotSpec = {
    inputs: parsed.input,
    outDir: parsed.outDir,
    logObjective: parsed.logObjective,
    logConsensus: parsed.logConsensus,
    groupKey: parsed.groupKey as GroupKey,
  };

  try {
    const written = render(spec);
    for (const file of written) {
      console.log(file);
    }
    return 0;
  } catch (err) {
    if (err instanceof SchemaError) {
      console.error(`error: ${err.message}`);
      return 2;
    }
    throw err;
  }
}

/* istanbul ignore next */
if (typeof require !== "undefined" && require.main === module) {
  main(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}
