/** Figure regeneration CLI: --csv <path> --kind horizon_sweep|trajectory --out <svg>. */

import { writeFileSync } from "node:fs";
import process from "node:process";

import { parseSweepCsv, parseTraceCsv } from "./csv.js";
import { renderHorizonSweep } from "./horizonSweep.js";
import { renderTrajectory } from "./trajectory.js";

interface Args {
  csv: string;
  kind: string;
  out: string;
  title?: string;
  setpoint?: number[];
  states?: number[];
}

function parseArgs(argv: string[]): Args {
  const out: Record<string, string> = {};
  for (let i = 0; i < argv.length; i += 1) {
    const a = argv[i];
    if (!a.startsWith("--")) {
      throw new Error(`unexpected argument '${a}'`);
    }
    const key = a.slice(2);
    const value = argv[i + 1];
    if (value === undefined) {
      throw new Error(`missing value for --${key}`);
    }
    out[key] = value;
    i += 1;
  }
  for (const req of ["csv", "kind", "out"]) {
    if (!(req in out)) {
      throw new Error(`--${req} is required`);
    }
  }
  return {
    csv: out.csv,
    kind: out.kind,
    out: out.out,
    title: out.title,
    setpoint: out.setpoint ? out.setpoint.split(",").map(Number) : undefined,
    states: out.states ? out.states.split(",").map(Number) : undefined,
  };
}

export function main(argv: string[]): number {
  let args: Args;
  try {
    args = parseArgs(argv);
  } catch (err) {
    console.error(String(err instanceof Error ? err.message : err));
    console.error("usage: plot --csv <file> --kind horizon_sweep|trajectory --out <file.svg> [--title t] [--setpoint a,b] [--states 1,3]");
    return 2;
  }
  try {
    let svg: string;
    if (args.kind === "horizon_sweep") {
      svg = renderHorizonSweep(parseSweepCsv(args.csv), { title: args.title });
    } else if (args.kind === "trajectory") {
      svg = renderTrajectory(parseTraceCsv(args.csv), {
        title: args.title,
        setpoint: args.setpoint,
        stateIndices: args.states,
      });
    } else {
      throw new Error(`unknown kind '${args.kind}' (horizon_sweep|trajectory)`);
    }
    writeFileSync(args.out, svg + "\n");
    console.log(`wrote ${args.out}`);
    return 0;
  } catch (err) {
    console.error(String(err instanceof Error ? err.message : err));
    return 1;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined && import.meta.url.endsWith(process.argv[1].split("/").pop() ?? "");
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
