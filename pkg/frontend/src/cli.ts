/**
 * Figure CLI:
 *   node dist/cli.js capture-curve --rod rod.csv --sphere sphere.csv --out capture.svg
 *   node dist/cli.js energy-trace --input rod.csv [--input sphere.csv] --out energy.svg
 *   node dist/cli.js potential-map --input pot.csv --out pot.svg
 *   node dist/cli.js intensity-map --input int.csv --out int.svg
 *   node dist/cli.js cooling-sweep --input sweep.csv --out sweep.svg
 */

import { writeFileSync } from "fs";
import process from "process";

import { FormatError, readDataFile } from "./format.js";
import { FigureKind, FigureSpec, render } from "./plots.js";

interface Args {
  command: string;
  out?: string;
  inputs: string[];
  labels: string[];
}

function parseArgs(argv: string[]): Args {
  const [command, ...rest] = argv;
  const args: Args = { command: command ?? "", inputs: [], labels: [] };
  for (let i = 0; i < rest.length; i++) {
    const flag = rest[i];
    const value = rest[i + 1];
    switch (flag) {
      case "--out":
        args.out = value;
        i++;
        break;
      case "--input":
        args.inputs.push(value);
        i++;
        break;
      case "--rod":
        args.inputs.push(value);
        args.labels.push("rod");
        i++;
        break;
      case "--sphere":
        args.inputs.push(value);
        args.labels.push("sphere");
        i++;
        break;
      case "--label":
        args.labels.push(value);
        i++;
        break;
      default:
        throw new FormatError(`unknown argument ${JSON.stringify(flag)}`);
    }
  }
  return args;
}

const KINDS: Record<string, FigureKind> = {
  "capture-curve": "capture_curve",
  "energy-trace": "energy_trace",
  "potential-map": "potential_map",
  "intensity-map": "intensity_map",
  "cooling-sweep": "cooling_sweep",
};

export function main(argv: string[]): number {
  let args: Args;
  try {
    args = parseArgs(argv);
  } catch (err) {
    console.error(String(err));
    return 2;
  }
  const kind = KINDS[args.command];
  if (!kind) {
    console.error(
      `usage: cli.js <${Object.keys(KINDS).join("|")}> --input FILE [--input FILE] --out FILE.svg`,
    );
    return 2;
  }
  if (!args.out || args.inputs.length === 0) {
    console.error("both --out and at least one input file are required");
    return 2;
  }
  try {
    const spec: FigureSpec = {
      kind,
      inputs: args.inputs.map(readDataFile),
      labels: args.labels.length ? args.labels : undefined,
    };
    writeFileSync(args.out, render(spec));
  } catch (err) {
    if (err instanceof FormatError) {
      console.error(`error: ${err.message}`);
      return 1;
    }
    throw err;
  }
  console.error(`wrote ${args.out}`);
  return 0;
}

if (process.argv[1] && process.argv[1].endsWith("cli.js")) {
  process.exit(main(process.argv.slice(2)));
}
