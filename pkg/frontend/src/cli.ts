#!/usr/bin/env node
/**
 * sdelab-plots render --kind <k> --in <path> [--in2 <path> ...] --out <image.svg>
 *
 * Exit codes: 0 ok, 2 usage error, 3 schema error.
 */

import { FigureSpec, KINDS, SchemaError, UsageError, render } from "./render.js";

function parseArgs(argv: string[]): FigureSpec {
  if (argv[0] !== "render") {
    throw new UsageError("usage: sdelab-plots render --kind <kind> --in <path> [--in2 ...] --out <image.svg>");
  }
  let kind: string | undefined;
  let output: string | undefined;
  const inputs: string[] = [];
  for (let i = 1; i < argv.length; i++) {
    const arg = argv[i];
    if (arg === "--kind") {
      kind = argv[++i];
    } else if (arg === "--out") {
      output = argv[++i];
    } else if (arg === "--in" || /^--in\d+$/.test(arg)) {
      const value = argv[++i];
      if (value === undefined) throw new UsageError(`${arg} needs a path`);
      inputs.push(value);
    } else {
      throw new UsageError(`unknown argument '${arg}'`);
    }
  }
  if (!kind || !(KINDS as readonly string[]).includes(kind)) {
    throw new UsageError(`--kind must be one of: ${KINDS.join(", ")}`);
  }
  if (inputs.length === 0) throw new UsageError("--in <path> is required");
  if (!output) throw new UsageError("--out <image.svg> is required");
  return { kind: kind as FigureSpec["kind"], inputs, output };
}

export function main(argv: string[]): number {
  try {
    const spec = parseArgs(argv);
    render(spec);
    console.log(`wrote ${spec.output}`);
    return 0;
  } catch (err) {
    if (err instanceof UsageError) {
      console.error(`sdelab-plots: ${err.message}`);
      return 2;
    }
    if (err instanceof SchemaError) {
      console.error(`sdelab-plots: ${err.message}`);
      return 3;
    }
    console.error(`sdelab-plots: ${(err as Error).message}`);
    return 1;
  }
}

const isDirect = process.argv[1] !== undefined && import.meta.url.endsWith(
  process.argv[1].replace(/^.*[/\\]/, ""),
);
if (isDirect) {
  process.exit(main(process.argv.slice(2)));
}
