/**
 * FigureSpec dispatch: read input artifact(s), validate, render one SVG.
 * Inputs are opened read-only and never written back.
 */

import { readFileSync, writeFileSync } from "node:fs";

import {
  confluenceHistFigure,
  convergenceFigure,
  momentsFigure,
  pathsFigure,
} from "./figures.js";
import {
  SchemaError,
  readConfluenceStats,
  readLevelCurve,
  readMomentReport,
  readPath,
} from "./schema.js";

export const KINDS = ["convergence", "moments", "confluence_hist", "paths"] as const;
export type FigureKind = (typeof KINDS)[number];

export interface FigureSpec {
  kind: FigureKind;
  inputs: string[];
  output: string;
}

export class UsageError extends Error {}

function readText(path: string): string {
  try {
    return readFileSync(path, "utf8");
  } catch (err) {
    throw new UsageError(`cannot read input ${path}: ${(err as Error).message}`);
  }
}

export function renderToString(spec: FigureSpec): string {
  if (spec.inputs.length === 0) {
    throw new UsageError("at least one input file is required");
  }
  switch (spec.kind) {
    case "convergence": {
      const file = spec.inputs[0];
      return convergenceFigure(readLevelCurve(readText(file), file), file);
    }
    case "moments": {
      const file = spec.inputs[0];
      return momentsFigure(readMomentReport(readText(file), file), file);
    }
    case "confluence_hist": {
      const file = spec.inputs[0];
      return confluenceHistFigure(readConfluenceStats(readText(file), file), file);
    }
    case "paths": {
      return pathsFigure(spec.inputs.map((file) => readPath(readText(file), file)));
    }
    default:
      throw new UsageError(`unknown figure kind '${spec.kind as string}'`);
  }
}

export function render(spec: FigureSpec): void {
  if (!spec.output.endsWith(".svg")) {
    throw new UsageError(`output must be an .svg path, got ${spec.output}`);
  }
  const svg = renderToString(spec);
  writeFileSync(spec.output, svg, "utf8");
}

export { SchemaError };
