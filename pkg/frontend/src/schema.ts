/**
 * Readers for the documented sdelab artifact schemas.
 *
 * Everything here validates and extracts; no statistics are recomputed.
 * Violations throw SchemaError with a diagnostic naming the file and the
 * offending column/field.
 */

import { z } from "zod";

export class SchemaError extends Error {}

export interface CsvTable {
  header: string[];
  rows: string[][];
}

export function parseCsv(text: string, file: string): CsvTable {
  const lines = text.split("\n").filter((line) => line.length > 0);
  if (lines.length === 0) {
    throw new SchemaError(`schema error: ${file} is empty`);
  }
  const header = lines[0].split(",");
  const rows = lines.slice(1).map((line) => line.split(","));
  if (rows.length === 0) {
    throw new SchemaError(`schema error: ${file} has a header but no data rows`);
  }
  for (const row of rows) {
    if (row.length !== header.length) {
      throw new SchemaError(
        `schema error: ${file} row has ${row.length} cells, header has ${header.length}`,
      );
    }
  }
  return { header, rows };
}

export function column(table: CsvTable, name: string, file: string): number {
  const idx = table.header.indexOf(name);
  if (idx < 0) {
    throw new SchemaError(`schema error: missing column '${name}' in ${file}`);
  }
  return idx;
}

function numeric(cell: string, col: string, file: string): number {
  const v = Number(cell);
  if (!Number.isFinite(v)) {
    throw new SchemaError(`schema error: non-numeric value '${cell}' in column '${col}' of ${file}`);
  }
  return v;
}

// --- converge.csv / strong_error.csv -----------------------------------------

export interface LevelCurve {
  levels: number[];
  values: number[];
  ciHalfwidths: number[];
}

export function readLevelCurve(text: string, file: string): LevelCurve {
  const table = parseCsv(text, file);
  const li = column(table, "level", file);
  const vi = column(table, "value", file);
  const ci = column(table, "ci_halfwidth", file);
  return {
    levels: table.rows.map((r) => numeric(r[li], "level", file)),
    values: table.rows.map((r) => numeric(r[vi], "value", file)),
    ciHalfwidths: table.rows.map((r) => numeric(r[ci], "ci_halfwidth", file)),
  };
}

// --- path_<stream>.csv --------------------------------------------------------

export interface PathSeries {
  t: number[];
  x1: number[];
  stoppedIndex: number | null; // row index of the stopping state, if any
  label: string;
}

export function readPath(text: string, file: string): PathSeries {
  const table = parseCsv(text, file);
  const ti = column(table, "t", file);
  const xi = column(table, "x1", file);
  const si = column(table, "stopped", file);
  let stoppedIndex: number | null = null;
  table.rows.forEach((r, k) => {
    if (r[si] !== "") stoppedIndex = k;
  });
  return {
    t: table.rows.map((r) => numeric(r[ti], "t", file)),
    x1: table.rows.map((r) => numeric(r[xi], "x1", file)),
    stoppedIndex,
    label: file.replace(/^.*[/\\]/, ""),
  };
}

// --- moment_report.json -------------------------------------------------------

const boundSchema = z
  .object({
    branch: z.string(),
    log_value: z.number(),
    value: z.number().nullable(),
  })
  .nullable();

const momentReportSchema = z.object({
  p: z.number(),
  estimate: z.number(),
  ci_halfwidth: z.number(),
  level: z.number(),
  paths: z.number(),
  bound_i: boundSchema,
  bound_ii: boundSchema,
});

export type MomentReport = z.infer<typeof momentReportSchema>;

// --- confluence_stats.json ----------------------------------------------------

const confluenceStatsSchema = z.object({
  eps: z.array(z.number()),
  frequencies: z.array(z.number()),
  min_distances: z.array(z.number()).min(1),
  paths: z.number(),
});

export type ConfluenceStats = z.infer<typeof confluenceStatsSchema>;

function parseJson<T>(schema: z.ZodType<T>, text: string, file: string): T {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch (err) {
    throw new SchemaError(`schema error: ${file} is not valid JSON: ${(err as Error).message}`);
  }
  const result = schema.safeParse(raw);
  if (!result.success) {
    const issue = result.error.issues[0];
    const where = issue.path.join(".") || "(root)";
    throw new SchemaError(`schema error: ${file} field '${where}': ${issue.message}`);
  }
  return result.data;
}

export function readMomentReport(text: string, file: string): MomentReport {
  return parseJson(momentReportSchema, text, file);
}

export function readConfluenceStats(text: string, file: string): ConfluenceStats {
  return parseJson(confluenceStatsSchema, text, file);
}
