/**
 * Secondary acceptance: render all four figure kinds from the committed
 * outputs of the convergence (criterion 4) and moment-bound (criterion 6)
 * runs, plus the confluence and sample-path artifacts, without error and
 * without mutating any input byte.
 */

import { mkdtempSync, readFileSync, statSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { fileURLToPath } from "node:url";
import { expect, it, vi } from "vitest";

import { main } from "../src/cli.js";

const fixture = (name: string) => fileURLToPath(new URL(`fixtures/${name}`, import.meta.url));

it("acceptance: all four figure kinds render, inputs byte-unchanged", () => {
  const out = mkdtempSync(join(tmpdir(), "plots-acceptance-"));
  const cases: Array<[string, string[]]> = [
    ["convergence", [fixture("converge.csv")]],
    ["moments", [fixture("moment_report.json")]],
    ["confluence_hist", [fixture("confluence_stats.json")]],
    ["paths", [fixture("path_0.csv"), fixture("path_1.csv"), fixture("path_2.csv")]],
  ];
  const before = new Map<string, Buffer>();
  for (const [, inputs] of cases) {
    for (const input of inputs) before.set(input, readFileSync(input));
  }

  const log = vi.spyOn(console, "log").mockImplementation(() => {});
  try {
    for (const [kind, inputs] of cases) {
      const args = ["render", "--kind", kind];
      inputs.forEach((input, i) => args.push(i === 0 ? "--in" : `--in${i + 1}`, input));
      const target = join(out, `${kind}.svg`);
      args.push("--out", target);
      expect(main(args), kind).toBe(0);
      expect(statSync(target).size, kind).toBeGreaterThan(500);
      expect(readFileSync(target, "utf8").startsWith("<svg"), kind).toBe(true);
    }
  } finally {
    log.mockRestore();
  }

  for (const [input, bytes] of before) {
    expect(readFileSync(input).equals(bytes), input).toBe(true);
  }
  console.log("criterion 11: PASS - four figure kinds rendered, inputs untouched");
});
