/**
 * The four figure kinds, each a pure function from parsed artifacts to an
 * SVG string. Display-only transforms happen here (log scaling, histogram
 * binning of raw per-path values); no statistic in any input is recomputed.
 */

import type { ConfluenceStats, LevelCurve, MomentReport, PathSeries } from "./schema.js";
import {
  PALETTE,
  decadeTicks,
  fmtTick,
  frame,
  linearScale,
  log10Scale,
  niceTicks,
  xTick,
  yTick,
} from "./svg.js";

const LN10 = Math.LN10;

export function convergenceFigure(curve: LevelCurve, file: string): string {
  const f = frame(`convergence: ${file}`, "level (log2 of 1/h)", "E sup xi (log scale)");
  const positive = curve.values.filter((v) => v > 0);
  if (positive.length === 0) {
    // degenerate all-zero curve still renders, flat at a nominal floor
    positive.push(1e-16);
  }
  const lows = curve.values.map((v, i) => Math.max(v - curve.ciHalfwidths[i], v > 0 ? v / 10 : 1e-16));
  const highs = curve.values.map((v, i) => v + curve.ciHalfwidths[i]);
  const yLo = Math.min(...lows.filter((v) => v > 0), ...positive) / 1.5;
  const yHi = Math.max(...highs, ...positive) * 1.5;
  const xs = linearScale(Math.min(...curve.levels) - 0.5, Math.max(...curve.levels) + 0.5, f.x0, f.x1);
  const ys = log10Scale(yLo, yHi, f.y0, f.y1);

  for (const tick of decadeTicks(yLo, yHi)) yTick(f, ys(tick), fmtTick(tick));
  for (const lev of curve.levels) xTick(f, xs(lev), String(lev));

  const pts: Array<[number, number]> = [];
  curve.levels.forEach((lev, i) => {
    const v = curve.values[i];
    if (v <= 0) return;
    const x = xs(lev);
    pts.push([x, ys(v)]);
    f.svg.line(x, ys(lows[i]), x, ys(Math.max(highs[i], 1e-300)), PALETTE[0]); // CI whisker
    f.svg.line(x - 4, ys(lows[i]), x + 4, ys(lows[i]), PALETTE[0]);
    f.svg.line(x - 4, ys(highs[i]), x + 4, ys(highs[i]), PALETTE[0]);
  });
  f.svg.polyline(pts, PALETTE[0]);
  for (const [x, y] of pts) f.svg.circle(x, y, 3, PALETTE[0]);
  return f.svg.render();
}

interface Bar {
  label: string;
  log10: number;
  caption: string;
}

export function momentsFigure(report: MomentReport, file: string): string {
  const f = frame(`moment report: ${file}`, "", `E(sup |X|^${report.p}) and bounds (log10)`);
  const bars: Bar[] = [
    {
      label: "estimate",
      log10: Math.log10(report.estimate),
      caption: fmtTick(report.estimate),
    },
  ];
  for (const [name, bound] of [
    ["bound_i", report.bound_i],
    ["bound_ii", report.bound_ii],
  ] as const) {
    if (bound) {
      const l10 = bound.log_value / LN10;
      const caption = bound.value !== null ? fmtTick(bound.value) : `1e${Math.round(l10)}`;
      bars.push({ label: name, log10: l10, caption });
    }
  }
  const lo = Math.min(0, ...bars.map((b) => b.log10)) - 1;
  const hi = Math.max(0, ...bars.map((b) => b.log10)) + 1;
  const ys = linearScale(lo, hi, f.y0, f.y1);
  for (const tick of niceTicks(lo, hi, 6)) yTick(f, ys(tick), `1e${fmtTick(tick)}`);

  const slot = (f.x1 - f.x0) / bars.length;
  bars.forEach((bar, i) => {
    const cx = f.x0 + slot * (i + 0.5);
    const w = slot * 0.5;
    const base = f.y0;
    // bars rise from the axis floor; keep tiny-but-real values visible
    const height = Math.max(base - ys(bar.log10), 2);
    f.svg.rect(cx - w / 2, base - height, w, height, PALETTE[i % PALETTE.length]);
    f.svg.text(cx, base - height - 6, bar.caption, { size: 10 });
    xTick(f, cx, bar.label);
  });
  return f.svg.render();
}

export function confluenceHistFigure(stats: ConfluenceStats, file: string): string {
  const f = frame(`min distance over ${stats.min_distances.length} coupled paths: ${file}`,
    "min distance", "paths");
  const values = stats.min_distances;
  const hi = Math.max(...values);
  const lo = Math.min(...values, 0);
  const nBins = 20;
  const width = (hi - lo) / nBins || 1;
  const counts = new Array<number>(nBins).fill(0);
  for (const v of values) {
    const bin = Math.min(Math.floor((v - lo) / width), nBins - 1);
    counts[bin] += 1;
  }
  const xs = linearScale(lo, lo + width * nBins, f.x0, f.x1);
  const ys = linearScale(0, Math.max(...counts) * 1.05, f.y0, f.y1);
  for (const tick of niceTicks(0, Math.max(...counts), 5)) yTick(f, ys(tick), fmtTick(tick));
  for (const tick of niceTicks(lo, hi, 6)) xTick(f, xs(tick), fmtTick(tick));
  counts.forEach((count, i) => {
    const x = xs(lo + i * width);
    const x2 = xs(lo + (i + 1) * width);
    f.svg.rect(x, ys(count), Math.max(x2 - x - 1, 1), f.y0 - ys(count), PALETTE[0]);
  });
  return f.svg.render();
}

export function pathsFigure(series: PathSeries[]): string {
  const f = frame(`sample paths (${series.length})`, "t", "x1");
  const allT = series.flatMap((s) => s.t);
  const allX = series.flatMap((s) => s.x1);
  const xs = linearScale(Math.min(...allT), Math.max(...allT), f.x0, f.x1);
  const pad = (Math.max(...allX) - Math.min(...allX)) * 0.05 || 1;
  const ys = linearScale(Math.min(...allX) - pad, Math.max(...allX) + pad, f.y0, f.y1);
  for (const tick of niceTicks(Math.min(...allT), Math.max(...allT), 6)) xTick(f, xs(tick), fmtTick(tick));
  for (const tick of niceTicks(Math.min(...allX) - pad, Math.max(...allX) + pad, 6)) {
    yTick(f, ys(tick), fmtTick(tick));
  }
  series.forEach((s, i) => {
    const color = PALETTE[i % PALETTE.length];
    f.svg.polyline(s.t.map((t, k) => [xs(t), ys(s.x1[k])] as [number, number]), color, 1);
    if (s.stoppedIndex !== null) {
      f.svg.circle(xs(s.t[s.stoppedIndex]), ys(s.x1[s.stoppedIndex]), 4, "#d62728");
    }
    f.svg.text(f.x1 - 4, f.y1 + 14 + 13 * i, s.label, { size: 10, anchor: "end" });
  });
  return f.svg.render();
}
