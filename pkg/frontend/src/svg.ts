/**
 * Minimal deterministic SVG scaffolding: scales, ticks, axes, shapes.
 * Pure string building; the same inputs always produce the same bytes.
 */

export interface Margins {
  left: number;
  right: number;
  top: number;
  bottom: number;
}

export const WIDTH = 640;
export const HEIGHT = 420;
export const MARGINS: Margins = { left: 64, right: 20, top: 34, bottom: 48 };

export type Scale = (v: number) => number;

export function linearScale(d0: number, d1: number, r0: number, r1: number): Scale {
  const span = d1 - d0 || 1;
  return (v) => r0 + ((v - d0) / span) * (r1 - r0);
}

export function log10Scale(d0: number, d1: number, r0: number, r1: number): Scale {
  const l0 = Math.log10(d0);
  const l1 = Math.log10(d1);
  const span = l1 - l0 || 1;
  return (v) => r0 + ((Math.log10(v) - l0) / span) * (r1 - r0);
}

export function niceTicks(lo: number, hi: number, n = 5): number[] {
  if (!(hi > lo)) return [lo];
  const step = Math.pow(10, Math.floor(Math.log10((hi - lo) / n)));
  const err = (hi - lo) / n / step;
  const mult = err >= 7.5 ? 10 : err >= 3.5 ? 5 : err >= 1.5 ? 2 : 1;
  const s = mult * step;
  const ticks: number[] = [];
  for (let v = Math.ceil(lo / s) * s; v <= hi + s / 1e6; v += s) {
    ticks.push(Number(v.toPrecision(12)));
  }
  return ticks;
}

export function decadeTicks(lo: number, hi: number): number[] {
  const ticks: number[] = [];
  for (let e = Math.ceil(Math.log10(lo)); e <= Math.floor(Math.log10(hi)); e++) {
    ticks.push(Math.pow(10, e));
  }
  return ticks.length ? ticks : [lo];
}

export function fmtTick(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-3) return v.toExponential(0).replace("+", "");
  return String(Number(v.toPrecision(6)));
}

const esc = (s: string) =>
  s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;").replace(/"/g, "&quot;");

export class Svg {
  private parts: string[] = [];

  constructor(readonly width = WIDTH, readonly height = HEIGHT) {}

  line(x1: number, y1: number, x2: number, y2: number, stroke: string, w = 1): void {
    this.parts.push(
      `<line x1="${r(x1)}" y1="${r(y1)}" x2="${r(x2)}" y2="${r(y2)}" stroke="${stroke}" stroke-width="${w}"/>`,
    );
  }

  polyline(pts: Array<[number, number]>, stroke: string, w = 1.5): void {
    const d = pts.map(([x, y]) => `${r(x)},${r(y)}`).join(" ");
    this.parts.push(`<polyline points="${d}" fill="none" stroke="${stroke}" stroke-width="${w}"/>`);
  }

  circle(cx: number, cy: number, radius: number, fill: string): void {
    this.parts.push(`<circle cx="${r(cx)}" cy="${r(cy)}" r="${radius}" fill="${fill}"/>`);
  }

  rect(x: number, y: number, w: number, h: number, fill: string): void {
    this.parts.push(`<rect x="${r(x)}" y="${r(y)}" width="${r(w)}" height="${r(h)}" fill="${fill}"/>`);
  }

  text(x: number, y: number, content: string, opts: { size?: number; anchor?: string; rotate?: boolean } = {}): void {
    const size = opts.size ?? 11;
    const anchor = opts.anchor ?? "middle";
    const transform = opts.rotate ? ` transform="rotate(-90 ${r(x)} ${r(y)})"` : "";
    this.parts.push(
      `<text x="${r(x)}" y="${r(y)}" font-size="${size}" font-family="sans-serif" text-anchor="${anchor}"${transform}>${esc(content)}</text>`,
    );
  }

  render(): string {
    return (
      `<svg xmlns="http://www.w3.org/2000/svg" width="${this.width}" height="${this.height}" ` +
      `viewBox="0 0 ${this.width} ${this.height}">\n<rect width="100%" height="100%" fill="white"/>\n` +
      this.parts.join("\n") +
      "\n</svg>\n"
    );
  }
}

function r(v: number): string {
  return String(Math.round(v * 100) / 100);
}

export const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

export interface Frame {
  svg: Svg;
  x0: number;
  x1: number;
  y0: number;
  y1: number;
}

/** Plot frame with title and axis labels; returns the inner data region. */
export function frame(title: string, xLabel: string, yLabel: string): Frame {
  const svg = new Svg();
  const x0 = MARGINS.left;
  const x1 = WIDTH - MARGINS.right;
  const y0 = HEIGHT - MARGINS.bottom;
  const y1 = MARGINS.top;
  svg.text(WIDTH / 2, 18, title, { size: 14 });
  svg.text((x0 + x1) / 2, HEIGHT - 10, xLabel);
  svg.text(16, (y0 + y1) / 2, yLabel, { rotate: true });
  svg.line(x0, y0, x1, y0, "#000");
  svg.line(x0, y0, x0, y1, "#000");
  return { svg, x0, x1, y0, y1 };
}

export function xTick(f: Frame, px: number, label: string): void {
  f.svg.line(px, f.y0, px, f.y0 + 4, "#000");
  f.svg.text(px, f.y0 + 16, label, { size: 10 });
}

export function yTick(f: Frame, py: number, label: string): void {
  f.svg.line(f.x0 - 4, py, f.x0, py, "#000");
  f.svg.line(f.x0, py, f.x1, py, "#eee");
  f.svg.text(f.x0 - 7, py + 3, label, { size: 10, anchor: "end" });
}
