/**
 * Axes, scales, and tick layout shared by every figure kind.  All numbers
 * are formatted through one fixed routine so output never depends on locale
 * or incidental float noise.
 */

import { Primitive, Scene } from "./scene.js";

export interface Margins {
  left: number;
  right: number;
  top: number;
  bottom: number;
}

export const FRAME = { width: 640, height: 420 };
export const MARGINS: Margins = { left: 64, right: 16, top: 28, bottom: 46 };

export interface LinearScale {
  (v: number): number;
  domain: [number, number];
  range: [number, number];
}

export function linearScale(domain: [number, number], range: [number, number]): LinearScale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0 || 1;
  const f = ((v: number) => r0 + ((v - d0) / span) * (r1 - r0)) as LinearScale;
  f.domain = domain;
  f.range = range;
  return f;
}

export function extent(values: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (!Number.isFinite(lo) || !Number.isFinite(hi)) return [0, 1];
  if (lo === hi) return [lo - 0.5, hi + 0.5];
  return [lo, hi];
}

export function padded([lo, hi]: [number, number], frac = 0.04): [number, number] {
  const pad = (hi - lo) * frac;
  return [lo - pad, hi + pad];
}

/** round-numbered ticks covering the domain, at most n of them */
export function ticks([lo, hi]: [number, number], n = 6): number[] {
  const span = hi - lo;
  if (span <= 0) return [lo];
  const raw = span / n;
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  const steps = [1, 2, 2.5, 5, 10];
  let step = steps[steps.length - 1] * mag;
  for (const s of steps) {
    if (s * mag >= raw) {
      step = s * mag;
      break;
    }
  }
  const out: number[] = [];
  for (let v = Math.ceil(lo / step) * step; v <= hi + 1e-12 * span; v += step) {
    out.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  }
  return out;
}

export function fmtTick(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e5 || a < 1e-3) return v.toExponential(1).replace("e+", "e");
  const s = v.toPrecision(4);
  return s.includes(".") ? s.replace(/\.?0+$/, "") : s;
}

export interface AxesSpec {
  xLabel: string;
  yLabel: string;
  title?: string;
  xDomain: [number, number];
  yDomain: [number, number];
}

export interface Axes {
  x: LinearScale;
  y: LinearScale;
  primitives: Primitive[];
}

export function makeAxes(spec: AxesSpec): Axes {
  const x = linearScale(spec.xDomain, [MARGINS.left, FRAME.width - MARGINS.right]);
  const y = linearScale(spec.yDomain, [FRAME.height - MARGINS.bottom, MARGINS.top]);
  const prims: Primitive[] = [];
  const axisColor = "#333333";
  const gridColor = "#dddddd";
  const x0 = MARGINS.left;
  const x1 = FRAME.width - MARGINS.right;
  const y0 = FRAME.height - MARGINS.bottom;
  const y1 = MARGINS.top;
  for (const t of ticks(spec.xDomain)) {
    const px = x(t);
    prims.push({ kind: "line", x1: px, y1: y0, x2: px, y2: y1, stroke: gridColor, width: 1 });
    prims.push({ kind: "line", x1: px, y1: y0, x2: px, y2: y0 + 4, stroke: axisColor, width: 1 });
    prims.push({ kind: "text", x: px, y: y0 + 17, text: fmtTick(t), size: 11, anchor: "middle", fill: axisColor });
  }
  for (const t of ticks(spec.yDomain)) {
    const py = y(t);
    prims.push({ kind: "line", x1: x0, y1: py, x2: x1, y2: py, stroke: gridColor, width: 1 });
    prims.push({ kind: "line", x1: x0 - 4, y1: py, x2: x0, y2: py, stroke: axisColor, width: 1 });
    prims.push({ kind: "text", x: x0 - 7, y: py + 4, text: fmtTick(t), size: 11, anchor: "end", fill: axisColor });
  }
  prims.push({ kind: "line", x1: x0, y1: y0, x2: x1, y2: y0, stroke: axisColor, width: 1.5 });
  prims.push({ kind: "line", x1: x0, y1: y0, x2: x0, y2: y1, stroke: axisColor, width: 1.5 });
  prims.push({
    kind: "text", x: (x0 + x1) / 2, y: FRAME.height - 10, text: spec.xLabel,
    size: 13, anchor: "middle", fill: axisColor,
  });
  prims.push({
    kind: "text", x: 16, y: y1 - 8, text: spec.yLabel, size: 13,
    anchor: "start", fill: axisColor,
  });
  if (spec.title) {
    prims.push({
      kind: "text", x: (x0 + x1) / 2, y: 16, text: spec.title, size: 14,
      anchor: "middle", fill: "#111111",
    });
  }
  return { x, y, primitives: prims };
}

export function newScene(): Scene {
  return { width: FRAME.width, height: FRAME.height, background: "#ffffff", primitives: [] };
}
