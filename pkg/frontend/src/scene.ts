/**
 * A figure is a flat list of primitives in pixel coordinates.  Both writers
 * (SVG and the rasterizer) consume the same scene, so the two outputs always
 * agree about geometry; the rasterizer simply skips text.
 */

export interface Rect {
  kind: "rect";
  x: number;
  y: number;
  w: number;
  h: number;
  fill: string;
}

export interface Line {
  kind: "line";
  x1: number;
  y1: number;
  x2: number;
  y2: number;
  stroke: string;
  width: number;
}

export interface Polyline {
  kind: "polyline";
  points: Array<[number, number]>;
  stroke: string;
  width: number;
}

export interface Text {
  kind: "text";
  x: number;
  y: number;
  text: string;
  size: number;
  anchor: "start" | "middle" | "end";
  fill: string;
}

export type Primitive = Rect | Line | Polyline | Text;

export interface Scene {
  width: number;
  height: number;
  background: string;
  primitives: Primitive[];
}

export const PALETTE = [
  "#2a7f3f", // green
  "#7b3fa0", // purple
  "#c23b3b", // red
  "#2b6abf", // blue
  "#b8860b", // dark goldenrod
  "#444444",
];

/** five-stop heat ramp, dark blue -> yellow */
const RAMP: Array<[number, number, number]> = [
  [22, 30, 84],
  [49, 94, 150],
  [53, 160, 152],
  [146, 207, 80],
  [250, 230, 60],
];

export function heatColor(t: number): string {
  const x = Math.min(Math.max(t, 0), 1) * (RAMP.length - 1);
  const i = Math.min(Math.floor(x), RAMP.length - 2);
  const f = x - i;
  const mix = RAMP[i].map((a, k) => Math.round(a + f * (RAMP[i + 1][k] - a)));
  return rgb(mix[0], mix[1], mix[2]);
}

export function rgb(r: number, g: number, b: number): string {
  const h = (v: number) => v.toString(16).padStart(2, "0");
  return `#${h(r)}${h(g)}${h(b)}`;
}
