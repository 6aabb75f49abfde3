/**
 * Deterministic SVG writer: fixed attribute order, fixed number formatting
 * (3 decimal places, no scientific notation), no timestamps or ids, so a
 * scene always serializes to identical bytes.
 */

import { Primitive, Scene } from "./scene.js";

const px = (v: number): string => {
  const s = v.toFixed(3);
  return s === "-0.000" ? "0.000" : s;
};

function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;");
}

function emit(p: Primitive): string {
  switch (p.kind) {
    case "rect":
      return `<rect x="${px(p.x)}" y="${px(p.y)}" width="${px(Math.max(p.w, 0))}" height="${px(Math.max(p.h, 0))}" fill="${p.fill}"/>`;
    case "line":
      return `<line x1="${px(p.x1)}" y1="${px(p.y1)}" x2="${px(p.x2)}" y2="${px(p.y2)}" stroke="${p.stroke}" stroke-width="${px(p.width)}"/>`;
    case "polyline": {
      const pts = p.points.map(([x, y]) => `${px(x)},${px(y)}`).join(" ");
      return `<polyline points="${pts}" fill="none" stroke="${p.stroke}" stroke-width="${px(p.width)}"/>`;
    }
    case "text":
      return `<text x="${px(p.x)}" y="${px(p.y)}" font-family="Helvetica, Arial, sans-serif" font-size="${px(p.size)}" text-anchor="${p.anchor}" fill="${p.fill}">${esc(p.text)}</text>`;
  }
}

export function toSvg(scene: Scene): string {
  const body = scene.primitives.map(emit).join("\n  ");
  return `<svg xmlns="http://www.w3.org/2000/svg" width="${scene.width}" height="${scene.height}" viewBox="0 0 ${scene.width} ${scene.height}">
  <rect x="0.000" y="0.000" width="${px(scene.width)}" height="${px(scene.height)}" fill="${scene.background}"/>
  ${body}
</svg>
`;
}
