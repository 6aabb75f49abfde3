/**
 * The five figure kinds, each mapping CLI CSV tables to a Scene.  No
 * numerical logic lives here: every number plotted was computed upstream.
 */

import { basename } from "node:path";
import { SchemaError, Table, pickColumn } from "./csv.js";
import { extent, makeAxes, newScene, padded } from "./plot.js";
import { PALETTE, Scene, heatColor } from "./scene.js";

export type FigureKind = "density" | "profile" | "heatmap" | "functions" | "trend";

export interface FigureInput {
  table: Table;
  source: string;
  label?: string;
}

export function render(kind: FigureKind, inputs: FigureInput[]): Scene {
  switch (kind) {
    case "density":
      return curves(inputs, ["tau", "beta", "kappa"], "density");
    case "profile":
      return curves(inputs, ["kappa"], "shrinkage profile");
    case "heatmap":
      return heatmap(single(inputs, "heatmap"));
    case "functions":
      return functions(single(inputs, "functions"));
    case "trend":
      return trend(single(inputs, "trend"));
  }
}

function single(inputs: FigureInput[], kind: string): FigureInput {
  if (inputs.length !== 1) {
    throw new SchemaError(`${kind} takes exactly one input CSV, got ${inputs.length}`);
  }
  return inputs[0];
}

function labelOf(input: FigureInput): string {
  return input.label ?? basename(input.source).replace(/\.csv$/, "");
}

function curves(inputs: FigureInput[], xCandidates: string[], title: string): Scene {
  if (inputs.length === 0) throw new SchemaError("no input CSVs given");
  const series = inputs.map((input) => {
    const xCol = pickColumn(input.table, xCandidates, input.source);
    return {
      x: input.table.col(xCol),
      y: input.table.col("density"),
      xCol,
      label: labelOf(input),
    };
  });
  const xDomain = padded(extent(series.flatMap((s) => s.x)));
  const yDomain = padded([0, extent(series.flatMap((s) => s.y))[1]]);
  const scene = newScene();
  const axes = makeAxes({
    xLabel: series[0].xCol,
    yLabel: "density",
    title,
    xDomain,
    yDomain,
  });
  scene.primitives.push(...axes.primitives);
  series.forEach((s, i) => {
    const color = PALETTE[i % PALETTE.length];
    scene.primitives.push({
      kind: "polyline",
      points: s.x.map((v, k) => [axes.x(v), axes.y(s.y[k])] as [number, number]),
      stroke: color,
      width: 1.8,
    });
    const ly = 40 + 16 * i;
    scene.primitives.push({ kind: "line", x1: 76, y1: ly - 4, x2: 100, y2: ly - 4, stroke: color, width: 2.5 });
    scene.primitives.push({ kind: "text", x: 106, y: ly, text: s.label, size: 12, anchor: "start", fill: "#222222" });
  });
  return scene;
}

function heatmap(input: FigureInput): Scene {
  const t = input.table;
  const t1 = t.col("tau1");
  const t2 = t.col("tau2");
  const dens = t.col("density");
  const degen = t.col("degenerate");
  const xs = unique(t1);
  const ys = unique(t2);
  const maxDens = Math.max(...dens, 1e-300);
  const scene = newScene();
  const axes = makeAxes({
    xLabel: "tau1",
    yLabel: "tau2",
    title: "joint density (hatched = degenerate)",
    xDomain: extent(xs),
    yDomain: extent(ys),
  });
  // cell size from grid spacing (uniform grids come from the CLI)
  const dx = xs.length > 1 ? axes.x(xs[1]) - axes.x(xs[0]) : 24;
  const dy = ys.length > 1 ? Math.abs(axes.y(ys[1]) - axes.y(ys[0])) : 24;
  for (let i = 0; i < t.rows.length; i++) {
    const px = axes.x(t1[i]) - dx / 2;
    const py = axes.y(t2[i]) - dy / 2;
    if (degen[i] !== 0) {
      scene.primitives.push({ kind: "rect", x: px, y: py, w: dx, h: dy, fill: "#bbbbbb" });
      scene.primitives.push({
        kind: "line", x1: px, y1: py + dy, x2: px + dx, y2: py,
        stroke: "#666666", width: 1,
      });
    } else {
      scene.primitives.push({
        kind: "rect", x: px, y: py, w: dx, h: dy,
        fill: heatColor(maxDens > 0 ? dens[i] / maxDens : 0),
      });
    }
  }
  scene.primitives.push(...axes.primitives);
  return scene;
}

function functions(input: FigureInput): Scene {
  const t = input.table;
  const ids = t.col("draw_id");
  const xs = t.col("x");
  const ys = t.col("y");
  const byDraw = new Map<number, Array<[number, number]>>();
  for (let i = 0; i < ids.length; i++) {
    const arr = byDraw.get(ids[i]) ?? [];
    arr.push([xs[i], ys[i]]);
    byDraw.set(ids[i], arr);
  }
  const scene = newScene();
  const axes = makeAxes({
    xLabel: "x",
    yLabel: "f(x)",
    title: `${byDraw.size} prior function draws`,
    xDomain: padded(extent(xs)),
    yDomain: padded(extent(ys)),
  });
  scene.primitives.push(...axes.primitives);
  let i = 0;
  for (const [, pts] of [...byDraw.entries()].sort((a, b) => a[0] - b[0])) {
    scene.primitives.push({
      kind: "polyline",
      points: pts.map(([x, y]) => [axes.x(x), axes.y(y)] as [number, number]),
      stroke: PALETTE[i % PALETTE.length],
      width: 1.6,
    });
    i += 1;
  }
  return scene;
}

function trend(input: FigureInput): Scene {
  const t = input.table;
  const y = t.col("tail_prob");
  const xName = t.columns.find((c) => c !== "tail_prob");
  if (t.columns.length !== 2 || !xName) {
    throw new SchemaError(
      `${input.source}: trend needs exactly two columns, one named "tail_prob"`,
    );
  }
  const x = t.col(xName);
  const scene = newScene();
  const axes = makeAxes({
    xLabel: xName,
    yLabel: "P(tau > threshold)",
    title: `tail probability vs ${xName}`,
    xDomain: padded(extent(x)),
    yDomain: padded([0, extent(y)[1]]),
  });
  scene.primitives.push(...axes.primitives);
  const color = PALETTE[3];
  scene.primitives.push({
    kind: "polyline",
    points: x.map((v, k) => [axes.x(v), axes.y(y[k])] as [number, number]),
    stroke: color,
    width: 1.8,
  });
  for (let k = 0; k < x.length; k++) {
    scene.primitives.push({
      kind: "rect", x: axes.x(x[k]) - 2.5, y: axes.y(y[k]) - 2.5, w: 5, h: 5, fill: color,
    });
  }
  return scene;
}

function unique(values: number[]): number[] {
  return [...new Set(values)].sort((a, b) => a - b);
}
