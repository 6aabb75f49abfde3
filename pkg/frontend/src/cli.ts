#!/usr/bin/env node
/**
 * figures <kind> --in data.csv [more.csv ...] --out figure.svg|png
 *                [--labels a,b,c]
 *
 * kinds: density | profile | heatmap | functions | trend
 * The extension of --out picks the writer; SVG carries text labels, PNG is
 * the dependency-free raster of the same scene.
 */

import { writeFileSync } from "node:fs";
import { loadCsv, SchemaError } from "./csv.js";
import { FigureKind, render } from "./figures.js";
import { toPng } from "./png.js";
import { toSvg } from "./svg.js";

const KINDS: FigureKind[] = ["density", "profile", "heatmap", "functions", "trend"];

export function main(argv: string[]): number {
  try {
    const { kind, inputs, out, labels } = parseArgs(argv);
    const scene = render(
      kind,
      inputs.map((source, i) => ({
        table: loadCsv(source),
        source,
        label: labels[i],
      })),
    );
    if (out.endsWith(".png")) {
      writeFileSync(out, toPng(scene));
    } else if (out.endsWith(".svg")) {
      writeFileSync(out, toSvg(scene));
    } else {
      throw new UsageError(`--out must end in .svg or .png, got ${out}`);
    }
    return 0;
  } catch (err) {
    if (err instanceof UsageError) {
      process.stderr.write(`usage error: ${err.message}\n`);
      return 64;
    }
    if (err instanceof SchemaError) {
      process.stderr.write(`schema error: ${err.message}\n`);
      return 2;
    }
    throw err;
  }
}

class UsageError extends Error {}

function parseArgs(argv: string[]): {
  kind: FigureKind;
  inputs: string[];
  out: string;
  labels: string[];
} {
  if (argv.length === 0) {
    throw new UsageError(`missing figure kind; choose from ${KINDS.join(", ")}`);
  }
  const kind = argv[0] as FigureKind;
  if (!KINDS.includes(kind)) {
    throw new UsageError(`unknown kind "${argv[0]}"; choose from ${KINDS.join(", ")}`);
  }
  const inputs: string[] = [];
  let out = "";
  let labels: string[] = [];
  for (let i = 1; i < argv.length; i++) {
    const a = argv[i];
    if (a === "--in") {
      while (i + 1 < argv.length && !argv[i + 1].startsWith("--")) {
        inputs.push(argv[++i]);
      }
    } else if (a === "--out") {
      out = argv[++i] ?? "";
    } else if (a === "--labels") {
      labels = (argv[++i] ?? "").split(",");
    } else {
      throw new UsageError(`unknown flag ${a}`);
    }
  }
  if (inputs.length === 0) throw new UsageError("--in requires at least one CSV");
  if (!out) throw new UsageError("--out is required");
  return { kind, inputs, out, labels };
}

if (process.argv[1] && process.argv[1].endsWith("cli.js")) {
  process.exit(main(process.argv.slice(2)));
}
