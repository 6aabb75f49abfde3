/**
 * Self-contained rasterizer and PNG encoder.
 *
 * The scene's rects, lines, and polylines are drawn into an RGB buffer
 * (boxes filled, strokes via Bresenham with square pens); text is skipped,
 * which keeps the encoder dependency-free — the SVG output carries labels.
 * Deflate runs at a fixed level so identical scenes produce identical bytes.
 */

import { deflateSync } from "node:zlib";
import { Primitive, Scene } from "./scene.js";

class Raster {
  data: Uint8Array;

  constructor(readonly width: number, readonly height: number) {
    this.data = new Uint8Array(width * height * 3).fill(255);
  }

  set(x: number, y: number, rgb: [number, number, number]): void {
    if (x < 0 || y < 0 || x >= this.width || y >= this.height) return;
    const o = (y * this.width + x) * 3;
    this.data[o] = rgb[0];
    this.data[o + 1] = rgb[1];
    this.data[o + 2] = rgb[2];
  }

  fillRect(x0: number, y0: number, w: number, h: number, rgb: [number, number, number]): void {
    const xa = Math.round(x0);
    const ya = Math.round(y0);
    const xb = Math.round(x0 + w);
    const yb = Math.round(y0 + h);
    for (let y = ya; y < Math.max(yb, ya + 1); y++) {
      for (let x = xa; x < Math.max(xb, xa + 1); x++) {
        this.set(x, y, rgb);
      }
    }
  }

  lineSeg(x1: number, y1: number, x2: number, y2: number, width: number,
          rgb: [number, number, number]): void {
    let xa = Math.round(x1);
    let ya = Math.round(y1);
    const xb = Math.round(x2);
    const yb = Math.round(y2);
    const dx = Math.abs(xb - xa);
    const dy = -Math.abs(yb - ya);
    const sx = xa < xb ? 1 : -1;
    const sy = ya < yb ? 1 : -1;
    let err = dx + dy;
    const r = Math.max(Math.round(width / 2) - 1, 0);
    for (;;) {
      for (let oy = -r; oy <= r; oy++) {
        for (let ox = -r; ox <= r; ox++) {
          this.set(xa + ox, ya + oy, rgb);
        }
      }
      this.set(xa, ya, rgb);
      if (xa === xb && ya === yb) break;
      const e2 = 2 * err;
      if (e2 >= dy) {
        err += dy;
        xa += sx;
      }
      if (e2 <= dx) {
        err += dx;
        ya += sy;
      }
    }
  }
}

function parseColor(c: string): [number, number, number] {
  const m = /^#([0-9a-f]{6})$/i.exec(c);
  if (!m) return [0, 0, 0];
  const v = parseInt(m[1], 16);
  return [(v >> 16) & 255, (v >> 8) & 255, v & 255];
}

function draw(r: Raster, p: Primitive): void {
  switch (p.kind) {
    case "rect":
      r.fillRect(p.x, p.y, p.w, p.h, parseColor(p.fill));
      break;
    case "line":
      r.lineSeg(p.x1, p.y1, p.x2, p.y2, p.width, parseColor(p.stroke));
      break;
    case "polyline": {
      const c = parseColor(p.stroke);
      for (let i = 1; i < p.points.length; i++) {
        const [x1, y1] = p.points[i - 1];
        const [x2, y2] = p.points[i];
        if ([x1, y1, x2, y2].every(Number.isFinite)) {
          r.lineSeg(x1, y1, x2, y2, p.width, c);
        }
      }
      break;
    }
    case "text":
      break; // labels live in the SVG output
  }
}

// --- PNG container -------------------------------------------------------

const CRC_TABLE = (() => {
  const t = new Uint32Array(256);
  for (let n = 0; n < 256; n++) {
    let c = n;
    for (let k = 0; k < 8; k++) c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1;
    t[n] = c >>> 0;
  }
  return t;
})();

function crc32(buf: Uint8Array): number {
  let c = 0xffffffff;
  for (let i = 0; i < buf.length; i++) {
    c = CRC_TABLE[(c ^ buf[i]) & 0xff] ^ (c >>> 8);
  }
  return (c ^ 0xffffffff) >>> 0;
}

function chunk(type: string, data: Uint8Array): Buffer {
  const head = Buffer.alloc(8);
  head.writeUInt32BE(data.length, 0);
  head.write(type, 4, "ascii");
  const body = Buffer.concat([head.subarray(4), data]);
  const crc = Buffer.alloc(4);
  crc.writeUInt32BE(crc32(body), 0);
  return Buffer.concat([head, data, crc]);
}

export function toPng(scene: Scene): Buffer {
  const raster = new Raster(scene.width, scene.height);
  raster.fillRect(0, 0, scene.width, scene.height, parseColor(scene.background));
  for (const p of scene.primitives) draw(raster, p);

  const stride = scene.width * 3;
  const raw = Buffer.alloc((stride + 1) * scene.height);
  for (let y = 0; y < scene.height; y++) {
    raw[y * (stride + 1)] = 0; // filter: none
    raw.set(raster.data.subarray(y * stride, (y + 1) * stride), y * (stride + 1) + 1);
  }
  const ihdr = Buffer.alloc(13);
  ihdr.writeUInt32BE(scene.width, 0);
  ihdr.writeUInt32BE(scene.height, 4);
  ihdr[8] = 8; // bit depth
  ihdr[9] = 2; // color type: truecolor
  const idat = deflateSync(raw, { level: 9, memLevel: 8, strategy: 0 });
  return Buffer.concat([
    Buffer.from([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a]),
    chunk("IHDR", ihdr),
    chunk("IDAT", idat),
    chunk("IEND", new Uint8Array(0)),
  ]);
}
