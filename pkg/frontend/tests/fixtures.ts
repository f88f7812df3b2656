/** Deterministic PNG fixtures for bridge tests. */

import * as fs from "node:fs";
import * as path from "node:path";
import { PNG } from "pngjs";

export type PixelFn = (x: number, y: number) => [number, number, number];

export function writePng(filePath: string, width: number, height: number,
                         pixel: PixelFn): void {
  const png = new PNG({ width, height });
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      const [r, g, b] = pixel(x, y);
      const base = (y * width + x) * 4;
      png.data[base] = r;
      png.data[base + 1] = g;
      png.data[base + 2] = b;
      png.data[base + 3] = 255;
    }
  }
  fs.mkdirSync(path.dirname(filePath), { recursive: true });
  fs.writeFileSync(filePath, PNG.sync.write(png));
}

export const solid = (r: number, g: number, b: number): PixelFn => () => [r, g, b];

/** Deterministic speckle pattern, distinct per (seed, position). */
export const speckle = (seed: number): PixelFn => (x, y) => {
  const h = (n: number) => {
    let v = (n ^ (seed * 2654435761)) >>> 0;
    v = Math.imul(v ^ (v >>> 16), 2246822519) >>> 0;
    v = Math.imul(v ^ (v >>> 13), 3266489917) >>> 0;
    return (v ^ (v >>> 16)) >>> 0;
  };
  const k = h(x * 73856093 + y * 19349663);
  return [k & 0xff, (k >> 8) & 0xff, (k >> 16) & 0xff];
};

/**
 * A 3-slide, 6-tile cohort (one slide per patient) where each slide's
 * tiles are dominated by one color family, so retrieval has signal.
 */
export function writeFixtureCohort(tilesDir: string): string[] {
  const slides: Array<[string, [number, number, number]]> = [
    ["wsi_red", [200, 30, 30]],
    ["wsi_green", [30, 200, 30]],
    ["wsi_blue", [30, 30, 200]],
  ];
  const written: string[] = [];
  slides.forEach(([wsiId, [r, g, b]], slideIdx) => {
    for (let patch = 0; patch < 2; patch++) {
      const file = path.join(tilesDir, wsiId, `${patch}_${patch * 32}_0.png`);
      writePng(file, 16, 16, (x, y) => {
        const jitter = ((x * 7 + y * 13 + patch * 29 + slideIdx * 31) % 11) - 5;
        const clamp = (v: number) => Math.max(0, Math.min(255, v + jitter));
        return [clamp(r), clamp(g), clamp(b)];
      });
      written.push(file);
    }
  });
  return written;
}
