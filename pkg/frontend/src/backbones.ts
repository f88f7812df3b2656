/**
 * Backbone registry.
 *
 * A backbone maps one decoded tile to a fixed-length float vector.
 * Inference is deterministic: the same tile bytes always produce the
 * same vector. The built-ins are weightless pooled-color extractors so
 * the bridge runs self-contained; network models plug in by registering
 * another factory (BackboneSpec is the contract, not the arithmetic).
 */

import { ModelLoadError } from "./errors.js";
import type { Tile } from "./tiles.js";

export interface BackboneSpec {
  name: string;
  weightsRef: string | null;
  inputSize: number; // pooling grid side the tile is resampled onto
  outputDim: number;
}

export interface Backbone {
  spec: BackboneSpec;
  embed(tile: Tile): Float32Array;
}

/**
 * Box-average the tile onto a grid x grid raster, RGB channels scaled to
 * [0, 1], row-major, channel-minor. Output length 3 * grid^2.
 */
function pooledRgb(tile: Tile, grid: number): Float32Array {
  const out = new Float32Array(3 * grid * grid);
  const counts = new Float64Array(grid * grid);
  const sums = new Float64Array(3 * grid * grid);
  const { pixels, width, height } = tile;
  for (let y = 0; y < height; y++) {
    const gy = Math.min(grid - 1, Math.floor((y * grid) / height));
    for (let x = 0; x < width; x++) {
      const gx = Math.min(grid - 1, Math.floor((x * grid) / width));
      const cell = gy * grid + gx;
      const base = (y * width + x) * 4;
      counts[cell] += 1;
      for (let c = 0; c < 3; c++) {
        sums[cell * 3 + c] += pixels[base + c];
      }
    }
  }
  for (let cell = 0; cell < grid * grid; cell++) {
    for (let c = 0; c < 3; c++) {
      out[cell * 3 + c] = counts[cell] > 0
        ? Math.fround(sums[cell * 3 + c] / (255 * counts[cell]))
        : 0;
    }
  }
  return out;
}

function gridBackbone(grid: number): Backbone {
  return {
    spec: {
      name: `grid-rgb-${grid}`,
      weightsRef: null,
      inputSize: grid,
      outputDim: 3 * grid * grid,
    },
    embed: (tile) => pooledRgb(tile, grid),
  };
}

const REGISTRY = new Map<string, () => Backbone>([
  ["grid-rgb-4", () => gridBackbone(4)],
  ["grid-rgb-8", () => gridBackbone(8)],
  ["grid-rgb-16", () => gridBackbone(16)],
]);

export function backboneNames(): string[] {
  return [...REGISTRY.keys()];
}

export function loadBackbone(name: string): Backbone {
  const factory = REGISTRY.get(name);
  if (!factory) {
    throw new ModelLoadError(
      `unknown backbone '${name}' (available: ${backboneNames().join(", ")})`);
  }
  return factory();
}

export function registerBackbone(name: string, factory: () => Backbone): void {
  REGISTRY.set(name, factory);
}
