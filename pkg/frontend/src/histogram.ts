/**
 * Color descriptor for mosaic clustering: an 8-bin histogram per RGB
 * channel, each channel L1-normalized (its 8 bins sum to 1), 24 values
 * total in R,G,B channel order.
 */

import type { Tile } from "./tiles.js";

export const BINS_PER_CHANNEL = 8;
export const FEATURE_DIM = 3 * BINS_PER_CHANNEL;

export function colorHistogram(tile: Tile): number[] {
  const counts = new Array<number>(FEATURE_DIM).fill(0);
  const { pixels, width, height } = tile;
  const nPixels = width * height;
  for (let p = 0; p < nPixels; p++) {
    const base = p * 4; // RGBA
    for (let c = 0; c < 3; c++) {
      const bin = pixels[base + c] >> 5; // 256 values -> 8 bins
      counts[c * BINS_PER_CHANNEL + bin] += 1;
    }
  }
  return counts.map((v) => v / nPixels);
}
