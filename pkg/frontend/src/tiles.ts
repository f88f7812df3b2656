/**
 * Tile discovery and decoding.
 *
 * A tile directory holds one subdirectory per slide, with tiles named
 * `<patch_id>_<x>_<y>.png`; the filename carries the patch coordinates so
 * no sidecar metadata is needed.
 */

import * as fs from "node:fs";
import * as path from "node:path";
import { PNG } from "pngjs";

import { InputError } from "./errors.js";

const TILE_NAME = /^(\d+)_(-?\d+)_(-?\d+)\.png$/;

export interface TileRef {
  wsiId: string;
  patchId: number;
  x: number;
  y: number;
  path: string;
}

/** Decoded pixels, always RGBA with 8 bits per channel. */
export interface Tile extends TileRef {
  width: number;
  height: number;
  pixels: Buffer;
}

export function parseTileName(wsiId: string, fileName: string, filePath: string): TileRef | null {
  const m = TILE_NAME.exec(fileName);
  if (!m) return null;
  return {
    wsiId,
    patchId: Number.parseInt(m[1], 10),
    x: Number.parseInt(m[2], 10),
    y: Number.parseInt(m[3], 10),
    path: filePath,
  };
}

/** All tile refs under tilesDir, grouped by slide, ordered by patch id. */
export function scanTiles(tilesDir: string): Map<string, TileRef[]> {
  if (!fs.existsSync(tilesDir) || !fs.statSync(tilesDir).isDirectory()) {
    throw new InputError(`${tilesDir}: not a directory`);
  }
  const slides = new Map<string, TileRef[]>();
  const entries = fs.readdirSync(tilesDir, { withFileTypes: true })
    .filter((e) => e.isDirectory())
    .map((e) => e.name)
    .sort();
  for (const wsiId of entries) {
    const dir = path.join(tilesDir, wsiId);
    const refs: TileRef[] = [];
    for (const name of fs.readdirSync(dir).sort()) {
      const ref = parseTileName(wsiId, name, path.join(dir, name));
      if (ref) refs.push(ref);
    }
    if (refs.length === 0) continue;
    refs.sort((a, b) => a.patchId - b.patchId);
    const seen = new Set<number>();
    for (const ref of refs) {
      if (seen.has(ref.patchId)) {
        throw new InputError(`${dir}: duplicate patch_id ${ref.patchId}`);
      }
      seen.add(ref.patchId);
    }
    slides.set(wsiId, refs);
  }
  return slides;
}

export function decodeTile(ref: TileRef): Tile {
  const png = PNG.sync.read(fs.readFileSync(ref.path));
  return {
    ...ref,
    width: png.width,
    height: png.height,
    pixels: png.data, // RGBA, 8-bit
  };
}
