/**
 * The two bridge operations: color-feature CSVs for mosaic building, and
 * engine-format embedding files for mosaicked tiles. One-way data flow:
 * the bridge only exports files, it never computes distances or mosaics.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import type { Backbone } from "./backbones.js";
import { InputError, MissingTile } from "./errors.js";
import { encodeEmbeddingFile, encodePatchCsv, PatchRow } from "./formats.js";
import { colorHistogram } from "./histogram.js";
import { decodeTile, scanTiles, TileRef } from "./tiles.js";

export interface ColorFeatureResult {
  csvPaths: string[];
  tilesRead: number;
  tilesSkipped: number;
}

/**
 * One patch-table CSV per slide under outDir, named `<wsi_id>.csv`.
 * Unreadable tiles are skipped with a warning; throws only when no tile
 * anywhere could be read.
 */
export function extractColorFeatures(
  tilesDir: string,
  outDir: string,
  warn: (msg: string) => void = (msg) => console.warn(msg),
): ColorFeatureResult {
  const slides = scanTiles(tilesDir);
  if (slides.size === 0) {
    throw new InputError(`${tilesDir}: no slide directories with tiles`);
  }
  fs.mkdirSync(outDir, { recursive: true });
  const csvPaths: string[] = [];
  let tilesRead = 0;
  let tilesSkipped = 0;
  for (const [wsiId, refs] of slides) {
    const rows: PatchRow[] = [];
    for (const ref of refs) {
      let row: PatchRow;
      try {
        const tile = decodeTile(ref);
        row = {
          patchId: ref.patchId,
          x: ref.x,
          y: ref.y,
          width: tile.width,
          height: tile.height,
          features: colorHistogram(tile),
        };
      } catch (err) {
        warn(`skipping unreadable tile ${ref.path}: ${(err as Error).message}`);
        tilesSkipped += 1;
        continue;
      }
      rows.push(row);
      tilesRead += 1;
    }
    if (rows.length === 0) {
      warn(`slide ${wsiId}: every tile was unreadable, no CSV written`);
      continue;
    }
    const csvPath = path.join(outDir, `${wsiId}.csv`);
    fs.writeFileSync(csvPath, encodePatchCsv(rows), "utf-8");
    csvPaths.push(csvPath);
  }
  if (tilesRead === 0) {
    throw new InputError(`${tilesDir}: no readable tiles`);
  }
  return { csvPaths, tilesRead, tilesSkipped };
}

export type MosaicMap = Record<string, number[]>;

export function readMosaicJson(mosaicPath: string): MosaicMap {
  let data: unknown;
  try {
    data = JSON.parse(fs.readFileSync(mosaicPath, "utf-8"));
  } catch (err) {
    if (err instanceof SyntaxError) {
      throw new InputError(`${mosaicPath}: not valid JSON (${err.message})`);
    }
    throw err;
  }
  if (typeof data !== "object" || data === null || Array.isArray(data)) {
    throw new InputError(`${mosaicPath}: mosaic JSON must map wsi_id to patch id lists`);
  }
  for (const [wsiId, ids] of Object.entries(data)) {
    if (!Array.isArray(ids) || !ids.every((i) => Number.isInteger(i))) {
      throw new InputError(`${mosaicPath}: mosaic for '${wsiId}' must be a list of integers`);
    }
  }
  return data as MosaicMap;
}

export interface ExtractResult {
  files: string[];
  rowsWritten: number;
}

/**
 * One `<wsi_id>.wsie` float32 file per mosaic entry, rows following the
 * mosaic's patch order exactly. Throws MissingTile when a listed patch
 * has no tile on disk.
 */
export function extractEmbeddings(
  tilesDir: string,
  backbone: Backbone,
  mosaics: MosaicMap,
  outDir: string,
): ExtractResult {
  const slides = scanTiles(tilesDir);
  fs.mkdirSync(outDir, { recursive: true });
  const files: string[] = [];
  let rowsWritten = 0;
  for (const wsiId of Object.keys(mosaics).sort()) {
    const ids = mosaics[wsiId];
    if (ids.length === 0) {
      throw new InputError(`${wsiId}: empty mosaic`);
    }
    const refs = slides.get(wsiId);
    if (!refs) {
      throw new MissingTile(`${wsiId}: no tile directory under ${tilesDir}`);
    }
    const byId = new Map<number, TileRef>(refs.map((r) => [r.patchId, r]));
    const rows: Float32Array[] = [];
    for (const patchId of ids) {
      const ref = byId.get(patchId);
      if (!ref) {
        throw new MissingTile(`${wsiId}: mosaic patch ${patchId} has no tile`);
      }
      const vector = backbone.embed(decodeTile(ref));
      if (vector.length !== backbone.spec.outputDim) {
        throw new InputError(
          `${backbone.spec.name}: emitted ${vector.length} dims, spec says ${backbone.spec.outputDim}`);
      }
      rows.push(vector);
    }
    const filePath = path.join(outDir, `${wsiId}.wsie`);
    fs.writeFileSync(filePath, encodeEmbeddingFile(wsiId, rows));
    files.push(filePath);
    rowsWritten += rows.length;
  }
  return { files, rowsWritten };
}
