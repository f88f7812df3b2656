import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";
import { afterEach, beforeEach, describe, expect, it } from "vitest";

import { loadBackbone } from "../src/backbones.js";
import { MissingTile, ModelLoadError } from "../src/errors.js";
import {
  extractColorFeatures,
  extractEmbeddings,
  readMosaicJson,
} from "../src/extract.js";
import { solid, speckle, writeFixtureCohort, writePng } from "./fixtures.js";

let dir: string;

beforeEach(() => {
  dir = fs.mkdtempSync(path.join(os.tmpdir(), "bridge-extract-"));
});
afterEach(() => {
  fs.rmSync(dir, { recursive: true, force: true });
});

const tiles = () => path.join(dir, "tiles");
const out = () => path.join(dir, "out");

describe("extractColorFeatures", () => {
  it("writes one schema-conformant CSV per slide", () => {
    writeFixtureCohort(tiles());
    const result = extractColorFeatures(tiles(), out(), () => {});
    expect(result.csvPaths).toHaveLength(3);
    expect(result.tilesRead).toBe(6);
    const csv = fs.readFileSync(path.join(out(), "wsi_red.csv"), "utf-8");
    const lines = csv.trim().split("\n");
    const header = lines[0].split(",");
    expect(header.slice(0, 5)).toEqual(["patch_id", "x", "y", "width", "height"]);
    expect(header.slice(5)).toEqual(
      Array.from({ length: 24 }, (_, i) => `f${i}`));
    expect(lines).toHaveLength(3); // header + 2 patches
    const row = lines[1].split(",");
    expect(row[0]).toBe("0");
    expect(row[3]).toBe("16");
  });

  it("skips unreadable tiles with a warning and keeps going", () => {
    writeFixtureCohort(tiles());
    fs.writeFileSync(path.join(tiles(), "wsi_red", "5_0_0.png"), "not a png");
    const warnings: string[] = [];
    const result = extractColorFeatures(tiles(), out(), (m) => warnings.push(m));
    expect(result.tilesSkipped).toBe(1);
    expect(result.tilesRead).toBe(6);
    expect(warnings.some((w) => w.includes("5_0_0.png"))).toBe(true);
  });

  it("fails only when no tile anywhere is readable", () => {
    writePng(path.join(tiles(), "w", "0_0_0.png"), 4, 4, solid(1, 2, 3));
    fs.writeFileSync(path.join(tiles(), "w", "0_0_0.png"), "garbage");
    expect(() => extractColorFeatures(tiles(), out(), () => {})).toThrow(/no readable/);
  });
});

describe("extractEmbeddings", () => {
  function mosaicFile(mosaics: Record<string, number[]>): string {
    const p = path.join(dir, "mosaic.json");
    fs.writeFileSync(p, JSON.stringify(mosaics));
    return p;
  }

  it("writes one wsie file per slide with rows in mosaic order", () => {
    writeFixtureCohort(tiles());
    const backbone = loadBackbone("grid-rgb-4");
    const mosaics = readMosaicJson(
      mosaicFile({ wsi_red: [1, 0], wsi_green: [0, 1], wsi_blue: [0, 1] }));
    const result = extractEmbeddings(tiles(), backbone, mosaics, out());
    expect(result.files).toHaveLength(3);
    expect(result.rowsWritten).toBe(6);

    const blob = fs.readFileSync(path.join(out(), "wsi_red.wsie"));
    expect(blob.subarray(0, 4).toString("ascii")).toBe("WSIE");
    expect(blob.readUInt16LE(4)).toBe(1); // version
    expect(blob.readUInt8(6)).toBe(0); // float32
    expect(blob.readUInt8(7)).toBe(0); // reserved
    expect(blob.readUInt32LE(8)).toBe(backbone.spec.outputDim);
    expect(blob.readUInt32LE(12)).toBe(2);
    const idLen = blob.readUInt16LE(16);
    expect(blob.subarray(18, 18 + idLen).toString("utf-8")).toBe("wsi_red");
    expect(blob.length).toBe(18 + idLen + 2 * backbone.spec.outputDim * 4);

    // mosaic order [1, 0]: first row must be patch 1's embedding
    const swapped = extractEmbeddings(
      tiles(), backbone, { wsi_red: [0, 1] }, path.join(dir, "out2"));
    const reblob = fs.readFileSync(swapped.files[0]);
    const row = (b: Buffer, i: number) =>
      b.subarray(18 + idLen + i * backbone.spec.outputDim * 4,
                 18 + idLen + (i + 1) * backbone.spec.outputDim * 4);
    expect(row(blob, 0).equals(row(reblob, 1))).toBe(true);
    expect(row(blob, 1).equals(row(reblob, 0))).toBe(true);
  });

  it("is bit-identical across repeated extraction", () => {
    writeFixtureCohort(tiles());
    const backbone = loadBackbone("grid-rgb-8");
    const mosaics = { wsi_red: [0, 1], wsi_green: [0, 1], wsi_blue: [0, 1] };
    extractEmbeddings(tiles(), backbone, mosaics, path.join(dir, "a"));
    extractEmbeddings(tiles(), backbone, mosaics, path.join(dir, "b"));
    for (const wsi of Object.keys(mosaics)) {
      const a = fs.readFileSync(path.join(dir, "a", `${wsi}.wsie`));
      const b = fs.readFileSync(path.join(dir, "b", `${wsi}.wsie`));
      expect(a.equals(b)).toBe(true);
    }
  });

  it("emits identical rows for the same tile listed twice", () => {
    writePng(path.join(tiles(), "w", "3_0_0.png"), 8, 8, speckle(3));
    const backbone = loadBackbone("grid-rgb-4");
    const result = extractEmbeddings(tiles(), backbone, { w: [3, 3] }, out());
    const blob = fs.readFileSync(result.files[0]);
    const idLen = blob.readUInt16LE(16);
    const dim = blob.readUInt32LE(8);
    const first = blob.subarray(18 + idLen, 18 + idLen + dim * 4);
    const second = blob.subarray(18 + idLen + dim * 4, 18 + idLen + 2 * dim * 4);
    expect(first.equals(second)).toBe(true);
  });

  it("raises MissingTile for a mosaic id with no tile", () => {
    writeFixtureCohort(tiles());
    const backbone = loadBackbone("grid-rgb-4");
    expect(() => extractEmbeddings(tiles(), backbone, { wsi_red: [0, 9] }, out()))
      .toThrow(MissingTile);
    expect(() => extractEmbeddings(tiles(), backbone, { ghost: [0] }, out()))
      .toThrow(MissingTile);
  });

  it("rejects unknown backbones", () => {
    expect(() => loadBackbone("resnet-900")).toThrow(ModelLoadError);
  });
});
