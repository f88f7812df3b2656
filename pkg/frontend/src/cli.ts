#!/usr/bin/env node
/**
 * bridge: export engine-format files from WSI patch tiles.
 *
 *   bridge colors  --tiles <dir> --out <dir>
 *   bridge extract --tiles <dir> --backbone <name> --mosaic <json> --out <dir>
 *
 * Exit codes: 0 success, 1 validation failure, 2 I/O failure.
 */

import * as process from "node:process";

import { backboneNames, loadBackbone } from "./backbones.js";
import { BridgeError } from "./errors.js";
import { extractColorFeatures, extractEmbeddings, readMosaicJson } from "./extract.js";

const USAGE = `usage:
  bridge colors  --tiles <dir> --out <dir>
  bridge extract --tiles <dir> --backbone <name> --mosaic <json> --out <dir>

Tiles are PNGs laid out as <tiles>/<wsi_id>/<patch_id>_<x>_<y>.png.
'colors' writes one patch-table CSV per slide (24-dim RGB histograms).
'extract' writes one float32 embedding file per mosaic entry.
Backbones: ${backboneNames().join(", ")}.
`;

function parseFlags(argv: string[], allowed: string[]): Map<string, string> {
  const flags = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 2) {
    const key = argv[i];
    if (!key.startsWith("--") || !allowed.includes(key.slice(2))) {
      throw new BridgeError(`unknown flag ${key}`);
    }
    const value = argv[i + 1];
    if (value === undefined) {
      throw new BridgeError(`flag ${key} needs a value`);
    }
    flags.set(key.slice(2), value);
  }
  return flags;
}

function required(flags: Map<string, string>, name: string): string {
  const value = flags.get(name);
  if (!value) throw new BridgeError(`missing required flag --${name}`);
  return value;
}

export function main(argv: string[]): number {
  const [command, ...rest] = argv;
  if (!command || command === "--help" || command === "-h") {
    process.stdout.write(USAGE);
    return command ? 0 : 1;
  }
  try {
    if (command === "colors") {
      const flags = parseFlags(rest, ["tiles", "out"]);
      const tiles = required(flags, "tiles");
      const out = required(flags, "out");
      process.stderr.write(`config: command=colors tiles=${tiles} out=${out}\n`);
      const result = extractColorFeatures(tiles, out,
        (msg) => process.stderr.write(`warning: ${msg}\n`));
      process.stdout.write(
        `${result.csvPaths.length} slide CSV(s), ${result.tilesRead} tiles read, ` +
        `${result.tilesSkipped} skipped -> ${out}\n`);
      return 0;
    }
    if (command === "extract") {
      const flags = parseFlags(rest, ["tiles", "backbone", "mosaic", "out"]);
      const tiles = required(flags, "tiles");
      const backboneName = required(flags, "backbone");
      const mosaicPath = required(flags, "mosaic");
      const out = required(flags, "out");
      process.stderr.write(
        `config: command=extract tiles=${tiles} backbone=${backboneName} ` +
        `mosaic=${mosaicPath} out=${out}\n`);
      const backbone = loadBackbone(backboneName);
      const mosaics = readMosaicJson(mosaicPath);
      const result = extractEmbeddings(tiles, backbone, mosaics, out);
      process.stdout.write(
        `${result.files.length} embedding file(s), ${result.rowsWritten} rows ` +
        `(${backbone.spec.name}, dim ${backbone.spec.outputDim}) -> ${out}\n`);
      return 0;
    }
    process.stderr.write(`error: unknown command '${command}'\n${USAGE}`);
    return 1;
  } catch (err) {
    if (err instanceof BridgeError) {
      process.stderr.write(`error: ${err.message}\n`);
      return 1;
    }
    if (err && (err as NodeJS.ErrnoException).code) {
      process.stderr.write(`error: ${(err as Error).message}\n`);
      return 2;
    }
    throw err;
  }
}

if (import.meta.url === `file://${process.argv[1]}`) {
  process.exit(main(process.argv.slice(2)));
}
