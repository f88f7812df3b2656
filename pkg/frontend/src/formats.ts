/**
 * Engine file formats emitted by the bridge.
 *
 * The embedding container is byte-exact: magic "WSIE", version 1,
 * little-endian header (kind u8: 0 float32, reserved u8 = 0, dim u32,
 * count u32, wsi_id length u16 + UTF-8 id), then count*dim IEEE-754
 * binary32 values in row-major order. The patch table is a CSV with
 * header `patch_id,x,y,width,height,f0..f{F-1}`.
 */

import { InputError } from "./errors.js";

export const WSIE_MAGIC = "WSIE";
export const WSIE_VERSION = 1;
export const KIND_FLOAT32 = 0;

export function encodeEmbeddingFile(wsiId: string, rows: Float32Array[]): Buffer {
  if (rows.length === 0) throw new InputError(`${wsiId}: no embedding rows`);
  const dim = rows[0].length;
  if (dim === 0) throw new InputError(`${wsiId}: zero-dimensional embedding`);
  for (const row of rows) {
    if (row.length !== dim) {
      throw new InputError(`${wsiId}: ragged embedding rows (${row.length} != ${dim})`);
    }
  }
  const idBytes = Buffer.from(wsiId, "utf-8");
  if (idBytes.length > 0xffff) throw new InputError(`${wsiId}: wsi_id too long`);

  const header = Buffer.alloc(4 + 14 + idBytes.length);
  header.write(WSIE_MAGIC, 0, "ascii");
  header.writeUInt16LE(WSIE_VERSION, 4);
  header.writeUInt8(KIND_FLOAT32, 6);
  header.writeUInt8(0, 7); // reserved
  header.writeUInt32LE(dim, 8);
  header.writeUInt32LE(rows.length, 12);
  header.writeUInt16LE(idBytes.length, 16);
  idBytes.copy(header, 18);

  const payload = Buffer.alloc(rows.length * dim * 4);
  let offset = 0;
  for (const row of rows) {
    for (let k = 0; k < dim; k++) {
      payload.writeFloatLE(row[k], offset);
      offset += 4;
    }
  }
  return Buffer.concat([header, payload]);
}

export interface PatchRow {
  patchId: number;
  x: number;
  y: number;
  width: number;
  height: number;
  features: number[];
}

export function encodePatchCsv(rows: PatchRow[]): string {
  if (rows.length === 0) throw new InputError("no patch rows to write");
  const nFeatures = rows[0].features.length;
  const header = ["patch_id", "x", "y", "width", "height"];
  for (let i = 0; i < nFeatures; i++) header.push(`f${i}`);
  const lines = [header.join(",")];
  for (const row of rows) {
    if (row.features.length !== nFeatures) {
      throw new InputError(`patch ${row.patchId}: ragged feature row`);
    }
    const fields = [row.patchId, row.x, row.y, row.width, row.height,
      ...row.features];
    lines.push(fields.map(String).join(","));
  }
  return lines.join("\n") + "\n";
}
