"""Binary embedding files and path resolution.

File layout (all integers little-endian):

    offset  size  field
    0       4     magic "WSIE"
    4       2     version (u16, currently 1)
    6       1     kind (u8): 0 = float32, 1 = barcode
    7       1     reserved (u8, must be 0)
    8       4     dim (u32)
    12      4     count (u32)
    16      2     wsi_id_len (u16)
    18      n     wsi_id, UTF-8
    18+n    -     payload

Float32 payload: count x dim IEEE-754 binary32 values, row-major.
Barcode payload: count rows of ceil(dim/8) bytes, bits packed MSB-first,
row-padded with zero bits. Both are byte-exact across platforms.
"""

from __future__ import annotations

import os
import struct
from pathlib import Path

import numpy as np

from mosaix.errors import (
    BadMagic,
    FormatError,
    TooShort,
    TruncatedPayload,
    UnsupportedVersion,
)
from mosaix.metric import binarize_minmax
from mosaix.model import DatasetManifest, EmbeddingKind, EmbeddingSet

__all__ = [
    "MAGIC",
    "FORMAT_VERSION",
    "write_embeddings",
    "read_embeddings",
    "convert_to_barcodes",
    "resolve_embedding_ref",
    "load_manifest_embeddings",
    "DATA_DIR_ENV",
]

MAGIC = b"WSIE"
FORMAT_VERSION = 1
DATA_DIR_ENV = "MOSAIX_DATA_DIR"

_KIND_CODES = {EmbeddingKind.FLOAT: 0, EmbeddingKind.BARCODE: 1}
_CODE_KINDS = {v: k for k, v in _KIND_CODES.items()}
_FIXED_HEADER = struct.Struct("<HBBIIH")  # version, kind, reserved, dim, count, wsi_id_len


def _payload_bytes(kind: EmbeddingKind, count: int, dim: int) -> int:
    if kind is EmbeddingKind.FLOAT:
        return count * dim * 4
    return count * ((dim + 7) // 8)


def embeddings_to_bytes(es: EmbeddingSet) -> bytes:
    wsi_id = es.wsi_id.encode("utf-8")
    if len(wsi_id) > 0xFFFF:
        raise FormatError(f"wsi_id too long to store ({len(wsi_id)} bytes)")
    header = MAGIC + _FIXED_HEADER.pack(FORMAT_VERSION, _KIND_CODES[es.kind], 0,
                                        es.dim, es.n, len(wsi_id)) + wsi_id
    if es.kind is EmbeddingKind.FLOAT:
        payload = es.vectors.astype("<f4", copy=False).tobytes()
    else:
        payload = np.packbits(es.vectors, axis=1).tobytes()
    return header + payload


def write_embeddings(es: EmbeddingSet, path: str | Path):
    Path(path).write_bytes(embeddings_to_bytes(es))


def embeddings_from_bytes(blob: bytes, source: str = "<bytes>") -> EmbeddingSet:
    if len(blob) < 4 or blob[:4] != MAGIC:
        raise BadMagic(f"{source}: not an embedding file (bad magic)")
    if len(blob) < 4 + _FIXED_HEADER.size:
        raise TruncatedPayload(f"{source}: header truncated")
    version, kind_code, reserved, dim, count, id_len = _FIXED_HEADER.unpack_from(blob, 4)
    if version != FORMAT_VERSION:
        raise UnsupportedVersion(f"{source}: format version {version}, expected {FORMAT_VERSION}")
    if kind_code not in _CODE_KINDS:
        raise FormatError(f"{source}: unknown kind code {kind_code}")
    if reserved != 0:
        raise FormatError(f"{source}: reserved header byte must be 0, got {reserved}")
    if dim < 1 or count < 1:
        raise FormatError(f"{source}: dim and count must be >= 1 (got dim={dim}, count={count})")

    id_start = 4 + _FIXED_HEADER.size
    if len(blob) < id_start + id_len:
        raise TruncatedPayload(f"{source}: wsi_id truncated")
    wsi_id = blob[id_start:id_start + id_len].decode("utf-8")

    kind = _CODE_KINDS[kind_code]
    payload = blob[id_start + id_len:]
    expected = _payload_bytes(kind, count, dim)
    if len(payload) != expected:
        raise TruncatedPayload(
            f"{source}: payload is {len(payload)} bytes, header implies {expected}")

    if kind is EmbeddingKind.FLOAT:
        vectors = np.frombuffer(payload, dtype="<f4").reshape(count, dim)
    else:
        row_bytes = (dim + 7) // 8
        packed = np.frombuffer(payload, dtype=np.uint8).reshape(count, row_bytes)
        vectors = np.unpackbits(packed, axis=1)[:, :dim]
    return EmbeddingSet(wsi_id=wsi_id, vectors=vectors, kind=kind)


def read_embeddings(path: str | Path) -> EmbeddingSet:
    return embeddings_from_bytes(Path(path).read_bytes(), source=str(path))


def convert_to_barcodes(float_file: str | Path, out_file: str | Path):
    """Rewrite a float32 embedding file as a barcode file of dim-1 bits."""
    es = read_embeddings(float_file)
    if es.kind is not EmbeddingKind.FLOAT:
        raise FormatError(f"{float_file}: already a barcode file")
    if es.dim < 2:
        raise TooShort(f"{float_file}: need dim >= 2 to binarize, got {es.dim}")
    bits = np.stack([binarize_minmax(row) for row in es.vectors.astype(np.float64)])
    write_embeddings(EmbeddingSet(wsi_id=es.wsi_id, vectors=bits,
                                  kind=EmbeddingKind.BARCODE), out_file)


def resolve_embedding_ref(ref: str, data_dir: str | Path | None = None,
                          default_dir: str | Path | None = None) -> Path:
    """Resolve a manifest embedding_ref to a concrete path.

    Absolute refs pass through; relative refs resolve against --data-dir,
    then $MOSAIX_DATA_DIR, then default_dir (normally the manifest's own
    directory).
    """
    p = Path(ref)
    if p.is_absolute():
        return p
    if data_dir is not None:
        return Path(data_dir) / p
    env = os.environ.get(DATA_DIR_ENV)
    if env:
        return Path(env) / p
    if default_dir is not None:
        return Path(default_dir) / p
    return p


def load_manifest_embeddings(manifest: DatasetManifest,
                             manifest_path: str | Path | None = None,
                             data_dir: str | Path | None = None) -> dict[str, EmbeddingSet]:
    """Load every WSI's embedding set referenced by a manifest."""
    default_dir = Path(manifest_path).parent if manifest_path is not None else None
    out = {}
    for rec in manifest.wsis:
        path = resolve_embedding_ref(rec.embedding_ref, data_dir=data_dir, default_dir=default_dir)
        out[rec.wsi_id] = read_embeddings(path)
    return out
