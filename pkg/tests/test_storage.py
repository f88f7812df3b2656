from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from conftest import barcode_set, float_set
from mosaix.errors import (
    BadMagic,
    FormatError,
    TooShort,
    TruncatedPayload,
    UnsupportedVersion,
)
from mosaix.metric import binarize_minmax
from mosaix.model import EmbeddingKind, EmbeddingSet
from mosaix.storage import (
    convert_to_barcodes,
    embeddings_to_bytes,
    read_embeddings,
    resolve_embedding_ref,
    write_embeddings,
)

GOLDEN = Path(__file__).parent / "golden"


class TestGoldenFiles:
    def test_float_1x1_bytes_and_parse(self, tmp_path):
        es = float_set("A", [[0.5]])
        assert embeddings_to_bytes(es) == (GOLDEN / "float_1x1.wsie").read_bytes()
        parsed = read_embeddings(GOLDEN / "float_1x1.wsie")
        assert parsed == es
        # payload is exactly the 4 little-endian bytes of IEEE-754 0.5
        assert (GOLDEN / "float_1x1.wsie").read_bytes()[-4:] == b"\x00\x00\x00\x3f"

    def test_barcode_1x9_all_ones_packs_msb_first(self):
        es = barcode_set("bc", [[1] * 9])
        blob = embeddings_to_bytes(es)
        assert blob == (GOLDEN / "barcode_1x9.wsie").read_bytes()
        assert blob[-2:] == b"\xff\x80"
        assert read_embeddings(GOLDEN / "barcode_1x9.wsie") == es

    def test_float_2x3_golden(self):
        es = float_set("slide_7", [[0.5, -2.0, 1.5], [3.25, 0.125, -0.75]])
        assert embeddings_to_bytes(es) == (GOLDEN / "float_2x3.wsie").read_bytes()
        assert read_embeddings(GOLDEN / "float_2x3.wsie") == es

    def test_barcode_2x5_row_padding(self):
        es = barcode_set("z", [[1, 0, 1, 1, 0], [0, 1, 0, 0, 1]])
        blob = embeddings_to_bytes(es)
        assert blob == (GOLDEN / "barcode_2x5.wsie").read_bytes()
        assert blob[-2:] == bytes([0b10110000, 0b01001000])


def random_set(rng, kind):
    n = int(rng.integers(1, 12))
    d = int(rng.integers(1, 40))
    if kind is EmbeddingKind.FLOAT:
        return float_set(f"w{rng.integers(0, 10 ** 6)}", rng.normal(size=(n, d)))
    return barcode_set(f"w{rng.integers(0, 10 ** 6)}", rng.integers(0, 2, (n, d)))


class TestRoundTrip:
    def test_fuzzed_round_trips_bitwise(self, tmp_path, rng):
        path = tmp_path / "t.wsie"
        for trial in range(100):
            kind = EmbeddingKind.FLOAT if trial % 2 else EmbeddingKind.BARCODE
            es = random_set(rng, kind)
            write_embeddings(es, path)
            back = read_embeddings(path)
            assert back.wsi_id == es.wsi_id
            assert back.kind == es.kind
            assert back.vectors.tobytes() == es.vectors.tobytes()

    def test_large_set_round_trip(self, tmp_path, rng):
        es = float_set("big", rng.normal(size=(500, 256)))
        path = tmp_path / "big.wsie"
        write_embeddings(es, path)
        assert read_embeddings(path) == es

    def test_max_documented_size_round_trip(self, tmp_path, rng):
        # the biggest shape the format is promised for: 10,000 x 4,096
        vectors = rng.standard_normal(size=(10_000, 4_096), dtype=np.float32)
        es = EmbeddingSet("max", vectors, EmbeddingKind.FLOAT)
        path = tmp_path / "max.wsie"
        write_embeddings(es, path)
        back = read_embeddings(path)
        assert back.vectors.tobytes() == es.vectors.tobytes()
        assert path.stat().st_size == 18 + 3 + 10_000 * 4_096 * 4

        bits = rng.integers(0, 2, (10_000, 4_096)).astype(np.uint8)
        bset = EmbeddingSet("maxbits", bits, EmbeddingKind.BARCODE)
        write_embeddings(bset, path)
        assert read_embeddings(path) == bset

    # the temp file is overwritten per example, so fixture reuse is fine
    @settings(max_examples=50, deadline=None,
              suppress_health_check=[HealthCheck.function_scoped_fixture])
    @given(st.integers(1, 8), st.integers(1, 33),
           st.sampled_from(["float", "barcode"]),
           st.text(min_size=0, max_size=12), st.integers(0, 2 ** 31))
    def test_hypothesis_round_trip(self, tmp_path, n, d, kind, wsi_id, seed):
        rng = np.random.default_rng(seed)
        if kind == "float":
            es = EmbeddingSet(wsi_id, rng.normal(size=(n, d)).astype(np.float32),
                              EmbeddingKind.FLOAT)
        else:
            es = EmbeddingSet(wsi_id, rng.integers(0, 2, (n, d)).astype(np.uint8),
                              EmbeddingKind.BARCODE)
        path = tmp_path / "h.wsie"
        write_embeddings(es, path)
        assert read_embeddings(path) == es


class TestReadErrors:
    def test_bad_magic(self, tmp_path):
        p = tmp_path / "x.wsie"
        blob = (GOLDEN / "float_1x1.wsie").read_bytes()
        p.write_bytes(b"XXXX" + blob[4:])
        with pytest.raises(BadMagic):
            read_embeddings(p)

    def test_unsupported_version(self, tmp_path):
        p = tmp_path / "x.wsie"
        blob = bytearray((GOLDEN / "float_1x1.wsie").read_bytes())
        blob[4:6] = (9).to_bytes(2, "little")
        p.write_bytes(bytes(blob))
        with pytest.raises(UnsupportedVersion):
            read_embeddings(p)

    def test_truncated_payload(self, tmp_path):
        p = tmp_path / "x.wsie"
        blob = (GOLDEN / "float_2x3.wsie").read_bytes()
        p.write_bytes(blob[:-1])
        with pytest.raises(TruncatedPayload):
            read_embeddings(p)

    def test_trailing_garbage_rejected(self, tmp_path):
        p = tmp_path / "x.wsie"
        p.write_bytes((GOLDEN / "float_2x3.wsie").read_bytes() + b"\x00")
        with pytest.raises(TruncatedPayload):
            read_embeddings(p)

    def test_truncated_header(self, tmp_path):
        p = tmp_path / "x.wsie"
        p.write_bytes((GOLDEN / "float_1x1.wsie").read_bytes()[:10])
        with pytest.raises(TruncatedPayload):
            read_embeddings(p)

    def test_unknown_kind_code(self, tmp_path):
        p = tmp_path / "x.wsie"
        blob = bytearray((GOLDEN / "float_1x1.wsie").read_bytes())
        blob[6] = 7
        p.write_bytes(bytes(blob))
        with pytest.raises(FormatError):
            read_embeddings(p)

    def test_nonzero_reserved_byte_rejected(self, tmp_path):
        p = tmp_path / "x.wsie"
        blob = bytearray((GOLDEN / "float_1x1.wsie").read_bytes())
        blob[7] = 1
        p.write_bytes(bytes(blob))
        with pytest.raises(FormatError):
            read_embeddings(p)

    def test_missing_file_is_oserror(self, tmp_path):
        with pytest.raises(OSError):
            read_embeddings(tmp_path / "nope.wsie")


class TestConvertToBarcodes:
    def test_constant_rows_become_zero_barcodes(self, tmp_path):
        src, dst = tmp_path / "f.wsie", tmp_path / "b.wsie"
        write_embeddings(float_set("c", [[1.0, 1.0, 1.0], [2.0, 2.0, 2.0]]), src)
        convert_to_barcodes(src, dst)
        out = read_embeddings(dst)
        assert out.kind is EmbeddingKind.BARCODE
        assert out.dim == 2
        assert out.vectors.tolist() == [[0, 0], [0, 0]]

    def test_increasing_rows_become_one_barcodes(self, tmp_path):
        src, dst = tmp_path / "f.wsie", tmp_path / "b.wsie"
        write_embeddings(float_set("inc", [np.arange(5.0)]), src)
        convert_to_barcodes(src, dst)
        assert read_embeddings(dst).vectors.tolist() == [[1, 1, 1, 1]]

    def test_rows_match_per_row_binarize(self, tmp_path, rng):
        src, dst = tmp_path / "f.wsie", tmp_path / "b.wsie"
        es = float_set("r", rng.normal(size=(6, 9)))
        write_embeddings(es, src)
        convert_to_barcodes(src, dst)
        out = read_embeddings(dst)
        assert out.wsi_id == "r"
        for row, brow in zip(es.vectors, out.vectors):
            assert brow.tolist() == binarize_minmax(row.astype(np.float64)).tolist()

    def test_dim_one_raises_too_short(self, tmp_path):
        src = tmp_path / "f.wsie"
        write_embeddings(float_set("one", [[0.5], [0.25]]), src)
        with pytest.raises(TooShort):
            convert_to_barcodes(src, tmp_path / "b.wsie")

    def test_barcode_input_rejected(self, tmp_path):
        src = tmp_path / "b.wsie"
        write_embeddings(barcode_set("b", [[0, 1, 0]]), src)
        with pytest.raises(FormatError):
            convert_to_barcodes(src, tmp_path / "c.wsie")


class TestRefResolution:
    def test_absolute_ref_passes_through(self):
        assert resolve_embedding_ref("/abs/x.wsie") == Path("/abs/x.wsie")

    def test_data_dir_wins_over_env_and_default(self, monkeypatch, tmp_path):
        monkeypatch.setenv("MOSAIX_DATA_DIR", str(tmp_path / "env"))
        got = resolve_embedding_ref("e.wsie", data_dir=tmp_path / "cli",
                                    default_dir=tmp_path / "man")
        assert got == tmp_path / "cli" / "e.wsie"

    def test_env_wins_over_default(self, monkeypatch, tmp_path):
        monkeypatch.setenv("MOSAIX_DATA_DIR", str(tmp_path / "env"))
        got = resolve_embedding_ref("e.wsie", default_dir=tmp_path / "man")
        assert got == tmp_path / "env" / "e.wsie"

    def test_default_dir_used_last(self, monkeypatch, tmp_path):
        monkeypatch.delenv("MOSAIX_DATA_DIR", raising=False)
        got = resolve_embedding_ref("e.wsie", default_dir=tmp_path / "man")
        assert got == tmp_path / "man" / "e.wsie"
