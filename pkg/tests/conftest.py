from __future__ import annotations

import numpy as np
import pytest

from mosaix.model import (
    DatasetManifest,
    EmbeddingKind,
    EmbeddingSet,
    LabelGranularity,
    WsiRecord,
)


def float_set(wsi_id: str, rows, dtype=np.float32) -> EmbeddingSet:
    return EmbeddingSet(wsi_id=wsi_id, vectors=np.asarray(rows, dtype=dtype),
                        kind=EmbeddingKind.FLOAT)


def barcode_set(wsi_id: str, rows) -> EmbeddingSet:
    return EmbeddingSet(wsi_id=wsi_id, vectors=np.asarray(rows, dtype=np.uint8),
                        kind=EmbeddingKind.BARCODE)


def make_manifest(entries, classes, name="test", granularity=LabelGranularity.PATIENT):
    """entries: iterable of (wsi_id, patient_id, label[, mosaic])."""
    wsis = []
    for entry in entries:
        wsi_id, patient_id, label = entry[:3]
        mosaic = entry[3] if len(entry) > 3 else (0, 1)
        wsis.append(WsiRecord(wsi_id=wsi_id, patient_id=patient_id, label=label,
                              mosaic=tuple(mosaic), embedding_ref=f"emb/{wsi_id}.wsie"))
    return DatasetManifest(name=name, classes=tuple(classes), wsis=tuple(wsis),
                           label_granularity=granularity)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
