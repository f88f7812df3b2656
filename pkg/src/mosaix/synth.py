"""Synthetic cohorts for self-contained benchmark runs.

Classes are Gaussian clouds with unit within-class std whose centroids sit
at the vertices of a regular simplex, so every pair of centroids is
exactly class_separation stds apart. Stands in for clinical datasets that
cannot ship with the engine; real data enters through the same manifest
and embedding-file formats.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from mosaix.model import DatasetManifest, EmbeddingKind, EmbeddingSet, LabelGranularity, WsiRecord
from mosaix.storage import write_embeddings

__all__ = ["SyntheticCohortSpec", "generate_synthetic"]


@dataclass(frozen=True)
class SyntheticCohortSpec:
    n_classes: int = 3
    patients_per_class: int = 40
    wsis_per_patient: int = 1
    patches_per_mosaic: int = 16
    dim: int = 64
    class_separation: float = 4.0
    rng_seed: int = 0

    def __post_init__(self):
        for name in ("n_classes", "patients_per_class", "wsis_per_patient",
                     "patches_per_mosaic", "dim"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.class_separation < 0:
            raise ValueError(f"class_separation must be >= 0, got {self.class_separation}")
        if self.dim < self.n_classes:
            raise ValueError(
                f"dim must be >= n_classes for simplex centroid placement "
                f"({self.dim} < {self.n_classes})")


def _centroids(spec: SyntheticCohortSpec) -> np.ndarray:
    # scaled standard-basis simplex: ||s/sqrt(2)*(e_i - e_j)|| == s for i != j
    mu = np.zeros((spec.n_classes, spec.dim), dtype=np.float64)
    scale = spec.class_separation / np.sqrt(2.0)
    for c in range(spec.n_classes):
        mu[c, c] = scale
    return mu


def generate_synthetic(spec: SyntheticCohortSpec, out_dir: str | Path) -> DatasetManifest:
    """Write manifest.json plus per-WSI embedding files under out_dir."""
    out = Path(out_dir)
    emb_dir = out / "emb"
    emb_dir.mkdir(parents=True, exist_ok=True)

    rng = np.random.default_rng(spec.rng_seed)
    mu = _centroids(spec)
    classes = [f"class_{c}" for c in range(spec.n_classes)]

    wsis = []
    for c in range(spec.n_classes):
        for p in range(spec.patients_per_class):
            patient_id = f"p{c}_{p:03d}"
            for s in range(spec.wsis_per_patient):
                wsi_id = f"{patient_id}_s{s}"
                vectors = rng.normal(loc=mu[c], scale=1.0,
                                     size=(spec.patches_per_mosaic, spec.dim))
                ref = f"emb/{wsi_id}.wsie"
                es = EmbeddingSet(wsi_id=wsi_id, vectors=vectors.astype(np.float32),
                                  kind=EmbeddingKind.FLOAT)
                write_embeddings(es, out / ref)
                wsis.append(WsiRecord(wsi_id=wsi_id, patient_id=patient_id,
                                      label=classes[c],
                                      mosaic=tuple(range(spec.patches_per_mosaic)),
                                      embedding_ref=ref))

    return DatasetManifest(name=f"synthetic_sep{spec.class_separation:g}",
                           classes=tuple(classes), wsis=tuple(wsis),
                           label_granularity=LabelGranularity.PATIENT)
