"""Domain types and dataset manifest semantics shared by every other module.

All types here are immutable after construction and safe to share
read-only across threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from mosaix.errors import ManifestError


class EmbeddingKind(Enum):
    FLOAT = "float"
    BARCODE = "barcode"


class Metric(Enum):
    COSINE = "cosine"
    L2 = "l2"
    HAMMING = "hamming"


class MedianRule(Enum):
    MIDPOINT_AVERAGE = "midpoint_average"
    LOWER_MEDIAN = "lower_median"


class LabelGranularity(Enum):
    PATIENT = "patient"
    SLIDE = "slide"


@dataclass(frozen=True)
class PatchRecord:
    """One tissue patch: slide coordinates plus the color descriptor used
    for mosaic clustering.

    Coordinates are pixel offsets of the patch top-left at extraction
    magnification; they are metadata for spatial spreading, never used to
    read image data.
    """

    patch_id: int
    x: int
    y: int
    width: int
    height: int
    color_features: tuple[float, ...]

    def __post_init__(self):
        if self.patch_id < 0:
            raise ValueError(f"patch_id must be non-negative, got {self.patch_id}")
        if self.width <= 0 or self.height <= 0:
            raise ValueError(
                f"patch {self.patch_id}: width and height must be positive "
                f"(got {self.width}x{self.height})"
            )
        object.__setattr__(self, "color_features", tuple(float(v) for v in self.color_features))


@dataclass(frozen=True)
class EmbeddingSet:
    """The feature vectors of one WSI's mosaic patches; the unit of matching.

    ``vectors`` is an (n, dim) matrix, one row per mosaic patch in mosaic
    order: float32 for kind=FLOAT, uint8 holding only 0/1 for kind=BARCODE.
    The array is frozen (read-only) on construction.
    """

    wsi_id: str
    vectors: np.ndarray
    kind: EmbeddingKind = EmbeddingKind.FLOAT

    def __post_init__(self):
        arr = np.asarray(self.vectors)
        if arr.ndim != 2:
            raise ValueError(f"vectors must be 2-D, got shape {arr.shape}")
        n, dim = arr.shape
        if n < 1 or dim < 1:
            raise ValueError(f"need at least one row and one column, got shape {arr.shape}")
        if self.kind is EmbeddingKind.FLOAT:
            arr = np.ascontiguousarray(arr, dtype=np.float32)
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{self.wsi_id}: embedding vectors contain non-finite values")
        else:
            arr = np.ascontiguousarray(arr, dtype=np.uint8)
            if not np.all((arr == 0) | (arr == 1)):
                raise ValueError(f"{self.wsi_id}: barcode entries must be 0 or 1")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "vectors", arr)

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __eq__(self, other):
        if not isinstance(other, EmbeddingSet):
            return NotImplemented
        return (self.wsi_id == other.wsi_id
                and self.kind == other.kind
                and self.vectors.dtype == other.vectors.dtype
                and self.vectors.shape == other.vectors.shape
                and np.array_equal(self.vectors, other.vectors))


@dataclass(frozen=True)
class WsiRecord:
    """Slide bookkeeping: patient and label association plus the mosaic
    patch ids and the locator of the slide's embedding file."""

    wsi_id: str
    patient_id: str
    label: str
    mosaic: tuple[int, ...]
    embedding_ref: str

    def __post_init__(self):
        object.__setattr__(self, "mosaic", tuple(int(p) for p in self.mosaic))


@dataclass(frozen=True)
class DatasetManifest:
    """Slide -> patient -> label bookkeeping for one dataset.

    ``classes`` fixes report column order. ``label_granularity`` declares
    whether labels attach to patients (a patient's slides must agree) or to
    individual slides.
    """

    name: str
    classes: tuple[str, ...]
    wsis: tuple[WsiRecord, ...]
    label_granularity: LabelGranularity = LabelGranularity.PATIENT

    def __post_init__(self):
        object.__setattr__(self, "classes", tuple(self.classes))
        object.__setattr__(self, "wsis", tuple(self.wsis))


@dataclass(frozen=True)
class EvalConfig:
    """Knobs of one evaluation run: patch metric, MV@k grid, median rule."""

    metric: Metric = Metric.COSINE
    k_values: tuple[int, ...] = (1, 3, 5)
    median_rule: MedianRule = MedianRule.MIDPOINT_AVERAGE

    def __post_init__(self):
        ks = tuple(int(k) for k in self.k_values)
        if not ks:
            raise ValueError("k_values must not be empty")
        if any(k < 1 for k in ks):
            raise ValueError(f"k_values must all be >= 1, got {ks}")
        if list(ks) != sorted(ks):
            raise ValueError(f"k_values must be sorted ascending, got {ks}")
        object.__setattr__(self, "k_values", ks)


@dataclass(frozen=True, order=True)
class Violation:
    """One manifest invariant violation; dataset-level violations carry an
    empty wsi_id so they sort first."""

    wsi_id: str
    rule: str
    detail: str = field(compare=False, default="")

    def __str__(self) -> str:
        where = self.wsi_id or "<dataset>"
        msg = f"{where}: {self.rule}"
        return f"{msg} ({self.detail})" if self.detail else msg


def validate_manifest(manifest: DatasetManifest) -> list[Violation]:
    """Check every manifest invariant and return the violations found.

    Violations are data, not errors: the list is empty for a valid
    manifest, ordered by (wsi_id, rule), and two calls on the same input
    return identical lists.
    """
    violations: list[Violation] = []
    class_set = set(manifest.classes)

    if not manifest.classes:
        violations.append(Violation("", "empty_class_set", "manifest declares no classes"))
    seen_classes: set[str] = set()
    for c in manifest.classes:
        if c in seen_classes:
            violations.append(Violation("", "duplicate_class", c))
        seen_classes.add(c)

    seen_ids: set[str] = set()
    flagged_dup: set[str] = set()
    for w in manifest.wsis:
        if w.wsi_id in seen_ids and w.wsi_id not in flagged_dup:
            violations.append(Violation(w.wsi_id, "duplicate_wsi_id", "wsi_id appears more than once"))
            flagged_dup.add(w.wsi_id)
        seen_ids.add(w.wsi_id)

        if w.label not in class_set:
            violations.append(Violation(w.wsi_id, "unknown_label", w.label))
        if not w.mosaic:
            violations.append(Violation(w.wsi_id, "empty_mosaic", "mosaic selects no patches"))
        elif len(set(w.mosaic)) != len(w.mosaic):
            violations.append(Violation(w.wsi_id, "duplicate_mosaic_patch", "mosaic repeats a patch_id"))

    if manifest.label_granularity is LabelGranularity.PATIENT:
        by_patient: dict[str, dict[str, str]] = {}
        for w in manifest.wsis:
            by_patient.setdefault(w.patient_id, {})[w.wsi_id] = w.label
        for patient_id in sorted(by_patient):
            labels = by_patient[patient_id]
            if len(set(labels.values())) > 1:
                anchor = min(labels)
                violations.append(
                    Violation(anchor, "conflicting_patient_labels",
                              f"patient {patient_id} has labels {sorted(set(labels.values()))}")
                )

    return sorted(violations, key=lambda v: (v.wsi_id, v.rule))


# --- manifest JSON (strict: unknown fields rejected to catch typos) ---

_MANIFEST_KEYS = {"name", "classes", "label_granularity", "wsis"}
_WSI_KEYS = {"wsi_id", "patient_id", "label", "mosaic", "embedding_ref"}


def _require(cond: bool, msg: str):
    if not cond:
        raise ManifestError(msg)


def manifest_from_dict(data: dict) -> DatasetManifest:
    _require(isinstance(data, dict), "manifest root must be a JSON object")
    unknown = set(data) - _MANIFEST_KEYS
    _require(not unknown, f"unknown manifest fields: {sorted(unknown)}")
    for key in ("name", "classes", "wsis"):
        _require(key in data, f"manifest is missing required field '{key}'")
    _require(isinstance(data["name"], str), "'name' must be a string")
    _require(isinstance(data["classes"], list) and all(isinstance(c, str) for c in data["classes"]),
             "'classes' must be a list of strings")

    granularity = data.get("label_granularity", "patient")
    try:
        gran = LabelGranularity(granularity)
    except ValueError:
        raise ManifestError(
            f"label_granularity must be 'patient' or 'slide', got {granularity!r}") from None

    _require(isinstance(data["wsis"], list), "'wsis' must be a list")
    wsis = []
    for i, entry in enumerate(data["wsis"]):
        _require(isinstance(entry, dict), f"wsis[{i}] must be an object")
        unknown = set(entry) - _WSI_KEYS
        _require(not unknown, f"wsis[{i}]: unknown fields {sorted(unknown)}")
        missing = _WSI_KEYS - set(entry)
        _require(not missing, f"wsis[{i}]: missing fields {sorted(missing)}")
        for key in ("wsi_id", "patient_id", "label", "embedding_ref"):
            _require(isinstance(entry[key], str), f"wsis[{i}].{key} must be a string")
        _require(isinstance(entry["mosaic"], list) and all(isinstance(p, int) for p in entry["mosaic"]),
                 f"wsis[{i}].mosaic must be a list of integers")
        wsis.append(WsiRecord(
            wsi_id=entry["wsi_id"],
            patient_id=entry["patient_id"],
            label=entry["label"],
            mosaic=tuple(entry["mosaic"]),
            embedding_ref=entry["embedding_ref"],
        ))
    return DatasetManifest(name=data["name"], classes=tuple(data["classes"]),
                           wsis=tuple(wsis), label_granularity=gran)


def manifest_to_dict(manifest: DatasetManifest) -> dict:
    return {
        "name": manifest.name,
        "classes": list(manifest.classes),
        "label_granularity": manifest.label_granularity.value,
        "wsis": [
            {
                "wsi_id": w.wsi_id,
                "patient_id": w.patient_id,
                "label": w.label,
                "mosaic": list(w.mosaic),
                "embedding_ref": w.embedding_ref,
            }
            for w in manifest.wsis
        ],
    }


def load_manifest(path: str | Path) -> DatasetManifest:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ManifestError(f"{path}: not valid JSON ({exc})") from None
    return manifest_from_dict(data)


def save_manifest(manifest: DatasetManifest, path: str | Path):
    payload = json.dumps(manifest_to_dict(manifest), indent=2) + "\n"
    Path(path).write_text(payload, encoding="utf-8")
