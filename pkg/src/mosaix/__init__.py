"""mosaix: content-based whole-slide-image retrieval.

Mosaic patch selection, median-of-minimum WSI-to-WSI matching, and
leave-one-patient-out MV@k evaluation with macro-F1 reporting, for patch
embeddings from any backbone.
"""

from mosaix.metric import (
    binarize_minmax,
    median_of_min,
    pairwise_min_profile,
    patch_distance,
)
from mosaix.model import (
    DatasetManifest,
    EmbeddingKind,
    EmbeddingSet,
    EvalConfig,
    LabelGranularity,
    MedianRule,
    Metric,
    PatchRecord,
    WsiRecord,
    load_manifest,
    save_manifest,
    validate_manifest,
)
from mosaix.mosaic import MosaicParams, build_mosaic, cluster_patches
from mosaix.report import EvalReport, confusion, f1_scores, render_table
from mosaix.retrieval import (
    RankedRetrieval,
    VoteResult,
    evaluate_lopo,
    majority_vote,
    retrieve,
)
from mosaix.storage import convert_to_barcodes, read_embeddings, write_embeddings

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "PatchRecord",
    "EmbeddingSet",
    "EmbeddingKind",
    "WsiRecord",
    "DatasetManifest",
    "LabelGranularity",
    "EvalConfig",
    "Metric",
    "MedianRule",
    "validate_manifest",
    "load_manifest",
    "save_manifest",
    "MosaicParams",
    "cluster_patches",
    "build_mosaic",
    "patch_distance",
    "binarize_minmax",
    "median_of_min",
    "pairwise_min_profile",
    "retrieve",
    "majority_vote",
    "evaluate_lopo",
    "RankedRetrieval",
    "VoteResult",
    "confusion",
    "f1_scores",
    "render_table",
    "EvalReport",
    "read_embeddings",
    "write_embeddings",
    "convert_to_barcodes",
]
