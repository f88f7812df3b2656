"""Leave-one-patient-out corpus search.

Rank candidate WSIs by median-of-min distance and classify the query by
majority vote over the top k. Every slide of the query's patient is
excluded from its candidate pool; ranking ties break on wsi_id so output
is reproducible.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from mosaix.errors import DimensionMismatch, EmptyRetrieval, NoCandidates
from mosaix.metric import _median, min_profile_prepared, prepare_matrix
from mosaix.model import DatasetManifest, EmbeddingSet, EvalConfig, WsiRecord

__all__ = [
    "Candidate",
    "RankedRetrieval",
    "VoteResult",
    "QueryResult",
    "retrieve",
    "majority_vote",
    "evaluate_lopo",
]


@dataclass(frozen=True)
class Candidate:
    wsi_id: str
    patient_id: str
    label: str
    distance: float


@dataclass(frozen=True)
class RankedRetrieval:
    """Candidates for one query, ascending by distance (ties by wsi_id)."""

    query_wsi_id: str
    candidates: tuple[Candidate, ...]


@dataclass(frozen=True)
class VoteResult:
    """Majority vote over the top-k candidate labels.

    tie_broken is set when more than one label reached the top count; the
    winner is then the tied label whose best-ranked candidate comes first.
    """

    k: int
    predicted_label: str
    vote_counts: dict[str, int]
    tie_broken: bool


@dataclass(frozen=True)
class QueryResult:
    """One query's outcome in a leave-one-patient-out run; a query whose
    patient exclusion emptied the corpus has n_candidates == 0 and no votes."""

    wsi_id: str
    true_label: str
    n_candidates: int
    votes: dict[int, VoteResult]

    @property
    def skipped(self) -> bool:
        return self.n_candidates == 0


def _rank(query_id: str, query_patient: str, qmat: np.ndarray,
          corpus: Sequence[tuple[WsiRecord, np.ndarray]], config: EvalConfig) -> RankedRetrieval:
    scored = []
    for record, tmat in corpus:
        if record.patient_id == query_patient:
            continue
        if qmat.shape[1] != tmat.shape[1]:
            raise DimensionMismatch(
                f"{query_id} vs {record.wsi_id}: dims {qmat.shape[1]} != {tmat.shape[1]}")
        profile = min_profile_prepared(qmat, tmat, config.metric)
        scored.append(Candidate(record.wsi_id, record.patient_id, record.label,
                                _median(profile, config.median_rule)))
    if not scored:
        raise NoCandidates(f"{query_id}: no candidates left after excluding patient {query_patient}")
    scored.sort(key=lambda c: (c.distance, c.wsi_id))
    return RankedRetrieval(query_wsi_id=query_id, candidates=tuple(scored))


def retrieve(query: WsiRecord, query_set: EmbeddingSet,
             corpus: Sequence[tuple[WsiRecord, EmbeddingSet]],
             config: EvalConfig) -> RankedRetrieval:
    """Rank all corpus WSIs of other patients by distance to the query."""
    qmat = prepare_matrix(query_set, config.metric)
    prepared = [(rec, prepare_matrix(es, config.metric)) for rec, es in corpus]
    return _rank(query.wsi_id, query.patient_id, qmat, prepared, config)


def majority_vote(retrieval: RankedRetrieval, k: int) -> VoteResult:
    """Vote among the labels of the first min(k, #candidates) candidates."""
    if not retrieval.candidates:
        raise EmptyRetrieval(f"{retrieval.query_wsi_id}: retrieval has no candidates")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    top = retrieval.candidates[: min(k, len(retrieval.candidates))]
    counts: dict[str, int] = {}
    for cand in top:
        counts[cand.label] = counts.get(cand.label, 0) + 1
    best = max(counts.values())
    leaders = [label for label, c in counts.items() if c == best]
    # counts preserves first-appearance order, so leaders[0] is the tied
    # label whose best candidate has the smallest rank
    return VoteResult(k=k, predicted_label=leaders[0], vote_counts=counts,
                      tie_broken=len(leaders) > 1)


def evaluate_lopo(manifest: DatasetManifest, embeddings: Mapping[str, EmbeddingSet],
                  config: EvalConfig, threads: int | None = None) -> list[QueryResult]:
    """Run every WSI as a query against the rest of its dataset.

    Results come back ordered by wsi_id regardless of thread scheduling.
    A query with no candidates after patient exclusion is recorded as
    skipped; if that happens to every query the run raises NoCandidates.
    """
    records = sorted(manifest.wsis, key=lambda w: w.wsi_id)
    prepared: list[tuple[WsiRecord, np.ndarray]] = []
    dim = None
    for rec in records:
        mat = prepare_matrix(embeddings[rec.wsi_id], config.metric)
        if dim is None:
            dim = mat.shape[1]
        elif mat.shape[1] != dim:
            raise DimensionMismatch(
                f"{rec.wsi_id}: embedding dim {mat.shape[1]} != {dim} of the rest of the corpus")
        prepared.append((rec, mat))

    def run_query(item: tuple[WsiRecord, np.ndarray]) -> QueryResult:
        rec, qmat = item
        try:
            ranking = _rank(rec.wsi_id, rec.patient_id, qmat, prepared, config)
        except NoCandidates:
            return QueryResult(rec.wsi_id, rec.label, 0, {})
        votes = {k: majority_vote(ranking, k) for k in config.k_values}
        return QueryResult(rec.wsi_id, rec.label, len(ranking.candidates), votes)

    if threads is not None and threads < 1:
        raise ValueError(f"threads must be >= 1, got {threads}")
    if threads == 1 or len(prepared) <= 1:
        results = [run_query(item) for item in prepared]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run_query, prepared))

    if results and all(r.skipped for r in results):
        raise NoCandidates(
            f"{manifest.name}: every query lost its whole corpus to patient exclusion")
    return results
