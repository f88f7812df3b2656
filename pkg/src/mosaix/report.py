"""Score predictions and render backend-comparison tables.

Scores are per-class F1 with a macro (unweighted) average; a
support-weighted average is computed alongside because "average F1" is
ambiguous, and both land in CSV output while Markdown shows the macro.
The table layout is one row per (dataset, k), one column per backend,
with the best cell per row flagged ** and the second best *, and a final
"Total F1 Score" row holding mean +/- population std of each column.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from mosaix.errors import GridMismatch, UnknownLabel

__all__ = [
    "ConfusionMatrix",
    "F1Scores",
    "KScores",
    "EvalReport",
    "confusion",
    "f1_scores",
    "report_from_predictions",
    "render_table",
    "total_f1",
]


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts[i][j] = queries with true class i predicted as class j."""

    classes: tuple[str, ...]
    counts: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.counts, dtype=np.int64).copy()
        if arr.shape != (len(self.classes), len(self.classes)):
            raise ValueError(f"counts must be {len(self.classes)}x{len(self.classes)}, got {arr.shape}")
        if np.any(arr < 0):
            raise ValueError("confusion counts must be non-negative")
        arr.setflags(write=False)
        object.__setattr__(self, "counts", arr)
        object.__setattr__(self, "classes", tuple(self.classes))


def confusion(predictions: Iterable[tuple[str, str]], classes: Sequence[str]) -> ConfusionMatrix:
    """Confusion matrix of (true_label, predicted_label) pairs."""
    index = {c: i for i, c in enumerate(classes)}
    counts = np.zeros((len(index), len(index)), dtype=np.int64)
    for true, pred in predictions:
        if true not in index:
            raise UnknownLabel(f"true label {true!r} not in classes")
        if pred not in index:
            raise UnknownLabel(f"predicted label {pred!r} not in classes")
        counts[index[true], index[pred]] += 1
    return ConfusionMatrix(classes=tuple(classes), counts=counts)


@dataclass(frozen=True)
class F1Scores:
    per_class: dict[str, float]
    macro: float
    weighted: float


def f1_scores(cm: ConfusionMatrix) -> F1Scores:
    """Per-class and averaged F1.

    A class with no true and no predicted instances is excluded from the
    macro average; a class that appears on only one side scores 0. The
    weighted average weights classes by true-instance count.
    """
    per_class: dict[str, float] = {}
    included: list[float] = []
    supports: list[int] = []
    for i, name in enumerate(cm.classes):
        tp = int(cm.counts[i, i])
        support = int(cm.counts[i, :].sum())
        predicted = int(cm.counts[:, i].sum())
        if support == 0 and predicted == 0:
            per_class[name] = 0.0
            continue
        if tp == 0:
            f1 = 0.0
        else:
            precision = tp / predicted
            recall = tp / support
            f1 = 2.0 * precision * recall / (precision + recall)
        per_class[name] = f1
        included.append(f1)
        supports.append(support)

    # fsum keeps the averages exactly invariant under class-order permutation
    macro = math.fsum(included) / len(included) if included else 0.0
    total_support = sum(supports)
    weighted = (math.fsum(f * s for f, s in zip(included, supports)) / total_support
                if total_support else 0.0)
    return F1Scores(per_class=per_class, macro=macro, weighted=weighted)


@dataclass(frozen=True)
class KScores:
    """Scores for one MV@k row of one (dataset, backend) report."""

    per_class_f1: dict[str, float]
    macro_f1: float
    weighted_f1: float
    n_scored: int
    n_skipped: int


@dataclass(frozen=True)
class EvalReport:
    dataset: str
    backend: str
    rows: dict[int, KScores]


def report_from_predictions(rows: Iterable[tuple[str, int, str, str, int]],
                            classes: Sequence[str], dataset: str, backend: str) -> EvalReport:
    """Build an EvalReport from prediction rows.

    Each row is (query_wsi_id, k, true_label, predicted_label,
    n_candidates); rows with n_candidates == 0 count as skipped and stay
    out of every F1 denominator.
    """
    by_k: dict[int, list[tuple[str, str]]] = {}
    skipped: dict[int, int] = {}
    for _wsi, k, true, pred, n_candidates in rows:
        if n_candidates == 0:
            skipped[k] = skipped.get(k, 0) + 1
            by_k.setdefault(k, [])
        else:
            by_k.setdefault(k, []).append((true, pred))
            skipped.setdefault(k, 0)
    report_rows = {}
    for k in sorted(by_k):
        scores = f1_scores(confusion(by_k[k], classes))
        report_rows[k] = KScores(per_class_f1=scores.per_class, macro_f1=scores.macro,
                                 weighted_f1=scores.weighted, n_scored=len(by_k[k]),
                                 n_skipped=skipped.get(k, 0))
    return EvalReport(dataset=dataset, backend=backend, rows=report_rows)


def _k_label(k: int) -> str:
    return "Top 1" if k == 1 else f"MV@{k}"


def _fmt_pct(value: float, decimals: int) -> str:
    return f"{100.0 * value:.{decimals}f}"


def _flags(cells: Sequence[float], decimals: int) -> list[str]:
    """Flag per cell: ** best, * second best, computed on displayed values."""
    shown = [round(100.0 * v, decimals) for v in cells]
    best = max(shown)
    lower = [v for v in shown if v < best]
    second = max(lower) if lower else None
    out = []
    for v in shown:
        if v == best:
            out.append("**")
        elif second is not None and v == second:
            out.append("*")
        else:
            out.append("")
    return out


def _grid(reports: Sequence[EvalReport]) -> tuple[list[str], list[tuple[str, int]], dict]:
    """Backends in first-appearance order, the shared (dataset, k) row grid,
    and the cell lookup. Raises GridMismatch when backends disagree."""
    backends: list[str] = []
    datasets: list[str] = []
    cells: dict[tuple[str, str, int], KScores] = {}
    for rep in reports:
        if rep.backend not in backends:
            backends.append(rep.backend)
        if rep.dataset not in datasets:
            datasets.append(rep.dataset)
        for k, scores in rep.rows.items():
            key = (rep.backend, rep.dataset, k)
            if key in cells:
                raise GridMismatch(f"duplicate report cell for backend={rep.backend} "
                                   f"dataset={rep.dataset} k={k}")
            cells[key] = scores

    grid: list[tuple[str, int]] = []
    for ds in datasets:
        ks = sorted({k for (b, d, k) in cells if d == ds})
        grid.extend((ds, k) for k in ks)
    for b in backends:
        have = {(d, k) for (bb, d, k) in cells if bb == b}
        if have != set(grid):
            missing = sorted(set(grid) - have)
            extra = sorted(have - set(grid))
            raise GridMismatch(f"backend {b} does not cover the shared grid "
                               f"(missing {missing}, extra {extra})")
    return backends, grid, cells


def total_f1(reports: Sequence[EvalReport]) -> dict[str, tuple[float, float]]:
    """Per backend: (mean, population std) of its per-(dataset, k) macro F1
    cells; the summary the comparison table's Total row shows."""
    backends, grid, cells = _grid(reports)
    out = {}
    for b in backends:
        column = [cells[(b, ds, k)].macro_f1 for ds, k in grid]
        out[b] = (float(np.mean(column)), float(np.std(column)))
    return out


def render_table(reports: Sequence[EvalReport], format: str = "markdown",
                 decimals: int = 1) -> str:
    """Render the backend comparison table as Markdown or CSV text."""
    if format not in ("markdown", "csv"):
        raise ValueError(f"format must be 'markdown' or 'csv', got {format!r}")
    if not reports:
        raise GridMismatch("no reports to render")
    backends, grid, cells = _grid(reports)

    macro = {(b, ds, k): cells[(b, ds, k)].macro_f1 for b in backends for ds, k in grid}
    summary = total_f1(reports)
    means = {b: summary[b][0] for b in backends}
    stds = {b: summary[b][1] for b in backends}

    if format == "markdown":
        lines = ["| Dataset | k | " + " | ".join(backends) + " |",
                 "| --- | --- | " + " | ".join("---" for _ in backends) + " |"]
        for ds, k in grid:
            row_vals = [macro[(b, ds, k)] for b in backends]
            flags = _flags(row_vals, decimals)
            cells_txt = [f"{_fmt_pct(v, decimals)}%{' ' + f if f else ''}"
                         for v, f in zip(row_vals, flags)]
            lines.append(f"| {ds} | {_k_label(k)} | " + " | ".join(cells_txt) + " |")
        mean_vals = [means[b] for b in backends]
        flags = _flags(mean_vals, decimals)
        total_cells = [f"{_fmt_pct(means[b], decimals)}% ± {_fmt_pct(stds[b], decimals)}%"
                       f"{' ' + f if f else ''}" for b, f in zip(backends, flags)]
        lines.append("| Total F1 Score |  | " + " | ".join(total_cells) + " |")
        lines.append("")
        lines.append("Total F1 Score: mean ± population std of each column's "
                     "per-(dataset, k) macro F1 cells. ** best per row, * second best.")
        return "\n".join(lines) + "\n"

    header = ["dataset", "k"]
    for b in backends:
        header += [f"{b}_macro_f1", f"{b}_weighted_f1", f"{b}_flag", f"{b}_macro_std"]
    lines = [",".join(header)]
    for ds, k in grid:
        row_vals = [macro[(b, ds, k)] for b in backends]
        flags = _flags(row_vals, decimals)
        fields = [ds, str(k)]
        for b, f in zip(backends, flags):
            fields += [_fmt_pct(macro[(b, ds, k)], decimals),
                       _fmt_pct(cells[(b, ds, k)].weighted_f1, decimals), f, ""]
        lines.append(",".join(fields))
    mean_vals = [means[b] for b in backends]
    flags = _flags(mean_vals, decimals)
    fields = ["Total F1 Score", ""]
    for b, f in zip(backends, flags):
        fields += [_fmt_pct(means[b], decimals), "", f, _fmt_pct(stds[b], decimals)]
    lines.append(",".join(fields))
    return "\n".join(lines) + "\n"
