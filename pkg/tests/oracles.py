"""Independent brute-force implementations used as test oracles.

Everything here is deliberately naive pure-Python (double loops,
math.fsum) and shares no code with the engine.
"""

from __future__ import annotations

import math


def cosine_distance(a, b) -> float:
    dot = math.fsum(x * y for x, y in zip(a, b))
    na = math.sqrt(math.fsum(x * x for x in a))
    nb = math.sqrt(math.fsum(y * y for y in b))
    return 1.0 - dot / (na * nb)


def l2_distance(a, b) -> float:
    return math.sqrt(math.fsum((x - y) ** 2 for x, y in zip(a, b)))


def hamming_distance(a, b) -> int:
    return sum(1 for x, y in zip(a, b) if x != y)


def patch_distance(a, b, metric: str):
    if metric == "cosine":
        return cosine_distance(a, b)
    if metric == "l2":
        return l2_distance(a, b)
    return hamming_distance(a, b)


def min_profile(query_rows, target_rows, metric: str) -> list:
    return [min(patch_distance(q, t, metric) for t in target_rows) for q in query_rows]


def median(values, rule: str = "midpoint_average") -> float:
    s = sorted(values)
    n = len(s)
    if n % 2 == 1:
        return float(s[n // 2])
    if rule == "lower_median":
        return float(s[n // 2 - 1])
    return (s[n // 2 - 1] + s[n // 2]) / 2.0


def median_of_min(query_rows, target_rows, metric: str,
                  rule: str = "midpoint_average") -> float:
    return median(min_profile(query_rows, target_rows, metric), rule)


def f1_report(true_pred_pairs, classes):
    """Per-class and macro/weighted F1 straight from the definitions."""
    per_class = {}
    included = []
    weights = []
    for c in classes:
        tp = sum(1 for t, p in true_pred_pairs if t == c and p == c)
        fp = sum(1 for t, p in true_pred_pairs if t != c and p == c)
        fn = sum(1 for t, p in true_pred_pairs if t == c and p != c)
        if tp + fp == 0 and tp + fn == 0:
            per_class[c] = 0.0
            continue
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_class[c] = f1
        included.append(f1)
        weights.append(tp + fn)
    macro = sum(included) / len(included) if included else 0.0
    total = sum(weights)
    weighted = sum(f * w for f, w in zip(included, weights)) / total if total else 0.0
    return per_class, macro, weighted


def f1_from_matrix(counts):
    """Per-class F1, macro and weighted averages from a confusion matrix
    (rows true, columns predicted), using the zero-side conventions: a
    class absent from both sides is excluded from the averages, a class
    present on only one side scores 0."""
    n = len(counts)
    per_class = []
    included = []
    weights = []
    for i in range(n):
        tp = counts[i][i]
        row = sum(counts[i])
        col = sum(counts[r][i] for r in range(n))
        if row == 0 and col == 0:
            per_class.append(0.0)
            continue
        p = tp / col if col else 0.0
        r = tp / row if row else 0.0
        f1 = 2 * p * r / (p + r) if p + r else 0.0
        per_class.append(f1)
        included.append(f1)
        weights.append(row)
    macro = sum(included) / len(included) if included else 0.0
    total = sum(weights)
    weighted = sum(f * w for f, w in zip(included, weights)) / total if total else 0.0
    return per_class, macro, weighted


def rank_corpus(query_rows, corpus, metric: str, rule: str,
                exclude_patient: str) -> list[str]:
    """Expected candidate order: (distance, wsi_id) ascending, patient excluded.

    corpus entries are (wsi_id, patient_id, rows).
    """
    scored = []
    for wsi_id, patient_id, rows in corpus:
        if patient_id == exclude_patient:
            continue
        scored.append((median_of_min(query_rows, rows, metric, rule), wsi_id))
    scored.sort()
    return [wsi_id for _, wsi_id in scored]
