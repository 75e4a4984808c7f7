"""Evaluation harness pieces: stratified folds, classification metrics and the
error-analysis helpers (top-X restriction, length buckets, relative gains)."""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np


def stratified_kfold(labels: Sequence[str], k: int, seed: int) -> np.ndarray:
    """Fold index per instance: shuffle within each class, deal round-robin.

    Guarantees per-class fold counts that differ by at most one.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    rng = np.random.default_rng(seed)
    folds = np.zeros(len(labels), dtype=np.int64)
    by_class: dict[str, list[int]] = defaultdict(list)
    for i, lbl in enumerate(labels):
        by_class[lbl].append(i)
    for lbl in sorted(by_class):
        idx = np.array(by_class[lbl])
        rng.shuffle(idx)
        for pos, i in enumerate(idx):
            folds[i] = pos % k
    return folds


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class EvalReport:
    """Metrics of one prediction set against its ground truth."""

    accuracy: float
    weighted_f1: float
    per_class: dict[str, ClassMetrics]
    confusion: np.ndarray  # rows = truth, columns = prediction
    confusion_order: tuple[str, ...]  # classes by descending popularity in truths

    @property
    def n_instances(self) -> int:
        return int(self.confusion.sum())


def metrics(
    predictions: Sequence[str], truths: Sequence[str], class_order: Sequence[str]
) -> EvalReport:
    """Accuracy, per-class precision/recall/F1 (0/0 := 0) and weighted F1.

    Weighted F1 weights each class by its share of the true labels, so classes
    absent from the truths contribute nothing. The confusion matrix axes are
    ordered by descending truth popularity (ties lexicographic).
    """
    if len(predictions) != len(truths) or not truths:
        raise ValueError("predictions and truths must align and be non-empty")
    classes = list(class_order)
    known = set(classes)
    for value in set(predictions) | set(truths):
        if value not in known:
            raise ValueError(f"label {value!r} missing from class_order")

    truth_counts = Counter(truths)
    n = len(truths)
    correct = sum(1 for p, t in zip(predictions, truths) if p == t)
    accuracy = correct / n

    per_class: dict[str, ClassMetrics] = {}
    weighted_f1 = 0.0
    for cat in classes:
        tp = sum(1 for p, t in zip(predictions, truths) if p == cat and t == cat)
        pred_n = sum(1 for p in predictions if p == cat)
        true_n = truth_counts.get(cat, 0)
        precision = tp / pred_n if pred_n else 0.0
        recall = tp / true_n if true_n else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_class[cat] = ClassMetrics(precision, recall, f1, true_n)
        weighted_f1 += (true_n / n) * f1

    popularity_order = tuple(
        sorted(classes, key=lambda c: (-truth_counts.get(c, 0), c))
    )
    pos = {c: i for i, c in enumerate(popularity_order)}
    confusion = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for p, t in zip(predictions, truths):
        confusion[pos[t], pos[p]] += 1
    return EvalReport(
        accuracy=accuracy,
        weighted_f1=weighted_f1,
        per_class=per_class,
        confusion=confusion,
        confusion_order=popularity_order,
    )


def relative_improvement(
    report_a: EvalReport, report_b: EvalReport
) -> dict[str, dict[str, float | None]]:
    """Per-class percent change of a over b for F1/precision/recall.

    None marks classes where the baseline value is zero (undefined change).
    """
    if set(report_a.per_class) != set(report_b.per_class):
        raise ValueError("reports cover different class sets")
    out: dict[str, dict[str, float | None]] = {}
    for cat in report_a.per_class:
        a = report_a.per_class[cat]
        b = report_b.per_class[cat]
        out[cat] = {
            metric: (100.0 * (getattr(a, metric) - getattr(b, metric)) / getattr(b, metric))
            if getattr(b, metric) != 0
            else None
            for metric in ("f1", "precision", "recall")
        }
    return out


MERGED_OTHER = "other"


def topx_filter(
    instances: Sequence, labels: Sequence[str], x: int, mode: str = "drop_others"
) -> tuple[list, list[str]]:
    """Restrict a labeled dataset to its top-x most common classes.

    drop_others removes instances outside the top-x classes; merge_other
    relabels them to the synthetic "other" class instead.
    """
    if len(instances) != len(labels):
        raise ValueError("instances and labels must align")
    distinct = sorted(set(labels))
    if not 1 <= x <= len(distinct):
        raise ValueError(f"x must be in [1, {len(distinct)}]")
    if mode not in ("drop_others", "merge_other"):
        raise ValueError(f"unknown mode {mode!r}")
    counts = Counter(labels)
    top = set(sorted(distinct, key=lambda c: (-counts[c], c))[:x])
    if mode == "merge_other":
        if MERGED_OTHER in counts:
            raise ValueError(f"label {MERGED_OTHER!r} already exists; cannot merge into it")
        relabeled = [lbl if lbl in top else MERGED_OTHER for lbl in labels]
        return list(instances), relabeled
    kept = [(inst, lbl) for inst, lbl in zip(instances, labels) if lbl in top]
    return [inst for inst, _ in kept], [lbl for _, lbl in kept]


def length_buckets(
    predictions: Sequence[str],
    truths: Sequence[str],
    token_lengths: Sequence[int],
    max_len: int = 15,
) -> dict[str, tuple[int, float]]:
    """Accuracy per exact token count (1..max_len) with a `max_len+` overflow
    bucket; buckets with no instances are omitted."""
    if not (len(predictions) == len(truths) == len(token_lengths)):
        raise ValueError("inputs must align")
    totals: Counter[str] = Counter()
    hits: Counter[str] = Counter()
    for p, t, n in zip(predictions, truths, token_lengths):
        bucket = str(n) if n <= max_len else f"{max_len}+"
        totals[bucket] += 1
        if p == t:
            hits[bucket] += 1
    return {b: (totals[b], hits[b] / totals[b]) for b in totals}


def bucket_sort_key(bucket: str) -> tuple[int, int]:
    if bucket.endswith("+"):
        return (int(bucket[:-1]), 1)
    return (int(bucket), 0)
