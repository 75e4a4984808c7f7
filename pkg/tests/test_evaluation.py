from collections import Counter

import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, settings, strategies as st

from itemcat.evaluation import (
    length_buckets,
    metrics,
    relative_improvement,
    stratified_kfold,
    topx_filter,
)


def brute_force_metrics(predictions, truths, classes):
    """Independent oracle: per-class tallies by direct counting."""
    n = len(truths)
    accuracy = sum(p == t for p, t in zip(predictions, truths)) / n
    per_class = {}
    weighted = 0.0
    for cat in classes:
        tp = fp = fn = 0
        for p, t in zip(predictions, truths):
            if p == cat and t == cat:
                tp += 1
            elif p == cat:
                fp += 1
            elif t == cat:
                fn += 1
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        support = tp + fn
        per_class[cat] = (precision, recall, f1, support)
        weighted += (support / n) * f1
    return accuracy, per_class, weighted


class TestStratifiedKfold:
    def test_balanced_two_class_ten_fold(self):
        labels = ["a"] * 10 + ["b"] * 10
        folds = stratified_kfold(labels, 10, seed=0)
        for fold in range(10):
            members = [labels[i] for i in np.flatnonzero(folds == fold)]
            assert members.count("a") == 1 and members.count("b") == 1

    def test_small_class_spread_across_folds(self):
        labels = ["a"] * 30 + ["b"] * 3
        folds = stratified_kfold(labels, 10, seed=1)
        b_folds = folds[30:]
        assert len(set(b_folds.tolist())) == 3

    def test_per_class_counts_differ_by_at_most_one(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            labels = [f"c{rng.integers(0, 4)}" for _ in range(int(rng.integers(10, 80)))]
            k = int(rng.integers(2, 8))
            folds = stratified_kfold(labels, k, seed=int(rng.integers(0, 100)))
            for cat in set(labels):
                counts = Counter(folds[i] for i, lbl in enumerate(labels) if lbl == cat)
                values = [counts.get(f, 0) for f in range(k)]
                assert max(values) - min(values) <= 1

    def test_seeded_determinism(self):
        labels = ["a", "b"] * 20
        npt.assert_array_equal(
            stratified_kfold(labels, 5, seed=7), stratified_kfold(labels, 5, seed=7)
        )

    def test_k_must_be_at_least_two(self):
        with pytest.raises(ValueError):
            stratified_kfold(["a"], 1, seed=0)


class TestMetrics:
    def test_perfect_predictions(self):
        rep = metrics(["a", "b"], ["a", "b"], ["a", "b"])
        assert rep.accuracy == 1.0
        assert rep.weighted_f1 == pytest.approx(1.0)

    def test_hand_computed_example(self):
        rep = metrics(["a", "b", "b"], ["a", "a", "b"], ["a", "b"])
        assert rep.accuracy == pytest.approx(2 / 3)
        a = rep.per_class["a"]
        b = rep.per_class["b"]
        assert (a.precision, a.recall) == (1.0, 0.5)
        assert a.f1 == pytest.approx(2 / 3)
        assert (b.precision, b.recall) == (0.5, 1.0)
        assert b.f1 == pytest.approx(2 / 3)
        assert rep.weighted_f1 == pytest.approx(2 / 3)

    def test_absent_class_contributes_zero_weight(self):
        rep = metrics(["a", "a"], ["a", "a"], ["a", "ghost"])
        assert rep.per_class["ghost"].support == 0
        assert rep.weighted_f1 == pytest.approx(1.0)

    def test_matches_brute_force_on_1000_random_instances(self):
        rng = np.random.default_rng(42)
        classes = ["a", "b", "c", "d"]
        for _ in range(1000):
            n = int(rng.integers(1, 12))
            truths = [classes[i] for i in rng.integers(0, 4, n)]
            preds = [classes[i] for i in rng.integers(0, 4, n)]
            rep = metrics(preds, truths, classes)
            acc, per_class, weighted = brute_force_metrics(preds, truths, classes)
            assert abs(rep.accuracy - acc) <= 1e-12
            assert abs(rep.weighted_f1 - weighted) <= 1e-12
            for cat in classes:
                got = rep.per_class[cat]
                want = per_class[cat]
                assert abs(got.precision - want[0]) <= 1e-12
                assert abs(got.recall - want[1]) <= 1e-12
                assert abs(got.f1 - want[2]) <= 1e-12
                assert got.support == want[3]

    def test_confusion_matrix_structure(self):
        rng = np.random.default_rng(3)
        classes = ["a", "b", "c"]
        truths = [classes[i] for i in rng.integers(0, 3, 60)]
        preds = [classes[i] for i in rng.integers(0, 3, 60)]
        rep = metrics(preds, truths, classes)
        assert rep.confusion.sum() == 60
        assert np.trace(rep.confusion) / 60 == pytest.approx(rep.accuracy)
        counts = Counter(truths)
        # axes ordered by descending truth popularity
        pops = [counts.get(c, 0) for c in rep.confusion_order]
        assert pops == sorted(pops, reverse=True)
        for i, cat in enumerate(rep.confusion_order):
            assert rep.confusion[i].sum() == counts.get(cat, 0)

    def test_unknown_label_rejected(self):
        with pytest.raises(ValueError):
            metrics(["x"], ["a"], ["a"])

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            metrics([], [], ["a"])


class TestRelativeImprovement:
    def test_identical_reports_are_zero(self):
        rep = metrics(["a", "b"], ["a", "b"], ["a", "b"])
        gain = relative_improvement(rep, rep)
        assert all(v == 0.0 for vals in gain.values() for v in vals.values())

    def test_quarter_gain(self):
        a = metrics(["a", "a", "b", "b"], ["a", "a", "b", "b"], ["a", "b"])
        b = metrics(["a", "b", "b", "b"], ["a", "a", "b", "b"], ["a", "b"])
        gain = relative_improvement(a, b)
        # F1(a): 1.0 vs 2/3 -> +50%; recall(a): 1.0 vs 0.5 -> +100%
        assert gain["a"]["f1"] == pytest.approx(50.0)
        assert gain["a"]["recall"] == pytest.approx(100.0)

    def test_zero_baseline_marked_undefined(self):
        a = metrics(["a", "b"], ["a", "b"], ["a", "b"])
        b = metrics(["b", "a"], ["a", "b"], ["a", "b"])  # all wrong: F1 = 0
        gain = relative_improvement(a, b)
        assert gain["a"]["f1"] is None


class TestTopxFilter:
    LABELS = ["a"] * 5 + ["b"] * 3 + ["c"] * 2

    def test_full_x_drop_is_identity(self):
        instances = list(range(10))
        kept, labels = topx_filter(instances, self.LABELS, 3, "drop_others")
        assert kept == instances and labels == self.LABELS

    def test_x_one_keeps_majority_only(self):
        kept, labels = topx_filter(list(range(10)), self.LABELS, 1, "drop_others")
        assert labels == ["a"] * 5 and kept == list(range(5))

    def test_merge_other_label_space(self):
        kept, labels = topx_filter(list(range(10)), self.LABELS, 1, "merge_other")
        assert kept == list(range(10))
        assert set(labels) == {"a", "other"}
        assert len(set(labels)) == 2

    def test_existing_other_label_conflict(self):
        with pytest.raises(ValueError):
            topx_filter([1, 2], ["other", "x"], 1, "merge_other")

    def test_x_out_of_range(self):
        with pytest.raises(ValueError):
            topx_filter(list(range(10)), self.LABELS, 4, "drop_others")


class TestLengthBuckets:
    def test_single_bucket(self):
        buckets = length_buckets(["a", "a"], ["a", "a"], [3, 3])
        assert buckets == {"3": (2, 1.0)}

    def test_empty_buckets_absent(self):
        buckets = length_buckets(["a"], ["a"], [2])
        assert "5" not in buckets

    def test_overflow_bucket(self):
        buckets = length_buckets(["a", "b"], ["a", "a"], [16, 40])
        assert buckets == {"15+": (2, 0.5)}

    @given(st.lists(st.tuples(st.booleans(), st.integers(1, 20)), min_size=1, max_size=40))
    @settings(max_examples=60)
    def test_bucket_weighted_mean_equals_overall_accuracy(self, rows):
        preds = ["a" if ok else "b" for ok, _ in rows]
        truths = ["a"] * len(rows)
        lengths = [n for _, n in rows]
        buckets = length_buckets(preds, truths, lengths)
        total = sum(n for n, _ in buckets.values())
        weighted = sum(n * acc for n, acc in buckets.values()) / total
        overall = sum(p == t for p, t in zip(preds, truths)) / len(rows)
        assert weighted == pytest.approx(overall, abs=1e-12)
