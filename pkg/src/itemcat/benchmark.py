"""The cross-validated method comparison harness.

Runs every enabled method under one stratified outer cross-validation, scores
folds, pools predictions for confusion/per-class analyses, and runs the
significance tests. Expensive resources (embedding networks, document
embeddings) are built once up front; everything trained against sample labels
is refit inside each outer fold so no model ever sees its test fold.
"""

from __future__ import annotations

import time
import warnings
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import stats
from .adjudication import (
    AnnotatorResponse,
    adjudicate_all,
    apply_replacements,
    collect_batches,
    detect_lazy,
)
from .embedders import (
    SOURCE_ORDER,
    CategoryScheme,
    EmbedderConfig,
    build_embedding_networks,
)
from .evaluation import (
    EvalReport,
    bucket_sort_key,
    length_buckets,
    metrics,
    stratified_kfold,
    topx_filter,
)
from .features import (
    EmbeddingTable,
    avg_vectors_matrix,
    fit_tfidf,
    tfidf_matrix,
)
from .linear import LogisticRegressionGD
from .stacking import NeuralClassifier, StackerConfig, fit_oof_stage, stack_from_stage
from .text import Document, Vocabulary, build_vocab, preprocess_document
from .util import stage_seed

METHOD_MAJORITY = "majority"
METHOD_TFIDF = "tfidf"
METHOD_AVG_VECTORS = "avg_vectors"
METHOD_PRECOMPUTED = "precomputed"
METHOD_AUTOENCODER = "autoencoder"
METHOD_RELATED = "related"
METHOD_INDUSTRY = "industry"
METHOD_ENSEMBLE = "ensemble_full"

_SOURCE_SHORT = {
    "industry_goods": "indg",
    "industry_services": "inds",
    "related": "rel",
    "autoencoder": "ae",
}


def partial_ensemble_name(sources: Sequence[str]) -> str:
    return "ensemble_" + "+".join(_SOURCE_SHORT[s] for s in SOURCE_ORDER if s in sources)


@dataclass(frozen=True)
class BenchmarkSettings:
    seed: int = 0
    k_outer: int = 10
    k_inner: int = 5
    vocab_size: int = 20000
    tfidf_terms: int = 3500
    tfidf_reg: float = 1.0
    embedder: EmbedderConfig = EmbedderConfig()
    autoencoder_epochs: int | None = 1
    model_hidden: int = 100
    model_epochs: int = 20
    model_batch_size: int = 64
    model_lr: float = 0.001
    meta_reg: float = 1.0
    meta_tol: float = 1e-8
    partial_ensembles: bool = True
    topx_values: tuple[int, ...] = ()
    topx_mode: str = "drop_others"
    lazy_threshold: float = 0.20

    def stacker_config(self, seed: int) -> StackerConfig:
        return StackerConfig(
            inner_k=self.k_inner,
            seed=seed,
            model_hidden=self.model_hidden,
            model_epochs=self.model_epochs,
            model_batch_size=self.model_batch_size,
            model_lr=self.model_lr,
            meta_reg=self.meta_reg,
            meta_tol=self.meta_tol,
        )


@dataclass
class LeakageAudit:
    """Instrumented id bookkeeping backing the no-leakage guarantees."""

    embedder_corpus_ids: dict[str, set[str]] = field(default_factory=dict)
    sample_ids: set[str] = field(default_factory=set)
    outer_train_ids: dict[int, set[str]] = field(default_factory=dict)
    outer_test_ids: dict[int, set[str]] = field(default_factory=dict)
    # (outer fold, instance id) -> ids its meta-feature models were trained on
    meta_feature_train_ids: dict[tuple[int, str], set[str]] = field(default_factory=dict)

    def verify(self) -> list[str]:
        """Returns human-readable failures; an empty list means all clear."""
        problems = []
        for tag, corpus_ids in self.embedder_corpus_ids.items():
            overlap = corpus_ids & self.sample_ids
            if overlap:
                problems.append(f"embedder {tag} trained on sample ids {sorted(overlap)[:3]}")
        for fold, test_ids in self.outer_test_ids.items():
            overlap = self.outer_train_ids[fold] & test_ids
            if overlap:
                problems.append(f"outer fold {fold} train/test overlap {sorted(overlap)[:3]}")
        for (fold, instance_id), trained_on in self.meta_feature_train_ids.items():
            if instance_id in trained_on:
                problems.append(f"meta-features of {instance_id} (fold {fold}) leak itself")
        return problems


@dataclass
class MethodResult:
    name: str
    fold_accuracy: list[float]
    fold_weighted_f1: list[float]
    pooled: EvalReport
    predictions: list[str]  # aligned with the labeled sample order

    @property
    def mean_accuracy(self) -> float:
        return float(np.mean(self.fold_accuracy))

    @property
    def mean_weighted_f1(self) -> float:
        return float(np.mean(self.fold_weighted_f1))


@dataclass
class BenchmarkReport:
    settings: BenchmarkSettings
    class_order: tuple[str, ...]
    instance_ids: list[str]
    truths: list[str]
    token_lengths: list[int]
    fold_of: np.ndarray
    methods: dict[str, MethodResult]
    verdict_counts: dict[str, int]
    anova_accuracy: stats.AnovaResult
    anova_weighted_f1: stats.AnovaResult
    tukey_accuracy: stats.SignificanceTable
    tukey_weighted_f1: stats.SignificanceTable
    relative_gain: dict[str, dict[str, float | None]]
    relative_gain_baseline: str
    buckets: dict[str, tuple[int, float]]
    topx: list[tuple[str, int, str, float]]  # (method, x, mode, mean accuracy)
    audit: LeakageAudit
    timings: dict[str, float]
    skipped: list[str]

    def method_order(self) -> list[str]:
        return sorted(self.methods, key=lambda m: self.methods[m].mean_accuracy)


def _majority_label(labels: Sequence[str]) -> str:
    counts = Counter(labels)
    top = max(counts.values())
    return min(lbl for lbl, c in counts.items() if c == top)


def _argmax_labels(probs: np.ndarray, class_order: Sequence[str]) -> list[str]:
    out = []
    for row in probs:
        best = np.flatnonzero(row == row.max())
        out.append(min(class_order[i] for i in best))
    return out


def adjudicate_sample(
    sample_docs: Sequence[Document],
    responses: Sequence[AnnotatorResponse],
    replacements: Sequence[AnnotatorResponse],
    expert_labels: Mapping[str, str] | None,
    lazy_threshold: float = 0.20,
):
    """Run the full labeling pipeline; returns (docs, labels, verdict counts).

    Lazy annotators are detected, their answers dropped and replaced, then
    every instance is adjudicated; uninformative and unresolved instances drop
    out of the labeled set.
    """
    batches = collect_batches(responses)
    lazy = detect_lazy(batches, threshold=lazy_threshold)
    if lazy:
        batches = apply_replacements(batches, lazy, replacements)
    label_map, counts = adjudicate_all(batches, expert_labels)
    docs, labels = [], []
    for doc in sample_docs:
        if doc.id in label_map:
            docs.append(doc)
            labels.append(label_map[doc.id])
    return docs, labels, counts, lazy


def run_benchmark(
    target_docs: Sequence[Document],
    related_docs: Sequence[Document],
    sample_docs: Sequence[Document],
    responses: Sequence[AnnotatorResponse],
    replacements: Sequence[AnnotatorResponse],
    expert_labels: Mapping[str, str] | None,
    scheme: CategoryScheme,
    word_table: EmbeddingTable,
    settings: BenchmarkSettings,
    precomputed_vectors: EmbeddingTable | None = None,
) -> BenchmarkReport:
    timings: dict[str, float] = {}
    skipped: list[str] = []
    audit = LeakageAudit()

    t0 = time.perf_counter()
    docs, labels, verdict_counts, _ = adjudicate_sample(
        sample_docs, responses, replacements, expert_labels, settings.lazy_threshold
    )
    if not docs:
        raise ValueError("no labeled instances after adjudication")
    timings["adjudication"] = time.perf_counter() - t0
    class_order = tuple(scheme.categories)
    instance_ids = [d.id for d in docs]
    sample_tokens = [preprocess_document(d) for d in docs]
    token_lengths = [len(t) for t in sample_tokens]

    audit.sample_ids = {d.id for d in sample_docs}
    sample_id_set = audit.sample_ids

    # shared resources: one vocabulary over both corpora, four embedding
    # networks, and the per-source embedding of every labeled sample document
    t0 = time.perf_counter()
    corpus_docs = [d for d in list(target_docs) + list(related_docs) if d.id not in sample_id_set]
    vocab = build_vocab((preprocess_document(d) for d in corpus_docs), settings.vocab_size)
    timings["vocab"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    nets = build_embedding_networks(
        target_docs,
        related_docs,
        scheme,
        vocab=vocab,
        table=word_table,
        cfg=settings.embedder,
        seed=stage_seed(settings.seed, "embedders"),
        exclude_ids=sample_id_set,
        autoencoder_epochs=settings.autoencoder_epochs,
    )
    for tag, net in nets.items():
        corpus_ids = set()
        if tag == "industry_goods":
            corpus_ids = {d.id for d in target_docs if d.id not in sample_id_set and d.seller_industry in scheme.goods}
        elif tag == "industry_services":
            corpus_ids = {d.id for d in target_docs if d.id not in sample_id_set and d.seller_industry not in scheme.goods}
        elif tag == "related":
            corpus_ids = {d.id for d in related_docs if d.id not in sample_id_set}
        elif tag == "autoencoder":
            corpus_ids = {d.id for d in target_docs if d.id not in sample_id_set}
        audit.embedder_corpus_ids[tag] = corpus_ids
    timings["embedders"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    embeddings = {tag: net.embed_matrix(docs) for tag, net in nets.items()}
    avg_features = avg_vectors_matrix(sample_tokens, word_table)
    pre_features = None
    if precomputed_vectors is not None:
        missing = [i for i in instance_ids if i not in precomputed_vectors.vectors]
        if missing:
            warnings.warn(f"{len(missing)} instances lack precomputed vectors; using zeros")
        pre_features = np.stack([precomputed_vectors.get(i) for i in instance_ids])
    else:
        skipped.append(METHOD_PRECOMPUTED)
        warnings.warn("precomputed document vectors not provided; skipping that baseline")
    timings["embedding_extraction"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    fold_of = stratified_kfold(labels, settings.k_outer, stage_seed(settings.seed, "outer-folds"))
    predictions, method_names = _run_folds(
        settings, class_order, labels, sample_tokens, embeddings, avg_features,
        pre_features, fold_of, instance_ids, audit,
    )
    timings["folds"] = time.perf_counter() - t0

    methods: dict[str, MethodResult] = {}
    for name in method_names:
        preds = predictions[name]
        fold_acc, fold_f1 = [], []
        for fold in range(settings.k_outer):
            test = np.flatnonzero(fold_of == fold)
            if test.size == 0:
                continue
            rep = metrics([preds[i] for i in test], [labels[i] for i in test], class_order)
            fold_acc.append(rep.accuracy)
            fold_f1.append(rep.weighted_f1)
        pooled = metrics(preds, labels, class_order)
        methods[name] = MethodResult(name, fold_acc, fold_f1, pooled, preds)

    # significance tests run over the core compared methods; partial ensembles
    # are an auxiliary analysis and would exceed the quantile table's 10 groups
    core = [
        m
        for m in (
            METHOD_MAJORITY, METHOD_TFIDF, METHOD_AVG_VECTORS, METHOD_PRECOMPUTED,
            METHOD_AUTOENCODER, METHOD_RELATED, METHOD_INDUSTRY, METHOD_ENSEMBLE,
        )
        if m in methods
    ]
    acc_groups = [methods[m].fold_accuracy for m in core]
    f1_groups = [methods[m].fold_weighted_f1 for m in core]
    anova_acc = stats.anova(acc_groups)
    anova_f1 = stats.anova(f1_groups)
    tukey_acc = stats.tukey_hsd(acc_groups, labels=core)
    tukey_f1 = stats.tukey_hsd(f1_groups, labels=core)

    single_methods = [m for m in (METHOD_AUTOENCODER, METHOD_RELATED, METHOD_INDUSTRY) if m in methods]
    best_single = max(single_methods, key=lambda m: methods[m].mean_accuracy) if single_methods else None
    if best_single and METHOD_ENSEMBLE in methods:
        from .evaluation import relative_improvement

        gain = relative_improvement(methods[METHOD_ENSEMBLE].pooled, methods[best_single].pooled)
    else:
        gain, best_single = {}, best_single or ""

    buckets = (
        length_buckets(methods[METHOD_ENSEMBLE].predictions, labels, token_lengths)
        if METHOD_ENSEMBLE in methods
        else {}
    )

    topx_rows = _run_topx(
        settings, class_order, labels, sample_tokens, embeddings, avg_features,
        pre_features, instance_ids,
    )

    problems = audit.verify()
    if problems:
        raise RuntimeError("leakage audit failed: " + "; ".join(problems))

    return BenchmarkReport(
        settings=settings,
        class_order=class_order,
        instance_ids=instance_ids,
        truths=labels,
        token_lengths=token_lengths,
        fold_of=fold_of,
        methods=methods,
        verdict_counts=verdict_counts,
        anova_accuracy=anova_acc,
        anova_weighted_f1=anova_f1,
        tukey_accuracy=tukey_acc,
        tukey_weighted_f1=tukey_f1,
        relative_gain=gain,
        relative_gain_baseline=best_single,
        buckets=buckets,
        topx=topx_rows,
        audit=audit,
        timings=timings,
        skipped=skipped,
    )


def _ensemble_subsets(sources: Sequence[str]) -> list[tuple[str, ...]]:
    from itertools import combinations

    subsets = []
    for size in range(2, len(sources)):
        subsets.extend(combinations(sources, size))
    return subsets


def _run_folds(
    settings, class_order, labels, sample_tokens, embeddings, avg_features,
    pre_features, fold_of, instance_ids, audit: LeakageAudit | None,
):
    """Train and predict every method fold by fold; returns OOF predictions."""
    n = len(labels)
    sources = tuple(s for s in SOURCE_ORDER if s in embeddings)
    method_names = [METHOD_MAJORITY, METHOD_TFIDF, METHOD_AVG_VECTORS]
    if pre_features is not None:
        method_names.append(METHOD_PRECOMPUTED)
    if "autoencoder" in embeddings:
        method_names.append(METHOD_AUTOENCODER)
    if "related" in embeddings:
        method_names.append(METHOD_RELATED)
    industry_sources = [s for s in ("industry_goods", "industry_services") if s in embeddings]
    if industry_sources:
        method_names.append(METHOD_INDUSTRY)
    subset_names = []
    if settings.partial_ensembles and len(sources) > 2:
        for subset in _ensemble_subsets(sources):
            subset_names.append((partial_ensemble_name(subset), subset))
    method_names.extend(name for name, _ in subset_names)
    if len(sources) >= 2:
        method_names.append(METHOD_ENSEMBLE)

    predictions = {name: [None] * n for name in method_names}
    k_outer = int(fold_of.max()) + 1
    for fold in range(k_outer):
        test_idx = np.flatnonzero(fold_of == fold)
        train_idx = np.flatnonzero(fold_of != fold)
        if test_idx.size == 0:
            continue
        if audit is not None:
            audit.outer_train_ids[fold] = {instance_ids[i] for i in train_idx}
            audit.outer_test_ids[fold] = {instance_ids[i] for i in test_idx}
        train_labels = [labels[i] for i in train_idx]
        y_train = np.array([class_order.index(lbl) for lbl in train_labels])
        fold_seed = stage_seed(settings.seed, f"fold-{fold}")

        # majority
        top = _majority_label(train_labels)
        for i in test_idx:
            predictions[METHOD_MAJORITY][i] = top

        # tf-idf + logistic regression
        tfidf = fit_tfidf([sample_tokens[i] for i in train_idx], settings.tfidf_terms)
        x_train = tfidf_matrix(tfidf, (sample_tokens[i] for i in train_idx))
        x_test = tfidf_matrix(tfidf, (sample_tokens[i] for i in test_idx))
        logreg = LogisticRegressionGD(reg=settings.tfidf_reg, tol=1e-6, max_iter=1500)
        logreg.fit(x_train, y_train, len(class_order))
        for i, row_label in zip(test_idx, _argmax_labels(logreg.predict_proba(x_test), class_order)):
            predictions[METHOD_TFIDF][i] = row_label

        # dense-feature baselines share one training routine
        def fit_dense(name, features, seed_tag):
            clf = NeuralClassifier(
                hidden=settings.model_hidden,
                epochs=settings.model_epochs,
                batch_size=settings.model_batch_size,
                lr=settings.model_lr,
            )
            clf.fit(features[train_idx], y_train, len(class_order), seed=stage_seed(fold_seed, seed_tag))
            for i, row_label in zip(
                test_idx, _argmax_labels(clf.predict_proba(features[test_idx]), class_order)
            ):
                predictions[name][i] = row_label

        fit_dense(METHOD_AVG_VECTORS, avg_features, "avg")
        if pre_features is not None:
            fit_dense(METHOD_PRECOMPUTED, pre_features, "precomputed")
        if industry_sources:
            industry_features = np.concatenate([embeddings[s] for s in industry_sources], axis=1)
            fit_dense(METHOD_INDUSTRY, industry_features, "industry")

        # transferred models: one shared out-of-fold stage per outer fold
        if sources:
            train_features = {s: embeddings[s][train_idx] for s in sources}
            test_features = {s: embeddings[s][test_idx] for s in sources}
            stage = fit_oof_stage(
                train_features, train_labels, class_order, settings.stacker_config(fold_seed)
            )
            if audit is not None:
                for local_pos, global_pos in enumerate(train_idx):
                    inner_fold = int(stage.fold_of[local_pos])
                    trained_on = stage.train_indices.get(inner_fold, [])
                    audit.meta_feature_train_ids[(fold, instance_ids[global_pos])] = {
                        instance_ids[train_idx[j]] for j in trained_on
                    }
            for single, source in ((METHOD_AUTOENCODER, "autoencoder"), (METHOD_RELATED, "related")):
                if source in stage.full_models:
                    probs = stage.full_models[source].predict_proba(test_features[source])
                    for i, row_label in zip(test_idx, _argmax_labels(probs, class_order)):
                        predictions[single][i] = row_label
            ensembles = [(METHOD_ENSEMBLE, sources)] if len(sources) >= 2 else []
            ensembles.extend(subset_names)
            for name, subset in ensembles:
                ensemble = stack_from_stage(
                    stage, train_labels, class_order, settings.stacker_config(fold_seed), subset
                )
                for i, row_label in zip(test_idx, ensemble.predict(test_features)):
                    predictions[name][i] = row_label

    return predictions, method_names


def _run_topx(
    settings, class_order, labels, sample_tokens, embeddings, avg_features,
    pre_features, instance_ids,
):
    """Re-run the fold pipeline on top-X-restricted datasets (embeddings reused)."""
    rows: list[tuple[str, int, str, float]] = []
    for x in settings.topx_values:
        keep_idx, new_labels = topx_filter(list(range(len(labels))), labels, x, settings.topx_mode)
        idx = np.array(keep_idx, dtype=np.int64)
        sub_labels = list(new_labels)
        sub_order = tuple(c for c in class_order if c in set(sub_labels))
        if settings.topx_mode == "merge_other":
            sub_order = tuple([c for c in sub_order if c != "other"] + ["other"])
        sub_tokens = [sample_tokens[i] for i in idx]
        sub_embeddings = {s: m[idx] for s, m in embeddings.items()}
        sub_avg = avg_features[idx]
        sub_pre = pre_features[idx] if pre_features is not None else None
        sub_ids = [instance_ids[i] for i in idx]
        fold_of = stratified_kfold(sub_labels, settings.k_outer, stage_seed(settings.seed, f"topx-{x}"))
        predictions, names = _run_folds(
            settings, sub_order, sub_labels, sub_tokens, sub_embeddings, sub_avg,
            sub_pre, fold_of, sub_ids, None,
        )
        for name in names:
            rep = metrics(predictions[name], sub_labels, sub_order)
            rows.append((name, x, settings.topx_mode, rep.accuracy))
    return rows


# --- report files -------------------------------------------------------------


def _fmt(value) -> str:
    """Full-precision, numpy-free float formatting for deterministic files."""
    return repr(float(value))


def write_report(report: BenchmarkReport, out_dir) -> list[Path]:
    """Emit plot-ready tabular files plus a human-readable summary."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    def emit(name: str, header: str, rows):
        path = out / name
        with open(path, "w", encoding="utf-8") as f:
            f.write(header + "\n")
            for row in rows:
                f.write(",".join(str(v) for v in row) + "\n")
        written.append(path)

    method_order = sorted(report.methods)
    emit(
        "fold_scores.csv",
        "method,fold,accuracy,weighted_f1",
        (
            (m, fold, _fmt(acc), _fmt(f1))
            for m in method_order
            for fold, (acc, f1) in enumerate(
                zip(report.methods[m].fold_accuracy, report.methods[m].fold_weighted_f1)
            )
        ),
    )
    emit(
        "method_summary.csv",
        "method,mean_accuracy,std_accuracy,mean_weighted_f1,std_weighted_f1",
        (
            (
                m,
                _fmt(np.mean(r.fold_accuracy)),
                _fmt(np.std(r.fold_accuracy)),
                _fmt(np.mean(r.fold_weighted_f1)),
                _fmt(np.std(r.fold_weighted_f1)),
            )
            for m, r in ((m, report.methods[m]) for m in method_order)
        ),
    )
    emit(
        "anova.csv",
        "metric,f,p,df_between,df_within",
        [
            ("accuracy", _fmt(report.anova_accuracy.f), _fmt(report.anova_accuracy.p),
             report.anova_accuracy.df_between, report.anova_accuracy.df_within),
            ("weighted_f1", _fmt(report.anova_weighted_f1.f), _fmt(report.anova_weighted_f1.p),
             report.anova_weighted_f1.df_between, report.anova_weighted_f1.df_within),
        ],
    )
    for metric_name, table in (
        ("accuracy", report.tukey_accuracy),
        ("weighted_f1", report.tukey_weighted_f1),
    ):
        emit(
            f"tukey_{metric_name}.csv",
            "group_a,group_b,mean_diff,ci_low,ci_high,reject",
            (
                (p.group_a, p.group_b, _fmt(p.mean_diff), _fmt(p.ci_low), _fmt(p.ci_high), p.reject)
                for p in table.pairs
            ),
        )
    for m in method_order:
        rep = report.methods[m].pooled
        emit(
            f"confusion_{m}.csv",
            "truth\\pred," + ",".join(rep.confusion_order),
            (
                (cat, *rep.confusion[i].tolist())
                for i, cat in enumerate(rep.confusion_order)
            ),
        )
        emit(
            f"per_class_{m}.csv",
            "category,precision,recall,f1,support",
            (
                (cat, _fmt(c.precision), _fmt(c.recall), _fmt(c.f1), c.support)
                for cat, c in sorted(rep.per_class.items())
            ),
        )
    if report.relative_gain:
        emit(
            "relative_improvement.csv",
            f"category,f1_pct_vs_{report.relative_gain_baseline},precision_pct,recall_pct",
            (
                (
                    cat,
                    *(
                        "n/a" if v is None else _fmt(v)
                        for v in (vals["f1"], vals["precision"], vals["recall"])
                    ),
                )
                for cat, vals in sorted(report.relative_gain.items())
            ),
        )
    if report.buckets:
        emit(
            "length_buckets.csv",
            "token_count,instances,accuracy",
            (
                (b, report.buckets[b][0], _fmt(report.buckets[b][1]))
                for b in sorted(report.buckets, key=bucket_sort_key)
            ),
        )
    if report.topx:
        emit(
            "topx_accuracy.csv",
            "method,x,mode,accuracy",
            ((m, x, mode, _fmt(acc)) for m, x, mode, acc in report.topx),
        )
    emit(
        "verdicts.csv",
        "verdict,count",
        sorted(report.verdict_counts.items()),
    )

    lines = ["method comparison (mean over folds)", ""]
    for m in sorted(report.methods, key=lambda m: -report.methods[m].mean_accuracy):
        r = report.methods[m]
        lines.append(
            f"  {m:<28} accuracy {r.mean_accuracy:.4f} +- {np.std(r.fold_accuracy):.4f}"
            f"   weighted_f1 {r.mean_weighted_f1:.4f}"
        )
    lines.append("")
    lines.append(
        f"anova (accuracy): F={report.anova_accuracy.f:.4f} p={report.anova_accuracy.p:.3e}"
    )
    lines.append(
        f"anova (weighted F1): F={report.anova_weighted_f1.f:.4f} p={report.anova_weighted_f1.p:.3e}"
    )
    if report.skipped:
        lines.append(f"skipped methods: {', '.join(report.skipped)}")
    lines.append("")
    lines.append("timings (s): " + ", ".join(f"{k}={v:.1f}" for k, v in report.timings.items()))
    summary = out / "summary.txt"
    summary.write_text("\n".join(lines) + "\n", encoding="utf-8")
    written.append(summary)
    return written
