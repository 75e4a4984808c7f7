"""Per-source transferred models and the stacking meta-model.

Meta-features for meta-model training are produced out-of-fold: each
instance's feature row comes from transferred models trained on the other
inner folds, so the meta-model never sees a feature produced by a model that
saw the instance. The fold bookkeeping is kept on the trained ensemble so the
no-leakage property can be audited.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import nn
from .embedders import SOURCE_ORDER, EmbeddingNetwork, TransferredEmbedding
from .linear import LogisticRegressionGD
from .text import Document
from .util import stage_seed


@dataclass(frozen=True)
class LabeledInstance:
    document: Document
    category: str


# --- pluggable stage classifiers ---------------------------------------------


class NeuralClassifier:
    """Dense relu -> softmax network trained with Adam."""

    kind = "neural"

    def __init__(self, hidden: int = 100, epochs: int = 20, batch_size: int = 32, lr: float = 0.001):
        self.hidden = hidden
        self.epochs = epochs
        self.batch_size = batch_size
        self.lr = lr
        self.spec = None
        self.params = None

    def fit(self, x: np.ndarray, y: np.ndarray, n_classes: int, seed: int = 0):
        self.spec = nn.feedforward_classifier(x.shape[1], n_classes, hidden=self.hidden)
        self.params = nn.init_params(self.spec, seed)
        cfg = nn.TrainConfig(epochs=self.epochs, batch_size=self.batch_size, seed=seed, lr=self.lr)
        nn.train(self.spec, self.params, x, y, cfg, nn.CLASS_CE)
        return self

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        if self.params is None:
            raise RuntimeError("classifier not fitted")
        return nn.predict_proba(self.spec, self.params, x)

    def to_payload(self) -> dict:
        from .nn import serialize

        return {
            "hidden": self.hidden,
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "lr": self.lr,
            "spec": serialize.spec_to_dict(self.spec),
            "params": serialize.params_to_dict(self.params),
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "NeuralClassifier":
        from .nn import serialize

        obj = cls(payload["hidden"], payload["epochs"], payload["batch_size"], payload["lr"])
        obj.spec = serialize.spec_from_dict(payload["spec"])
        obj.params = serialize.params_from_dict(payload["params"])
        return obj


class LogisticClassifier:
    """Multinomial logistic regression trained by full-batch gradient descent."""

    kind = "logreg"

    def __init__(self, reg: float = 1.0, tol: float = 1e-8, max_iter: int = 5000):
        self.reg = reg
        self.tol = tol
        self.max_iter = max_iter
        self.model: LogisticRegressionGD | None = None

    def fit(self, x: np.ndarray, y: np.ndarray, n_classes: int, seed: int = 0):
        # convex objective from zero init: the seed is irrelevant by design
        self.model = LogisticRegressionGD(reg=self.reg, tol=self.tol, max_iter=self.max_iter)
        self.model.fit(x, y, n_classes)
        return self

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        if self.model is None:
            raise RuntimeError("classifier not fitted")
        return self.model.predict_proba(x)

    def to_payload(self) -> dict:
        return {
            "reg": self.reg,
            "tol": self.tol,
            "max_iter": self.max_iter,
            "coef": self.model.coef.tolist(),
            "intercept": self.model.intercept.tolist(),
            "n_classes": self.model.n_classes,
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "LogisticClassifier":
        obj = cls(payload["reg"], payload["tol"], payload["max_iter"])
        obj.model = LogisticRegressionGD(reg=payload["reg"], tol=payload["tol"])
        obj.model.coef = np.array(payload["coef"])
        obj.model.intercept = np.array(payload["intercept"])
        obj.model.n_classes = payload["n_classes"]
        return obj


CLASSIFIERS = {"neural": NeuralClassifier, "logreg": LogisticClassifier}


def register_classifier(kind: str, factory) -> None:
    """Hook for additional stage classifiers (e.g. tree ensembles)."""
    CLASSIFIERS[kind] = factory


@dataclass(frozen=True)
class StackerConfig:
    inner_k: int = 5
    seed: int = 0
    model_classifier: str = "neural"
    model_hidden: int = 100
    model_epochs: int = 20
    model_batch_size: int = 32
    model_lr: float = 0.001
    meta_classifier: str = "logreg"
    meta_reg: float = 1.0
    meta_tol: float = 1e-8

    def make_model_classifier(self):
        if self.model_classifier == "neural":
            return NeuralClassifier(
                hidden=self.model_hidden,
                epochs=self.model_epochs,
                batch_size=self.model_batch_size,
                lr=self.model_lr,
            )
        return CLASSIFIERS[self.model_classifier]()

    def make_meta_classifier(self):
        if self.meta_classifier == "logreg":
            return LogisticClassifier(reg=self.meta_reg, tol=self.meta_tol)
        return CLASSIFIERS[self.meta_classifier]()


# --- transferred models -------------------------------------------------------


@dataclass
class TransferredModel:
    source_tag: str
    classifier: object
    class_order: tuple[str, ...]

    def predict_proba(self, embeddings: np.ndarray) -> np.ndarray:
        return self.classifier.predict_proba(embeddings)


def train_transferred_model(
    embeddings: Sequence[TransferredEmbedding] | np.ndarray,
    labels: Sequence[str],
    class_order: tuple[str, ...],
    cfg: StackerConfig = StackerConfig(),
    *,
    source_tag: str | None = None,
    seed: int | None = None,
) -> TransferredModel:
    """Fit one source's classifier on its embeddings against the target labels."""
    if isinstance(embeddings, np.ndarray):
        if source_tag is None:
            raise ValueError("source_tag required with a raw feature matrix")
        x = embeddings
    else:
        tags = {e.source_tag for e in embeddings}
        if len(tags) > 1:
            raise ValueError(f"mixed source tags: {sorted(tags)}")
        if source_tag is None:
            source_tag = next(iter(tags)) if tags else None
        if source_tag is None:
            raise ValueError("no embeddings and no source_tag")
        x = np.stack([e.vector for e in embeddings]) if embeddings else np.zeros((0, 0))
    if x.shape[0] != len(labels):
        raise ValueError("embeddings and labels must align")
    if x.shape[0] < len(class_order):
        raise ValueError(
            f"need at least {len(class_order)} instances, got {x.shape[0]}"
        )
    index = {c: i for i, c in enumerate(class_order)}
    y = np.array([index[lbl] for lbl in labels])
    clf = cfg.make_model_classifier()
    clf.fit(x, y, len(class_order), seed=cfg.seed if seed is None else seed)
    return TransferredModel(source_tag=source_tag, classifier=clf, class_order=class_order)


def meta_features(
    models: Sequence[TransferredModel], embeddings_by_source: Mapping[str, np.ndarray]
) -> np.ndarray:
    """Concatenate per-model probability vectors in the fixed source order."""
    ordered = sorted(models, key=lambda m: SOURCE_ORDER.index(m.source_tag))
    blocks = []
    for model in ordered:
        if model.source_tag not in embeddings_by_source:
            raise ValueError(f"no embeddings for source {model.source_tag!r}")
        blocks.append(model.predict_proba(embeddings_by_source[model.source_tag]))
    return np.concatenate(blocks, axis=1)


# --- the stacked ensemble -----------------------------------------------------


@dataclass
class StackedEnsemble:
    models: list[TransferredModel]
    meta: object
    class_order: tuple[str, ...]
    source_order: tuple[str, ...]
    oof_audit: dict = field(default_factory=dict, repr=False)

    def predict_proba(self, embeddings_by_source: Mapping[str, np.ndarray]) -> np.ndarray:
        features = meta_features(self.models, embeddings_by_source)
        return self.meta.predict_proba(features)

    def predict(self, embeddings_by_source: Mapping[str, np.ndarray]) -> list[str]:
        probs = self.predict_proba(embeddings_by_source)
        return [_argmax_category(row, self.class_order) for row in probs]


def _argmax_category(probs: np.ndarray, class_order: tuple[str, ...]) -> str:
    # lexicographic tie-break on equal probabilities
    best = np.flatnonzero(probs == probs.max())
    return min(class_order[i] for i in best)


@dataclass
class OofStage:
    """Shared first-stage artifacts: out-of-fold probability blocks, the
    transferred models refit on the full training set, and the fold
    bookkeeping that backs the no-leakage audit."""

    sources: tuple[str, ...]
    oof: dict[str, np.ndarray]  # source -> (n, K) out-of-fold probabilities
    full_models: dict[str, TransferredModel]
    fold_of: np.ndarray
    train_indices: dict[int, list[int]]


def fit_oof_stage(
    features_by_source: Mapping[str, np.ndarray],
    labels: Sequence[str],
    class_order: tuple[str, ...],
    cfg: StackerConfig = StackerConfig(),
) -> OofStage:
    """Train per-source models on inner folds (for meta-features) and in full."""
    from .evaluation import stratified_kfold

    if cfg.inner_k < 2:
        raise ValueError("inner_k must be >= 2")
    sources = tuple(s for s in SOURCE_ORDER if s in features_by_source)
    if not sources:
        raise ValueError("no embedding sources given")
    n = len(labels)
    for s in sources:
        if features_by_source[s].shape[0] != n:
            raise ValueError(f"source {s!r} features do not align with labels")

    folds = stratified_kfold(labels, cfg.inner_k, stage_seed(cfg.seed, "stacker-folds"))
    folds = _reassign_singletons(labels, folds, cfg.inner_k)

    k_classes = len(class_order)
    oof = {s: np.zeros((n, k_classes)) for s in sources}
    train_indices_by_fold: dict[int, list[int]] = {}
    for fold in range(cfg.inner_k):
        holdout = np.flatnonzero(folds == fold)
        train_idx = np.flatnonzero(folds != fold)
        if holdout.size == 0:
            continue
        train_indices_by_fold[fold] = train_idx.tolist()
        for s in sources:
            model = train_transferred_model(
                features_by_source[s][train_idx],
                [labels[i] for i in train_idx],
                class_order,
                cfg,
                source_tag=s,
                seed=stage_seed(cfg.seed, f"oof-{s}-{fold}"),
            )
            oof[s][holdout] = model.predict_proba(features_by_source[s][holdout])

    full_models = {
        s: train_transferred_model(
            features_by_source[s],
            labels,
            class_order,
            cfg,
            source_tag=s,
            seed=stage_seed(cfg.seed, f"full-{s}"),
        )
        for s in sources
    }
    return OofStage(
        sources=sources,
        oof=oof,
        full_models=full_models,
        fold_of=folds,
        train_indices=train_indices_by_fold,
    )


def stack_from_stage(
    stage: OofStage,
    labels: Sequence[str],
    class_order: tuple[str, ...],
    cfg: StackerConfig = StackerConfig(),
    sources: Sequence[str] | None = None,
) -> StackedEnsemble:
    """Fit a meta-model over (a subset of) the stage's out-of-fold blocks."""
    chosen = tuple(s for s in SOURCE_ORDER if s in (sources or stage.sources))
    missing = set(chosen) - set(stage.sources)
    if missing:
        raise ValueError(f"stage has no sources {sorted(missing)}")
    index = {c: i for i, c in enumerate(class_order)}
    y = np.array([index[lbl] for lbl in labels])
    meta_x = np.concatenate([stage.oof[s] for s in chosen], axis=1)
    meta = cfg.make_meta_classifier()
    meta.fit(meta_x, y, len(class_order), seed=stage_seed(cfg.seed, "meta"))
    return StackedEnsemble(
        models=[stage.full_models[s] for s in chosen],
        meta=meta,
        class_order=class_order,
        source_order=chosen,
        oof_audit={
            "fold_of": {i: int(stage.fold_of[i]) for i in range(len(labels))},
            "train_indices": stage.train_indices,
        },
    )


def train_stacker_on_features(
    features_by_source: Mapping[str, np.ndarray],
    labels: Sequence[str],
    class_order: tuple[str, ...],
    cfg: StackerConfig = StackerConfig(),
) -> StackedEnsemble:
    """Fit transferred models and the meta-model with out-of-fold meta-features."""
    stage = fit_oof_stage(features_by_source, labels, class_order, cfg)
    return stack_from_stage(stage, labels, class_order, cfg)


def _reassign_singletons(labels: Sequence[str], folds: np.ndarray, k: int) -> np.ndarray:
    """Move single-instance classes into the currently largest fold."""
    from collections import Counter

    counts = Counter(labels)
    singles = [i for i, lbl in enumerate(labels) if counts[lbl] == 1]
    if not singles:
        return folds
    folds = folds.copy()
    for i in singles:
        sizes = np.bincount(folds, minlength=k)
        folds[i] = int(np.argmax(sizes))
    warnings.warn(
        f"{len(singles)} single-instance classes assigned to the largest inner fold"
    )
    return folds


def train_stacker(
    instances: Sequence[LabeledInstance],
    nets: Mapping[str, EmbeddingNetwork],
    cfg: StackerConfig = StackerConfig(),
) -> StackedEnsemble:
    """Train the full ensemble from labeled documents and embedding networks."""
    docs = [inst.document for inst in instances]
    labels = [inst.category for inst in instances]
    class_order = tuple(sorted(set(labels)))
    features = {tag: net.embed_matrix(docs) for tag, net in nets.items()}
    return train_stacker_on_features(features, labels, class_order, cfg)


def ensemble_predict(
    ensemble: StackedEnsemble, nets: Mapping[str, EmbeddingNetwork], doc: Document
) -> tuple[str, np.ndarray]:
    """Predict one document end to end; returns (category, probability vector)."""
    features = {}
    for source in ensemble.source_order:
        if source not in nets:
            raise ValueError(f"missing embedding network for source {source!r}")
        features[source] = nets[source].embed_matrix([doc])
    probs = ensemble.predict_proba(features)[0]
    return _argmax_category(probs, ensemble.class_order), probs


# --- persistence --------------------------------------------------------------

ENSEMBLE_FORMAT = "itemcat-ensemble/1"


def _classifier_to_dict(clf) -> dict:
    return {"kind": clf.kind, "payload": clf.to_payload()}


def _classifier_from_dict(d: dict):
    cls = CLASSIFIERS[d["kind"]]
    return cls.from_payload(d["payload"])


def save_ensemble(ensemble: StackedEnsemble, path) -> None:
    payload = {
        "format": ENSEMBLE_FORMAT,
        "class_order": list(ensemble.class_order),
        "source_order": list(ensemble.source_order),
        "models": [
            {
                "source_tag": m.source_tag,
                "class_order": list(m.class_order),
                "classifier": _classifier_to_dict(m.classifier),
            }
            for m in ensemble.models
        ],
        "meta": _classifier_to_dict(ensemble.meta),
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, sort_keys=True)
        f.write("\n")


def load_ensemble(path) -> StackedEnsemble:
    with open(path, "r", encoding="utf-8") as f:
        payload = json.load(f)
    if payload.get("format") != ENSEMBLE_FORMAT:
        raise ValueError(f"unsupported ensemble format {payload.get('format')!r}")
    models = [
        TransferredModel(
            source_tag=m["source_tag"],
            classifier=_classifier_from_dict(m["classifier"]),
            class_order=tuple(m["class_order"]),
        )
        for m in payload["models"]
    ]
    return StackedEnsemble(
        models=models,
        meta=_classifier_from_dict(payload["meta"]),
        class_order=tuple(payload["class_order"]),
        source_order=tuple(payload["source_order"]),
    )
