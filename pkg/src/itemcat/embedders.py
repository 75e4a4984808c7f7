"""Embedding networks trained on related corpora and the extraction of
fixed-width document embeddings from their relu bottleneck layer."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from . import nn
from .features import EmbeddingTable
from .text import DEFAULT_MAX_LEN, Document, Vocabulary, encode_batch, preprocess_document
from .util import stage_seed

SOURCE_INDUSTRY_GOODS = "industry_goods"
SOURCE_INDUSTRY_SERVICES = "industry_services"
SOURCE_RELATED = "related"
SOURCE_AUTOENCODER = "autoencoder"
# fixed order used everywhere embeddings from several sources are combined
SOURCE_ORDER = (
    SOURCE_INDUSTRY_GOODS,
    SOURCE_INDUSTRY_SERVICES,
    SOURCE_RELATED,
    SOURCE_AUTOENCODER,
)

LABEL_INDUSTRY = "industry"
LABEL_RELATED_CATEGORY = "related_category"
LABEL_SELF = "self"


@dataclass(frozen=True)
class CategoryScheme:
    """Ordered target categories partitioned into goods and services."""

    categories: tuple[str, ...]
    goods: frozenset[str]

    def __post_init__(self):
        if len(set(self.categories)) != len(self.categories):
            raise ValueError("duplicate categories in scheme")
        unknown = self.goods - set(self.categories)
        if unknown:
            raise ValueError(f"goods flags for unknown categories: {sorted(unknown)}")

    @property
    def services(self) -> frozenset[str]:
        return frozenset(self.categories) - self.goods

    def __contains__(self, category: str) -> bool:
        return category in set(self.categories)


def load_category_scheme(path) -> CategoryScheme:
    """File format: one `category goods|services` line per category, in order."""
    categories: list[str] = []
    goods: set[str] = set()
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2 or parts[1] not in ("goods", "services"):
                raise ValueError(f"{path}:{line_no}: expected `category goods|services`")
            categories.append(parts[0])
            if parts[1] == "goods":
                goods.add(parts[0])
    return CategoryScheme(tuple(categories), frozenset(goods))


def save_category_scheme(scheme: CategoryScheme, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for cat in scheme.categories:
            kind = "goods" if cat in scheme.goods else "services"
            f.write(f"{cat} {kind}\n")


def load_category_mapping(path) -> dict[str, str]:
    """`source_category target_category` lines mapping a related dataset's
    labels onto the target scheme."""
    mapping: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"{path}:{line_no}: expected `source target`")
            mapping[parts[0]] = parts[1]
    return mapping


def apply_category_mapping(
    docs: Sequence[Document], mapping: Mapping[str, str], scheme: CategoryScheme
) -> list[Document]:
    """Relabel gold categories through the mapping; targets must be goods."""
    out = []
    for doc in docs:
        if doc.gold_category is None:
            raise ValueError(f"document {doc.id!r} has no category to map")
        target = mapping.get(doc.gold_category)
        if target is None:
            raise ValueError(f"no mapping for category {doc.gold_category!r}")
        if target not in scheme.goods:
            raise ValueError(f"mapped category {target!r} is not a goods category")
        out.append(
            Document(
                id=doc.id,
                item_name=doc.item_name,
                item_description=doc.item_description,
                price=doc.price,
                seller_industry=doc.seller_industry,
                gold_category=target,
            )
        )
    return out


def split_industry(
    docs: Sequence[Document], scheme: CategoryScheme
) -> tuple[list[Document], list[Document]]:
    """Partition documents by whether their seller industry is a goods category."""
    goods_docs, services_docs = [], []
    for doc in docs:
        if doc.seller_industry is None:
            raise ValueError(f"document {doc.id!r} has no seller_industry")
        if doc.seller_industry not in scheme:
            raise ValueError(f"unknown industry {doc.seller_industry!r} on {doc.id!r}")
        if doc.seller_industry in scheme.goods:
            goods_docs.append(doc)
        else:
            services_docs.append(doc)
    return goods_docs, services_docs


@dataclass(frozen=True)
class TransferredEmbedding:
    vector: np.ndarray
    source_tag: str


@dataclass
class EmbeddingNetwork:
    """A trained network plus everything needed to embed new documents."""

    spec: nn.NetworkSpec
    params: nn.NetworkParams
    vocab: Vocabulary
    source_tag: str
    label_space: tuple[str, ...]
    max_len: int = DEFAULT_MAX_LEN
    history: list[float] = field(default_factory=list)

    @property
    def embedding_dim(self) -> int:
        layer = self.spec.layers[self.spec.embedding_layer]
        return layer.units

    def embed_matrix(self, docs: Sequence[Document]) -> np.ndarray:
        """Infer-mode bottleneck activations, one row per document."""
        tokens = [preprocess_document(d) for d in docs]
        indices = encode_batch(tokens, self.vocab, self.max_len)
        rows = []
        for start in range(0, indices.shape[0], 512):
            chunk = indices[start : start + 512]
            lengths = (chunk != 0).sum(axis=1)
            t_eff = max(int(lengths.max(initial=0)), 1)
            acts = nn.forward(self.spec, self.params, chunk[:, :t_eff], upto=self.spec.embedding_layer)
            rows.append(acts.embedding)
        if not rows:
            return np.zeros((0, self.embedding_dim))
        return np.concatenate(rows, axis=0)


@dataclass(frozen=True)
class EmbedderConfig:
    """Architecture and training knobs shared by the embedding networks."""

    max_len: int = DEFAULT_MAX_LEN
    lstm1: int = 200
    lstm2: int = 100
    code_dim: int = 30
    spatial_dropout: float = 0.3
    dropout: float = 0.2
    epochs: int = 2
    batch_size: int = 128
    lr: float = 0.001
    vocab_size: int = 20000


def _network_spec(cfg: EmbedderConfig, vocab: Vocabulary, table: EmbeddingTable, n_out: int | None):
    common = dict(
        max_len=cfg.max_len,
        embed_dim=table.dim,
        lstm1=cfg.lstm1,
        lstm2=cfg.lstm2,
        code_dim=cfg.code_dim,
        spatial_dropout=cfg.spatial_dropout,
        dropout=cfg.dropout,
    )
    if n_out is None:
        return nn.sequence_autoencoder(vocab.size, **common)
    return nn.sequence_classifier(vocab.size, n_out, **common)


def train_embedding_network(
    docs: Sequence[Document],
    label_extractor: str,
    *,
    source_tag: str,
    vocab: Vocabulary,
    table: EmbeddingTable,
    scheme: CategoryScheme | None = None,
    cfg: EmbedderConfig = EmbedderConfig(),
    seed: int = 0,
) -> "EmbeddingNetwork":
    """Train one embedding network on its related corpus.

    label_extractor: "industry" (seller_industry as noisy label),
    "related_category" (gold_category) or "self" (input reconstruction). For
    the supervised extractors the softmax width is the number of distinct
    labels in the corpus; every label must belong to the category scheme.
    """
    if not docs:
        raise ValueError("training corpus is empty")
    if label_extractor == LABEL_SELF:
        labels = None
        label_space: tuple[str, ...] = ()
        spec = _network_spec(cfg, vocab, table, None)
        loss_kind = nn.SEQ_RECONSTRUCTION_CE
    else:
        if label_extractor == LABEL_INDUSTRY:
            raw = [d.seller_industry for d in docs]
        elif label_extractor == LABEL_RELATED_CATEGORY:
            raw = [d.gold_category for d in docs]
        else:
            raise ValueError(f"unknown label extractor {label_extractor!r}")
        if any(lbl is None for lbl in raw):
            raise ValueError("a document is missing the label this extractor needs")
        if scheme is not None:
            bad = sorted({lbl for lbl in raw if lbl not in scheme})
            if bad:
                raise ValueError(f"labels outside the category scheme: {bad}")
        label_space = tuple(sorted(set(raw)))
        label_index = {lbl: i for i, lbl in enumerate(label_space)}
        labels = np.array([label_index[lbl] for lbl in raw])
        spec = _network_spec(cfg, vocab, table, len(label_space))
        loss_kind = nn.CLASS_CE

    tokens = [preprocess_document(d) for d in docs]
    indices = encode_batch(tokens, vocab, cfg.max_len)
    params = nn.init_params(spec, seed, table=table, vocab=vocab)
    train_cfg = nn.TrainConfig(epochs=cfg.epochs, batch_size=cfg.batch_size, seed=seed, lr=cfg.lr)
    params, history = nn.train(spec, params, indices, labels, train_cfg, loss_kind)
    return EmbeddingNetwork(
        spec=spec,
        params=params,
        vocab=vocab,
        source_tag=source_tag,
        label_space=label_space,
        max_len=cfg.max_len,
        history=history,
    )


def extract_embedding(net: EmbeddingNetwork, doc: Document) -> TransferredEmbedding:
    """Infer-mode bottleneck activation for one document."""
    vector = net.embed_matrix([doc])[0]
    return TransferredEmbedding(vector=vector, source_tag=net.source_tag)


def build_embedding_networks(
    target_docs: Sequence[Document],
    related_docs: Sequence[Document],
    scheme: CategoryScheme,
    *,
    vocab: Vocabulary,
    table: EmbeddingTable,
    cfg: EmbedderConfig = EmbedderConfig(),
    seed: int = 0,
    exclude_ids: frozenset[str] | set[str] = frozenset(),
    autoencoder_epochs: int | None = None,
) -> dict[str, EmbeddingNetwork]:
    """Train the four embedding networks; degenerate subsets are skipped.

    exclude_ids (the labeled sample) are removed from every training corpus
    so no embedding network ever sees an evaluation document.
    """
    target = [d for d in target_docs if d.id not in exclude_ids]
    related = [d for d in related_docs if d.id not in exclude_ids]
    goods_docs, services_docs = split_industry(target, scheme)
    nets: dict[str, EmbeddingNetwork] = {}
    supervised = [
        (SOURCE_INDUSTRY_GOODS, goods_docs, LABEL_INDUSTRY),
        (SOURCE_INDUSTRY_SERVICES, services_docs, LABEL_INDUSTRY),
        (SOURCE_RELATED, related, LABEL_RELATED_CATEGORY),
    ]
    for tag, docs, extractor in supervised:
        labels = {
            d.seller_industry if extractor == LABEL_INDUSTRY else d.gold_category for d in docs
        }
        if len(labels) < 2:
            warnings.warn(f"skipping {tag}: fewer than 2 distinct labels")
            continue
        nets[tag] = train_embedding_network(
            docs,
            extractor,
            source_tag=tag,
            vocab=vocab,
            table=table,
            scheme=scheme,
            cfg=cfg,
            seed=stage_seed(seed, tag),
        )
    ae_cfg = cfg if autoencoder_epochs is None else replace(cfg, epochs=autoencoder_epochs)
    nets[SOURCE_AUTOENCODER] = train_embedding_network(
        target,
        LABEL_SELF,
        source_tag=SOURCE_AUTOENCODER,
        vocab=vocab,
        table=table,
        cfg=ae_cfg,
        seed=stage_seed(seed, SOURCE_AUTOENCODER),
    )
    return nets
