"""Classical baseline features: TF-IDF (unigrams+bigrams) and averaged word vectors."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

DEFAULT_TFIDF_TERMS = 3500
BIGRAM_JOIN = "_"  # tokens are alphanumeric, so "_" can never collide


@dataclass(frozen=True)
class SparseVec:
    """Sparse row vector: sorted column indices with their values."""

    indices: np.ndarray
    values: np.ndarray
    size: int

    def to_dense(self) -> np.ndarray:
        dense = np.zeros(self.size)
        dense[self.indices] = self.values
        return dense


@dataclass(frozen=True)
class TfidfModel:
    columns: dict[str, int]
    idf: np.ndarray  # aligned with column indices
    n_terms: int

    @property
    def n_columns(self) -> int:
        return len(self.columns)


def _terms(tokens: Sequence[str]) -> list[str]:
    terms = list(tokens)
    terms.extend(f"{a}{BIGRAM_JOIN}{b}" for a, b in zip(tokens, tokens[1:]))
    return terms


def fit_tfidf(corpus: Sequence[Sequence[str]], n_terms: int = DEFAULT_TFIDF_TERMS) -> TfidfModel:
    """Select the n_terms terms with highest document frequency (ties lexicographic).

    idf(t) = ln((1+N)/(1+df(t))) + 1 with N the corpus size, so weights stay
    finite and positive even for terms present in every document.
    """
    if n_terms < 1:
        raise ValueError("n_terms must be >= 1")
    if not corpus:
        raise ValueError("corpus must be non-empty")
    df: Counter[str] = Counter()
    for tokens in corpus:
        df.update(set(_terms(tokens)))
    kept = sorted(df.items(), key=lambda kv: (-kv[1], kv[0]))[:n_terms]
    columns = {term: i for i, (term, _) in enumerate(kept)}
    n_docs = len(corpus)
    idf = np.array([np.log((1.0 + n_docs) / (1.0 + count)) + 1.0 for _, count in kept])
    return TfidfModel(columns=columns, idf=idf, n_terms=n_terms)


def tfidf_transform(model: TfidfModel, tokens: Sequence[str]) -> SparseVec:
    """Term counts weighted by idf, then L2-normalized (zero vectors stay zero)."""
    counts: Counter[int] = Counter()
    for term in _terms(tokens):
        col = model.columns.get(term)
        if col is not None:
            counts[col] += 1
    if not counts:
        return SparseVec(np.zeros(0, dtype=np.int64), np.zeros(0), model.n_columns)
    cols = np.array(sorted(counts), dtype=np.int64)
    values = np.array([counts[c] for c in cols], dtype=float) * model.idf[cols]
    norm = np.sqrt(np.sum(values**2))
    if norm > 0:
        values = values / norm
    return SparseVec(cols, values, model.n_columns)


def tfidf_matrix(model: TfidfModel, corpus: Iterable[Sequence[str]]) -> np.ndarray:
    """Dense (n_docs, n_columns) matrix of transformed rows."""
    rows = []
    for tokens in corpus:
        rows.append(tfidf_transform(model, tokens).to_dense())
    if not rows:
        return np.zeros((0, model.n_columns))
    return np.stack(rows)


# --- pretrained word vectors -------------------------------------------------


@dataclass(frozen=True)
class EmbeddingTable:
    """token -> dense vector map; absent tokens read as the zero vector."""

    vectors: dict[str, np.ndarray]
    dim: int

    def get(self, token: str) -> np.ndarray:
        vec = self.vectors.get(token)
        if vec is None:
            return np.zeros(self.dim)
        return vec


def avg_vectors(tokens: Sequence[str], table: EmbeddingTable) -> np.ndarray:
    """Elementwise mean of the vectors of in-table tokens; zeros if none match."""
    if not table.vectors:
        raise ValueError("embedding table is empty")
    hits = [table.vectors[t] for t in tokens if t in table.vectors]
    if not hits:
        return np.zeros(table.dim)
    return np.mean(hits, axis=0)


def avg_vectors_matrix(corpus: Iterable[Sequence[str]], table: EmbeddingTable) -> np.ndarray:
    return np.stack([avg_vectors(tokens, table) for tokens in corpus])


def load_word_vectors(path) -> EmbeddingTable:
    """Plain-text format: one line per token, `token v1 v2 ... v_dim`."""
    vectors: dict[str, np.ndarray] = {}
    dim = None
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            parts = line.rstrip("\n").split(" ")
            if len(parts) < 2:
                raise ValueError(f"{path}:{line_no}: expected `token v1 ... v_dim`")
            token = parts[0]
            vec = np.array([float(v) for v in parts[1:]])
            if dim is None:
                dim = vec.shape[0]
            elif vec.shape[0] != dim:
                raise ValueError(f"{path}:{line_no}: vector length {vec.shape[0]} != {dim}")
            vectors[token] = vec
    if dim is None:
        raise ValueError(f"{path}: no vectors found")
    return EmbeddingTable(vectors=vectors, dim=dim)


def save_word_vectors(table: EmbeddingTable, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for token in sorted(table.vectors):
            values = " ".join(repr(float(v)) for v in table.vectors[token])
            f.write(f"{token} {values}\n")
