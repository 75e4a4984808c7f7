"""Text preprocessing, vocabulary construction and fixed-length index encoding.

Every model in the pipeline consumes text through this module, so the rules
here are deliberately minimal and deterministic: lowercase, strip symbols,
split on whitespace.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

PAD_INDEX = 0
OOV_INDEX = 1
DEFAULT_MAX_LEN = 15

# Anything that is not an ASCII letter or digit acts as a token separator.
# "1/2" therefore becomes two tokens instead of disappearing, which keeps the
# numeric fragments that are common in noisy item names.
_NON_ALNUM = re.compile(r"[^0-9a-z]+")


@dataclass(frozen=True)
class Document:
    """One item record: free-text attributes plus optional labels."""

    id: str
    item_name: str
    item_description: str = ""
    price: float | None = None
    seller_industry: str | None = None
    gold_category: str | None = None


@dataclass(frozen=True)
class Vocabulary:
    """token -> index map with reserved padding (0) and out-of-vocab (1) slots."""

    index: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        for token, idx in self.index.items():
            if idx in (PAD_INDEX, OOV_INDEX):
                raise ValueError(f"token {token!r} collides with a reserved index")

    @property
    def size(self) -> int:
        """Total index space including the two reserved slots."""
        return len(self.index) + 2

    def lookup(self, token: str) -> int:
        return self.index.get(token, OOV_INDEX)

    def tokens_by_index(self) -> list[str]:
        """Index-ordered token list with placeholders for the reserved slots."""
        out = ["<pad>", "<oov>"]
        for token, _ in sorted(self.index.items(), key=lambda kv: kv[1]):
            out.append(token)
        return out


@dataclass(frozen=True)
class IndexSeq:
    """Fixed-length index vector; positions >= real_length hold the pad index."""

    indices: np.ndarray
    real_length: int


def preprocess(name: str, description: str) -> list[str]:
    """Concatenate the two text fields and tokenize.

    Lowercases, replaces every non-alphanumeric character with a space and
    splits on whitespace. Empty input yields an empty token list.
    """
    text = f"{name} {description}".lower()
    return _NON_ALNUM.sub(" ", text).split()


def preprocess_document(doc: Document) -> list[str]:
    return preprocess(doc.item_name, doc.item_description)


def build_vocab(corpus: Iterable[Sequence[str]], max_size: int) -> Vocabulary:
    """Keep the max_size most frequent tokens, ties broken lexicographically."""
    if max_size < 1:
        raise ValueError("max_size must be >= 1")
    counts: Counter[str] = Counter()
    for tokens in corpus:
        counts.update(tokens)
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:max_size]
    return Vocabulary({token: i + 2 for i, (token, _) in enumerate(ranked)})


def encode(tokens: Sequence[str], vocab: Vocabulary, max_len: int = DEFAULT_MAX_LEN) -> IndexSeq:
    """Map the first max_len tokens to indices and right-pad with PAD_INDEX."""
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    real = min(len(tokens), max_len)
    indices = np.full(max_len, PAD_INDEX, dtype=np.int64)
    for pos in range(real):
        indices[pos] = vocab.lookup(tokens[pos])
    return IndexSeq(indices=indices, real_length=real)


def encode_batch(
    token_seqs: Iterable[Sequence[str]], vocab: Vocabulary, max_len: int = DEFAULT_MAX_LEN
) -> np.ndarray:
    """Stack encode() results into one (n_docs, max_len) int matrix."""
    rows = [encode(tokens, vocab, max_len).indices for tokens in token_seqs]
    if not rows:
        return np.zeros((0, max_len), dtype=np.int64)
    return np.stack(rows)


# --- dataset files ---------------------------------------------------------
#
# One JSON object per line with fields id, item_name, item_description,
# price, seller_industry, gold_category; all but id may be missing.

_DOC_FIELDS = ("id", "item_name", "item_description", "price", "seller_industry", "gold_category")


def load_documents(path) -> list[Document]:
    docs = []
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{line_no}: invalid record: {exc}") from exc
            if "id" not in record:
                raise ValueError(f"{path}:{line_no}: record has no id")
            unknown = set(record) - set(_DOC_FIELDS)
            if unknown:
                raise ValueError(f"{path}:{line_no}: unknown fields {sorted(unknown)}")
            docs.append(
                Document(
                    id=str(record["id"]),
                    item_name=record.get("item_name", ""),
                    item_description=record.get("item_description", ""),
                    price=record.get("price"),
                    seller_industry=record.get("seller_industry"),
                    gold_category=record.get("gold_category"),
                )
            )
    seen = set()
    for doc in docs:
        if doc.id in seen:
            raise ValueError(f"duplicate document id {doc.id!r} in {path}")
        seen.add(doc.id)
    return docs


def save_documents(docs: Iterable[Document], path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for doc in docs:
            record: dict = {"id": doc.id, "item_name": doc.item_name}
            if doc.item_description:
                record["item_description"] = doc.item_description
            if doc.price is not None:
                record["price"] = doc.price
            if doc.seller_industry is not None:
                record["seller_industry"] = doc.seller_industry
            if doc.gold_category is not None:
                record["gold_category"] = doc.gold_category
            f.write(json.dumps(record, sort_keys=True) + "\n")
