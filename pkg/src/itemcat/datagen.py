"""Synthetic corpus generator for desk-scale benchmark runs.

Documents are keyword mixtures: each category owns a keyword pool that
partially overlaps its neighbours' pools, every document mixes pool draws
with shared noise tokens, and a noisy seller-industry label agrees with the
true category at a configurable rate. This keeps ground truth, the
Bayes-optimal accuracy and every label-noise rate exactly controllable, which
is what the benchmark's sanity checks need. Annotator behaviour (accuracy,
"no" sensitivity, planted lazy annotators) is simulated on top of the sample
documents.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .adjudication import AnnotatorResponse, save_responses, save_review_file
from .embedders import CategoryScheme, save_category_scheme
from .features import EmbeddingTable, save_word_vectors
from .text import Document, save_documents
from .util import stage_seed

# plausible e-commerce categories; goods and services interleaved so that a
# prefix of any length mixes the two kinds
_GOODS_NAMES = (
    "fashion", "jewelry", "electronics", "arts-n-craft", "baby-products",
    "sports-equip", "houseware", "health", "food-n-drink", "auto-parts",
    "books", "cosmetics", "toys", "cellphones", "furniture", "computers",
    "collectibles", "garden", "pet-supplies", "shoes", "tools", "video-games",
    "watches", "cameras", "music", "movies", "instruments", "office-supplies",
    "luggage", "stationery", "gift-cards", "tickets", "wellness",
)
_SERVICE_NAMES = (
    "services-other", "media", "website-services", "photography",
    "accounting", "consulting", "repair-services",
)


@dataclass(frozen=True)
class AnnotatorModel:
    """Behavioural parameters of the simulated annotator pool."""

    n_annotators: int = 25
    accuracy: float = 0.75  # P(honest annotator names the true category)
    no_sensitivity: float = 0.90  # P(honest annotator answers "no" on noise-only text)
    lazy_count: int = 2
    task_size: int = 10


@dataclass(frozen=True)
class SynthConfig:
    n_categories: int = 8
    goods_fraction: float = 0.75
    target_corpus_size: int = 20000
    related_corpus_size: int = 5000
    sample_size: int = 1970
    industry_agreement: float = 0.48
    uninformative_fraction: float = 0.15
    target_length_mean: float = 5.0
    related_length_mean: float = 10.0
    long_tail_rate: float = 0.03  # share of docs pushed past max_len tokens
    target_keyword_rate: float = 0.5
    related_keyword_rate: float = 0.7
    keywords_per_category: int = 250
    keyword_overlap: float = 0.15  # pool fraction shared with each neighbour
    noise_vocab: int = 400
    popularity_ratio: float = 0.8  # geometric decay of category frequencies
    wordvec_dim: int = 64
    wordvec_mix: float = 0.5  # pull of a keyword vector towards its category centroid
    annotators: AnnotatorModel = AnnotatorModel()
    seed: int = 0

    def __post_init__(self):
        if not 2 <= self.n_categories <= len(_GOODS_NAMES) + len(_SERVICE_NAMES):
            raise ValueError("n_categories out of range")
        for name in (
            "goods_fraction", "industry_agreement", "uninformative_fraction",
            "long_tail_rate", "target_keyword_rate", "related_keyword_rate",
            "keyword_overlap", "wordvec_mix",
        ):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be a probability, got {value}")
        for name in ("target_corpus_size", "related_corpus_size", "sample_size",
                     "keywords_per_category", "noise_vocab", "wordvec_dim"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if not 0.0 < self.popularity_ratio <= 1.0:
            raise ValueError("popularity_ratio must be in (0, 1]")


@dataclass
class KeywordPools:
    """Per-category pools (exclusive + shares with ring neighbours) and noise."""

    by_category: dict[str, list[str]]
    shared_with: dict[str, dict[str, int]]  # category -> neighbour -> shared token count
    noise: list[str]


@dataclass
class SyntheticBundle:
    config: SynthConfig
    scheme: CategoryScheme
    target_docs: list[Document]
    related_docs: list[Document]
    sample_docs: list[Document]
    responses: list[AnnotatorResponse]
    replacements: list[AnnotatorResponse]
    expert_labels: dict[str, str]
    word_table: EmbeddingTable
    truth: dict[str, str]  # every generated doc id -> true category
    uninformative_ids: set[str]
    planted_lazy: set[str]
    pools: KeywordPools = field(repr=False, default=None)

    def industry_agreement(self) -> float:
        """Measured share of target docs whose industry equals the true category."""
        hits = sum(1 for d in self.target_docs if d.seller_industry == self.truth[d.id])
        return hits / len(self.target_docs)


def build_scheme(n_categories: int, goods_fraction: float) -> CategoryScheme:
    n_goods = min(round(n_categories * goods_fraction), len(_GOODS_NAMES))
    n_services = n_categories - n_goods
    if n_services > len(_SERVICE_NAMES):
        raise ValueError("not enough service category names")
    goods = list(_GOODS_NAMES[:n_goods])
    services = list(_SERVICE_NAMES[:n_services])
    # interleave a service after every few goods so popularity mixes the kinds
    ordered: list[str] = []
    gi = si = 0
    step = max(1, n_goods // max(n_services, 1))
    while gi < n_goods or si < n_services:
        take = min(step, n_goods - gi)
        ordered.extend(goods[gi : gi + take])
        gi += take
        if si < n_services:
            ordered.append(services[si])
            si += 1
    return CategoryScheme(tuple(ordered), frozenset(goods))


def category_weights(scheme: CategoryScheme, ratio: float) -> dict[str, float]:
    """Geometrically decaying popularity over the scheme order."""
    raw = np.array([ratio**i for i in range(len(scheme.categories))])
    raw /= raw.sum()
    return dict(zip(scheme.categories, raw))


def build_pools(scheme: CategoryScheme, cfg: SynthConfig) -> KeywordPools:
    cats = scheme.categories
    n = len(cats)
    n_share = round(cfg.keywords_per_category * cfg.keyword_overlap) if n >= 2 else 0
    n_excl = cfg.keywords_per_category - 2 * n_share
    if n_excl < 1:
        raise ValueError("keyword_overlap leaves no exclusive keywords")
    slug = {c: "".join(ch for ch in c if ch.isalnum()) for c in cats}
    pools: dict[str, list[str]] = {c: [] for c in cats}
    shared_with: dict[str, dict[str, int]] = {c: defaultdict(int) for c in cats}
    for i, cat in enumerate(cats):
        pools[cat].extend(f"{slug[cat]}{j:03d}" for j in range(n_excl))
    if n >= 2:
        for i, cat in enumerate(cats):
            nxt = cats[(i + 1) % n]
            shared = [f"share{i}x{j:03d}" for j in range(n_share)]
            pools[cat].extend(shared)
            pools[nxt].extend(shared)
            shared_with[cat][nxt] += n_share
            shared_with[nxt][cat] += n_share
    noise = [f"misc{j:03d}" for j in range(cfg.noise_vocab)]
    return KeywordPools(by_category=pools, shared_with={c: dict(d) for c, d in shared_with.items()}, noise=noise)


def build_word_table(pools: KeywordPools, scheme: CategoryScheme, cfg: SynthConfig, rng) -> EmbeddingTable:
    """Random unit-scale vectors; keyword vectors lean towards a per-category
    centroid so averaged-vector baselines carry real signal."""
    dim = cfg.wordvec_dim
    centroids = {c: rng.normal(0, 1, dim) / math.sqrt(dim) for c in scheme.categories}
    vectors: dict[str, np.ndarray] = {}
    mix = cfg.wordvec_mix
    owners: dict[str, list[str]] = defaultdict(list)
    for cat in scheme.categories:
        for token in pools.by_category[cat]:
            owners[token].append(cat)
    for token in sorted(owners):
        centroid = np.mean([centroids[c] for c in owners[token]], axis=0)
        noise_part = rng.normal(0, 1, dim) / math.sqrt(dim)
        vectors[token] = (1.0 - mix) * noise_part + mix * centroid
    for token in pools.noise:
        vectors[token] = rng.normal(0, 1, dim) / math.sqrt(dim)
    return EmbeddingTable(vectors=vectors, dim=dim)


def _draw_length(rng, mean: float, long_tail_rate: float, max_len: int = 15) -> int:
    if long_tail_rate > 0 and rng.random() < long_tail_rate:
        return max_len + 1 + rng.poisson(4.0)
    return 1 + rng.poisson(max(mean - 1.0, 0.0))


def _length_pmf(mean: float, long_tail_rate: float, max_len: int = 15, tol: float = 1e-12):
    """Exact pmf of _draw_length, truncated once the tail mass falls below tol."""
    pmf: dict[int, float] = defaultdict(float)
    lam = max(mean - 1.0, 0.0)
    base = math.exp(-lam)
    k = 0
    cum = 0.0
    while cum < 1.0 - tol and k < 400:
        pmf[1 + k] += (1.0 - long_tail_rate) * base
        cum += base
        k += 1
        base *= lam / k
    if long_tail_rate > 0:
        lam2 = 4.0
        base = math.exp(-lam2)
        k = 0
        cum = 0.0
        while cum < 1.0 - tol and k < 400:
            pmf[max_len + 1 + k] += long_tail_rate * base
            cum += base
            k += 1
            base *= lam2 / k
    return dict(pmf)


def _make_text(rng, tokens: list[str]) -> tuple[str, str, int]:
    """Split tokens into (name, description); description present ~24% of docs."""
    if len(tokens) >= 2 and rng.random() < 0.24:
        cut = int(rng.integers(1, len(tokens)))
        return " ".join(tokens[:cut]), " ".join(tokens[cut:]), len(tokens)
    return " ".join(tokens), "", len(tokens)


def _draw_doc_tokens(rng, category, pools, keyword_rate, length_mean, long_tail_rate, uninformative):
    length = _draw_length(rng, length_mean, long_tail_rate)
    if uninformative:
        return [pools.noise[i] for i in rng.integers(0, len(pools.noise), length)]
    n_keywords = 1 + rng.binomial(length - 1, keyword_rate) if length > 1 else 1
    pool = pools.by_category[category]
    tokens = [pool[i] for i in rng.integers(0, len(pool), n_keywords)]
    tokens += [pools.noise[i] for i in rng.integers(0, len(pools.noise), length - n_keywords)]
    rng.shuffle(tokens)
    return tokens


def _draw_industry(rng, category, categories, agreement):
    if rng.random() < agreement:
        return category
    others = [c for c in categories if c != category]
    return others[int(rng.integers(0, len(others)))]


def generate(cfg: SynthConfig) -> SyntheticBundle:
    """Build the full bundle: corpora, sample, annotations, vectors, scheme.

    Sample documents are generated alongside the target corpus but never added
    to it, which is the leakage guard every downstream training step relies on.
    """
    scheme = build_scheme(cfg.n_categories, cfg.goods_fraction)
    weights = category_weights(scheme, cfg.popularity_ratio)
    cats = scheme.categories
    probs = np.array([weights[c] for c in cats])
    pools = build_pools(scheme, cfg)
    table = build_word_table(pools, scheme, cfg, np.random.default_rng(stage_seed(cfg.seed, "wordvecs")))

    truth: dict[str, str] = {}
    uninformative_ids: set[str] = set()

    def make_docs(rng, prefix, count, *, keyword_rate, length_mean, categories, category_probs,
                  with_industry, with_gold, uninformative_fraction):
        docs = []
        for i in range(count):
            cat = categories[int(rng.choice(len(categories), p=category_probs))]
            uninformative = rng.random() < uninformative_fraction
            tokens = _draw_doc_tokens(
                rng, cat, pools, keyword_rate, length_mean, cfg.long_tail_rate, uninformative
            )
            name, desc, _ = _make_text(rng, tokens)
            doc_id = f"{prefix}{i:06d}"
            docs.append(
                Document(
                    id=doc_id,
                    item_name=name,
                    item_description=desc,
                    price=round(float(rng.uniform(1, 200)), 2),
                    seller_industry=_draw_industry(rng, cat, cats, cfg.industry_agreement)
                    if with_industry
                    else None,
                    gold_category=cat if with_gold else None,
                )
            )
            truth[doc_id] = cat
            if uninformative:
                uninformative_ids.add(doc_id)
        return docs

    target_docs = make_docs(
        np.random.default_rng(stage_seed(cfg.seed, "target")),
        "t", cfg.target_corpus_size,
        keyword_rate=cfg.target_keyword_rate, length_mean=cfg.target_length_mean,
        categories=cats, category_probs=probs,
        with_industry=True, with_gold=False,
        uninformative_fraction=cfg.uninformative_fraction,
    )
    sample_docs = make_docs(
        np.random.default_rng(stage_seed(cfg.seed, "sample")),
        "s", cfg.sample_size,
        keyword_rate=cfg.target_keyword_rate, length_mean=cfg.target_length_mean,
        categories=cats, category_probs=probs,
        with_industry=True, with_gold=False,
        uninformative_fraction=cfg.uninformative_fraction,
    )
    goods_cats = [c for c in cats if c in scheme.goods]
    goods_probs = np.array([weights[c] for c in goods_cats])
    goods_probs /= goods_probs.sum()
    related_docs = make_docs(
        np.random.default_rng(stage_seed(cfg.seed, "related")),
        "r", cfg.related_corpus_size,
        keyword_rate=cfg.related_keyword_rate, length_mean=cfg.related_length_mean,
        categories=goods_cats, category_probs=goods_probs,
        with_industry=False, with_gold=True,
        uninformative_fraction=0.0,
    )

    responses, replacements, planted = generate_annotations(
        sample_docs, truth, uninformative_ids, scheme, cfg.annotators,
        seed=stage_seed(cfg.seed, "annotations"),
    )
    expert_labels = {doc.id: truth[doc.id] for doc in sample_docs}

    return SyntheticBundle(
        config=cfg,
        scheme=scheme,
        target_docs=target_docs,
        related_docs=related_docs,
        sample_docs=sample_docs,
        responses=responses,
        replacements=replacements,
        expert_labels=expert_labels,
        word_table=table,
        truth=truth,
        uninformative_ids=uninformative_ids,
        planted_lazy=planted,
        pools=pools,
    )


def generate_annotations(
    sample_docs, truth, uninformative_ids, scheme: CategoryScheme,
    model: AnnotatorModel, seed: int,
):
    """Simulate five annotators per instance, tasked in blocks.

    Lazy annotators pick a uniformly random category; honest annotators answer
    "no" on noise-only documents with the configured sensitivity and otherwise
    name the true category with the configured accuracy. Replacement responses
    (fresh honest annotators re-answering every task a planted lazy annotator
    touched) are returned separately so the adjudication pipeline can exercise
    its removal/replacement path.
    """
    rng = np.random.default_rng(seed)
    cats = scheme.categories
    annotator_ids = [f"ann{i:03d}" for i in range(model.n_annotators)]
    if model.lazy_count > model.n_annotators:
        raise ValueError("more lazy annotators than annotators")
    lazy = set(rng.choice(annotator_ids, size=model.lazy_count, replace=False).tolist())

    def honest_answer(doc):
        if doc.id in uninformative_ids:
            if rng.random() < model.no_sensitivity:
                return None  # q1 = no
            return cats[int(rng.integers(0, len(cats)))]
        if rng.random() < model.accuracy:
            return truth[doc.id]
        others = [c for c in cats if c != truth[doc.id]]
        return others[int(rng.integers(0, len(others)))]

    def lazy_answer(_doc):
        return cats[int(rng.integers(0, len(cats)))]

    def response(annotator, doc, answer):
        if answer is None:
            return AnnotatorResponse(annotator, doc.id, False, None, False, "cannot tell")
        return AnnotatorResponse(annotator, doc.id, True, answer, True, "")

    responses: list[AnnotatorResponse] = []
    replacements: list[AnnotatorResponse] = []
    n_rep = 0
    for start in range(0, len(sample_docs), model.task_size):
        task = sample_docs[start : start + model.task_size]
        workers = rng.choice(annotator_ids, size=5, replace=False).tolist()
        for worker in workers:
            for doc in task:
                answer = lazy_answer(doc) if worker in lazy else honest_answer(doc)
                responses.append(response(worker, doc, answer))
        for worker in workers:
            if worker in lazy:
                fresh = f"rep{n_rep:03d}"
                n_rep += 1
                for doc in task:
                    replacements.append(response(fresh, doc, honest_answer(doc)))
    return responses, replacements, lazy


def bayes_accuracy(cfg: SynthConfig) -> float:
    """Exact Bayes-optimal accuracy over informative documents.

    A document can only be misclassified when every keyword it contains is
    shared with one specific neighbouring category whose prior beats the true
    one; everything else (exclusive keywords, mixed neighbours, noise tokens)
    identifies the true category or cancels out of the likelihood ratio.
    """
    scheme = build_scheme(cfg.n_categories, cfg.goods_fraction)
    weights = category_weights(scheme, cfg.popularity_ratio)
    pools = build_pools(scheme, cfg)
    pmf = _length_pmf(cfg.target_length_mean, cfg.long_tail_rate)
    p_kw = cfg.target_keyword_rate
    pool_size = cfg.keywords_per_category
    acc = 0.0
    for cat in scheme.categories:
        err = 0.0
        for neighbour, shared in pools.shared_with.get(cat, {}).items():
            beats = weights[neighbour] > weights[cat] or (
                weights[neighbour] == weights[cat] and neighbour < cat
            )
            if not beats:
                continue
            s = shared / pool_size
            # E[s^k], k = 1 + Binomial(L-1, p_kw)
            e = sum(p * (1.0 - p_kw + p_kw * s) ** (length - 1) for length, p in pmf.items())
            err += s * e
        acc += weights[cat] * (1.0 - err)
    return acc


# --- bundle files -------------------------------------------------------------

BUNDLE_FILES = {
    "target": "target_corpus.jsonl",
    "related": "related_corpus.jsonl",
    "sample": "sample_docs.jsonl",
    "responses": "responses.jsonl",
    "replacements": "replacements.jsonl",
    "expert": "expert_labels.txt",
    "vectors": "word_vectors.txt",
    "scheme": "category_scheme.txt",
}


def write_bundle(bundle: SyntheticBundle, out_dir) -> dict[str, Path]:
    """Write every bundle artifact; returns the path of each one."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {key: out / name for key, name in BUNDLE_FILES.items()}
    save_documents(bundle.target_docs, paths["target"])
    save_documents(bundle.related_docs, paths["related"])
    save_documents(bundle.sample_docs, paths["sample"])
    save_responses(bundle.responses, paths["responses"])
    save_responses(bundle.replacements, paths["replacements"])
    save_review_file(bundle.expert_labels, paths["expert"])
    save_word_vectors(bundle.word_table, paths["vectors"])
    save_category_scheme(bundle.scheme, paths["scheme"])
    return paths
