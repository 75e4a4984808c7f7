"""Crowdsourced labeling protocol: task category lists, agreement, lazy-annotator
detection and three-way adjudication of five-annotator batches."""

from __future__ import annotations

import json
import warnings
from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .features import fit_tfidf, tfidf_matrix
from .linear import LogisticRegressionGD
from .text import Document, preprocess_document

UNINFORMATIVE = "uninformative"
CATEGORY = "category"
NEEDS_EXPERT = "needs_expert"

RESPONSES_PER_INSTANCE = 5
LAZY_THRESHOLD = 0.20

# q1 = "no" enters the agreement count as its own pseudo-answer; it can never
# equal a real category id because category ids are caller-validated.
_NO_ANSWER = "\x00no"


@dataclass(frozen=True)
class AnnotatorResponse:
    annotator_id: str
    instance_id: str
    q1_understood: bool
    q2_category: str | None = None
    q3_adequate: bool = True
    explanation: str = ""

    def __post_init__(self):
        if self.q1_understood and self.q2_category is None:
            raise ValueError("q2_category required when the item was understood")
        if not self.q1_understood and self.q2_category is not None:
            raise ValueError("q2_category must be absent when q1 is no")

    @property
    def answer(self) -> str:
        return self.q2_category if self.q1_understood else _NO_ANSWER


@dataclass(frozen=True)
class AdjudicatedLabel:
    instance_id: str
    kind: str  # uninformative | category | needs_expert
    category: str | None
    agreement_level: int


@dataclass(frozen=True)
class TaskCategoryLists:
    """The three-part category presentation of an annotation task."""

    popular: tuple[str, ...]
    guessed: tuple[str, ...]
    other: tuple[str, ...]


def build_category_lists(
    popularity: Mapping[str, int],
    ranked_guesses: Sequence[str],
    *,
    n_popular: int = 10,
    n_guessed: int = 5,
) -> TaskCategoryLists:
    """Split the category set for one task.

    popular: the n_popular most frequent categories (ties lexicographic),
    shown alphabetized. guessed: the baseline model's best n_guessed
    categories that are not already popular, in model-rank order. other: the
    rest, alphabetized.
    """
    categories = set(popularity)
    missing = [c for c in ranked_guesses if c not in categories]
    if missing:
        raise ValueError(f"guesses outside the category set: {missing}")
    by_count = sorted(popularity.items(), key=lambda kv: (-kv[1], kv[0]))
    popular = sorted(cat for cat, _ in by_count[:n_popular])
    popular_set = set(popular)
    guessed = [c for c in ranked_guesses if c not in popular_set][:n_guessed]
    other = sorted(categories - popular_set - set(guessed))
    return TaskCategoryLists(tuple(popular), tuple(guessed), tuple(other))


class IndustryGuesser:
    """Baseline category guesser: logistic regression on TF-IDF features,
    trained with the noisy seller-industry attribute as the label."""

    def __init__(self, tfidf, model: LogisticRegressionGD, classes: tuple[str, ...]):
        self.tfidf = tfidf
        self.model = model
        self.classes = classes

    @classmethod
    def fit(cls, docs: Sequence[Document], *, n_terms: int = 3500, reg: float = 1.0) -> "IndustryGuesser":
        labeled = [d for d in docs if d.seller_industry is not None]
        if not labeled:
            raise ValueError("no documents carry a seller_industry label")
        classes = tuple(sorted({d.seller_industry for d in labeled}))
        class_index = {c: i for i, c in enumerate(classes)}
        corpus = [preprocess_document(d) for d in labeled]
        tfidf = fit_tfidf(corpus, n_terms=n_terms)
        x = tfidf_matrix(tfidf, corpus)
        y = np.array([class_index[d.seller_industry] for d in labeled])
        model = LogisticRegressionGD(reg=reg, tol=1e-6, max_iter=1000).fit(x, y, len(classes))
        return cls(tfidf, model, classes)

    def rank_categories(self, doc: Document) -> list[str]:
        """Categories ordered from most to least probable for this document."""
        x = tfidf_matrix(self.tfidf, [preprocess_document(doc)])
        probs = self.model.predict_proba(x)[0]
        order = sorted(range(len(self.classes)), key=lambda i: (-probs[i], self.classes[i]))
        return [self.classes[i] for i in order]


def task_category_lists(
    doc: Document,
    popularity: Mapping[str, int],
    guesser: IndustryGuesser,
    *,
    n_popular: int = 10,
    n_guessed: int = 5,
) -> TaskCategoryLists:
    """build_category_lists driven by a guesser model ranking the document."""
    return build_category_lists(
        popularity, guesser.rank_categories(doc), n_popular=n_popular, n_guessed=n_guessed
    )


def collect_batches(responses: Iterable[AnnotatorResponse]) -> dict[str, list[AnnotatorResponse]]:
    """Group responses by instance and enforce the 5-distinct-annotators rule."""
    batches: dict[str, list[AnnotatorResponse]] = defaultdict(list)
    for resp in responses:
        batches[resp.instance_id].append(resp)
    for instance_id, batch in batches.items():
        _validate_batch(instance_id, batch)
    return dict(batches)


def _validate_batch(instance_id: str, batch: Sequence[AnnotatorResponse]):
    if len(batch) != RESPONSES_PER_INSTANCE:
        raise ValueError(
            f"instance {instance_id!r} has {len(batch)} responses, needs {RESPONSES_PER_INSTANCE}"
        )
    annotators = {r.annotator_id for r in batch}
    if len(annotators) != RESPONSES_PER_INSTANCE:
        raise ValueError(f"instance {instance_id!r} has duplicate annotators")


def agreement_level(responses: Sequence[AnnotatorResponse]) -> int:
    """Maximum number of annotators giving the same answer ("no" counts as one)."""
    if len(responses) != RESPONSES_PER_INSTANCE:
        raise ValueError(f"need exactly {RESPONSES_PER_INSTANCE} responses")
    counts = Counter(r.answer for r in responses)
    return max(counts.values())


def detect_lazy(
    batches: Mapping[str, Sequence[AnnotatorResponse]], threshold: float = LAZY_THRESHOLD
) -> set[str]:
    """Find annotators who rarely agree with the consensus.

    Only instances with agreement level 3-5 count. An annotator who appears in
    at least one such instance is lazy when their answer matches the
    most-agreed answer in strictly less than `threshold` of those instances.
    A tie for the most-agreed answer voids the instance for everyone.
    """
    participated: Counter[str] = Counter()
    matched: Counter[str] = Counter()
    for batch in batches.values():
        counts = Counter(r.answer for r in batch)
        top_count = max(counts.values())
        if top_count < 3:
            continue
        top_answers = [a for a, c in counts.items() if c == top_count]
        if len(top_answers) != 1:
            continue
        consensus = top_answers[0]
        for resp in batch:
            participated[resp.annotator_id] += 1
            if resp.answer == consensus:
                matched[resp.annotator_id] += 1
    return {
        annotator
        for annotator, n in participated.items()
        if matched[annotator] / n < threshold
    }


def adjudicate(responses: Sequence[AnnotatorResponse]) -> AdjudicatedLabel:
    """Three-way verdict for one instance.

    3+ "no" answers win over everything (q2 is absent for those annotators, so
    the two majority rules can never be satisfied by the same people); then
    3+ agreement on a category assigns it; anything else goes to an expert.
    """
    if len(responses) != RESPONSES_PER_INSTANCE:
        raise ValueError(f"need exactly {RESPONSES_PER_INSTANCE} responses")
    instance_id = responses[0].instance_id
    if any(r.instance_id != instance_id for r in responses):
        raise ValueError("responses span multiple instances")
    level = agreement_level(responses)
    n_no = sum(1 for r in responses if not r.q1_understood)
    if n_no >= 3:
        return AdjudicatedLabel(instance_id, UNINFORMATIVE, None, level)
    category_counts = Counter(r.q2_category for r in responses if r.q1_understood)
    top_category, top_count = category_counts.most_common(1)[0]
    if top_count >= 3:
        return AdjudicatedLabel(instance_id, CATEGORY, top_category, level)
    return AdjudicatedLabel(instance_id, NEEDS_EXPERT, None, level)


def apply_replacements(
    batches: Mapping[str, Sequence[AnnotatorResponse]],
    lazy_ids: set[str],
    replacements: Iterable[AnnotatorResponse],
) -> dict[str, list[AnnotatorResponse]]:
    """Drop every response of the lazy annotators and fill the gaps.

    Replacements are keyed by instance; each instance must end up with exactly
    five responses from five distinct annotators again.
    """
    pool: dict[str, list[AnnotatorResponse]] = defaultdict(list)
    for resp in replacements:
        if resp.annotator_id in lazy_ids:
            raise ValueError(f"replacement from removed annotator {resp.annotator_id!r}")
        pool[resp.instance_id].append(resp)
    result: dict[str, list[AnnotatorResponse]] = {}
    for instance_id, batch in batches.items():
        kept = [r for r in batch if r.annotator_id not in lazy_ids]
        needed = RESPONSES_PER_INSTANCE - len(kept)
        fills = pool.get(instance_id, [])
        if len(fills) < needed:
            raise ValueError(
                f"instance {instance_id!r} needs {needed} replacement responses, "
                f"got {len(fills)}"
            )
        kept.extend(fills[:needed])
        _validate_batch(instance_id, kept)
        result[instance_id] = kept
    return result


def adjudicate_all(
    batches: Mapping[str, Sequence[AnnotatorResponse]],
    expert_labels: Mapping[str, str] | None = None,
) -> tuple[dict[str, str], dict[str, int]]:
    """Adjudicate every instance and resolve expert cases from a review map.

    Returns (instance_id -> final category, verdict counts). Uninformative
    instances and unresolved expert cases are excluded from the labels.
    """
    labels: dict[str, str] = {}
    counts = {UNINFORMATIVE: 0, CATEGORY: 0, NEEDS_EXPERT: 0}
    unresolved = 0
    for instance_id in sorted(batches):
        verdict = adjudicate(batches[instance_id])
        counts[verdict.kind] += 1
        if verdict.kind == CATEGORY:
            labels[instance_id] = verdict.category
        elif verdict.kind == NEEDS_EXPERT:
            if expert_labels is not None and instance_id in expert_labels:
                labels[instance_id] = expert_labels[instance_id]
            else:
                unresolved += 1
    if unresolved:
        warnings.warn(f"{unresolved} instances need expert review and were excluded")
    return labels, counts


# --- files ------------------------------------------------------------------
#
# Responses: one JSON object per line with fields annotator_id, instance_id,
# q1, q2, q3, explanation (q1/q3 are "yes"/"no"; q2 absent when q1 is "no").
# Review file: `instance_id category` lines.


def _yes_no(value: bool) -> str:
    return "yes" if value else "no"


def save_responses(responses: Iterable[AnnotatorResponse], path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for r in responses:
            record = {
                "annotator_id": r.annotator_id,
                "instance_id": r.instance_id,
                "q1": _yes_no(r.q1_understood),
                "q3": _yes_no(r.q3_adequate),
                "explanation": r.explanation,
            }
            if r.q2_category is not None:
                record["q2"] = r.q2_category
            f.write(json.dumps(record, sort_keys=True) + "\n")


def load_responses(path) -> list[AnnotatorResponse]:
    responses = []
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            try:
                responses.append(
                    AnnotatorResponse(
                        annotator_id=str(record["annotator_id"]),
                        instance_id=str(record["instance_id"]),
                        q1_understood=record["q1"] == "yes",
                        q2_category=record.get("q2"),
                        q3_adequate=record.get("q3", "yes") == "yes",
                        explanation=record.get("explanation", ""),
                    )
                )
            except (KeyError, ValueError) as exc:
                raise ValueError(f"{path}:{line_no}: bad response record: {exc}") from exc
    return responses


def save_review_file(labels: Mapping[str, str], path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for instance_id in sorted(labels):
            f.write(f"{instance_id} {labels[instance_id]}\n")


def load_review_file(path) -> dict[str, str]:
    labels: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"{path}:{line_no}: expected `instance_id category`")
            labels[parts[0]] = parts[1]
    return labels
