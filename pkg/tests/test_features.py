import math
from collections import Counter

import numpy as np
import numpy.testing as npt
import pytest

from itemcat.features import (
    EmbeddingTable,
    avg_vectors,
    fit_tfidf,
    load_word_vectors,
    save_word_vectors,
    tfidf_matrix,
    tfidf_transform,
)


def brute_force_tfidf(corpus, n_terms, doc):
    """Independent oracle: direct df counting and the stated idf formula."""
    def doc_terms(tokens):
        return list(tokens) + [f"{a}_{b}" for a, b in zip(tokens, tokens[1:])]

    df = Counter()
    for tokens in corpus:
        df.update(set(doc_terms(tokens)))
    kept = sorted(df, key=lambda t: (-df[t], t))[:n_terms]
    n = len(corpus)
    idf = {t: math.log((1 + n) / (1 + df[t])) + 1.0 for t in kept}
    counts = Counter(t for t in doc_terms(doc) if t in idf)
    vec = {t: counts[t] * idf[t] for t in counts}
    norm = math.sqrt(sum(v * v for v in vec.values()))
    if norm > 0:
        vec = {t: v / norm for t, v in vec.items()}
    return vec, kept


class TestFitTfidf:
    def test_hand_computed_idf(self):
        model = fit_tfidf([["a", "b"], ["a"]], n_terms=10)
        assert set(model.columns) == {"a", "b", "a_b"}
        # N=2, df(a)=2 -> idf = ln(3/3)+1
        assert model.idf[model.columns["a"]] == pytest.approx(1.0, abs=1e-12)
        assert model.idf[model.columns["b"]] == pytest.approx(math.log(1.5) + 1.0, abs=1e-12)

    def test_single_term(self):
        model = fit_tfidf([["a"]], n_terms=1)
        assert list(model.columns) == ["a"]

    def test_tie_broken_lexicographically(self):
        # df(b) == df(a_b) == 1; "a_b" < "b"
        model = fit_tfidf([["a", "b"], ["a"]], n_terms=2)
        assert set(model.columns) == {"a", "a_b"}

    def test_errors(self):
        with pytest.raises(ValueError):
            fit_tfidf([["a"]], n_terms=0)
        with pytest.raises(ValueError):
            fit_tfidf([], n_terms=5)

    def test_column_count_bound(self):
        rng = np.random.default_rng(0)
        words = [f"w{i}" for i in range(12)]
        for _ in range(20):
            corpus = [
                [words[i] for i in rng.integers(0, len(words), rng.integers(1, 6))]
                for _ in range(rng.integers(1, 8))
            ]
            n_terms = int(rng.integers(1, 30))
            model = fit_tfidf(corpus, n_terms)
            distinct = set()
            for tokens in corpus:
                distinct.update(tokens)
                distinct.update(f"{a}_{b}" for a, b in zip(tokens, tokens[1:]))
            assert model.n_columns == min(n_terms, len(distinct))


class TestTfidfTransform:
    MODEL = fit_tfidf([["a", "b"], ["a"]], n_terms=10)

    def test_single_active_column_is_unit(self):
        vec = tfidf_transform(self.MODEL, ["a", "a"]).to_dense()
        assert np.count_nonzero(vec) == 1
        assert vec[self.MODEL.columns["a"]] == pytest.approx(1.0)

    def test_empty_doc_is_zero(self):
        vec = tfidf_transform(self.MODEL, [])
        assert vec.to_dense().sum() == 0.0

    def test_unknown_only_doc_is_zero(self):
        assert tfidf_transform(self.MODEL, ["zzz"]).to_dense().sum() == 0.0

    def test_matches_brute_force_on_toy_corpus(self):
        corpus = [["a", "b"], ["a"]]
        oracle, _ = brute_force_tfidf(corpus, 10, ["a", "b"])
        vec = tfidf_transform(self.MODEL, ["a", "b"]).to_dense()
        for term, value in oracle.items():
            assert abs(vec[self.MODEL.columns[term]] - value) <= 1e-9

    def test_matches_brute_force_randomized(self):
        rng = np.random.default_rng(7)
        words = [f"w{i}" for i in range(9)]
        for _ in range(300):
            corpus = [
                [words[i] for i in rng.integers(0, len(words), rng.integers(1, 7))]
                for _ in range(rng.integers(1, 7))
            ]
            n_terms = int(rng.integers(1, 25))
            model = fit_tfidf(corpus, n_terms)
            doc = [words[i] for i in rng.integers(0, len(words), rng.integers(0, 8))]
            oracle, kept = brute_force_tfidf(corpus, n_terms, doc)
            assert set(model.columns) == set(kept)
            vec = tfidf_transform(model, doc).to_dense()
            dense_oracle = np.zeros_like(vec)
            for term, value in oracle.items():
                dense_oracle[model.columns[term]] = value
            npt.assert_allclose(vec, dense_oracle, atol=1e-9)

    def test_l2_norm_is_one_or_zero(self):
        rng = np.random.default_rng(3)
        words = [f"w{i}" for i in range(6)]
        model = fit_tfidf([["w0", "w1", "w2"], ["w3", "w4"], ["w0"]], 20)
        for _ in range(100):
            doc = [words[i] for i in rng.integers(0, len(words), rng.integers(0, 9))]
            norm = np.linalg.norm(tfidf_transform(model, doc).to_dense())
            assert norm == pytest.approx(0.0, abs=1e-12) or norm == pytest.approx(1.0, abs=1e-12)

    def test_matrix_stacks_rows(self):
        mat = tfidf_matrix(self.MODEL, [["a"], [], ["b"]])
        assert mat.shape == (3, self.MODEL.n_columns)
        assert mat[1].sum() == 0.0


class TestAvgVectors:
    TABLE = EmbeddingTable({"a": np.array([1.0, 0.0]), "b": np.array([0.0, 1.0])}, dim=2)

    def test_identity_for_single_token(self):
        npt.assert_array_equal(avg_vectors(["a"], self.TABLE), [1.0, 0.0])

    def test_mean_of_two(self):
        npt.assert_array_equal(avg_vectors(["a", "b"], self.TABLE), [0.5, 0.5])

    def test_absent_tokens_read_as_zero(self):
        npt.assert_array_equal(avg_vectors(["zzz"], self.TABLE), [0.0, 0.0])

    def test_permutation_invariant(self):
        rng = np.random.default_rng(0)
        tokens = ["a", "b", "zzz", "a", "b", "b"]
        base = avg_vectors(tokens, self.TABLE)
        for _ in range(10):
            shuffled = list(tokens)
            rng.shuffle(shuffled)
            npt.assert_allclose(avg_vectors(shuffled, self.TABLE), base, atol=1e-15)

    def test_empty_table_rejected(self):
        with pytest.raises(ValueError):
            avg_vectors(["a"], EmbeddingTable({}, dim=2))


class TestWordVectorFile:
    def test_roundtrip_exact(self, tmp_path):
        rng = np.random.default_rng(1)
        table = EmbeddingTable(
            {f"tok{i}": rng.normal(size=5) for i in range(10)}, dim=5
        )
        path = tmp_path / "vectors.txt"
        save_word_vectors(table, path)
        loaded = load_word_vectors(path)
        assert loaded.dim == 5
        assert set(loaded.vectors) == set(table.vectors)
        for token, vec in table.vectors.items():
            npt.assert_array_equal(loaded.vectors[token], vec)

    def test_ragged_rejected(self, tmp_path):
        path = tmp_path / "vectors.txt"
        path.write_text("a 1.0 2.0\nb 1.0\n", encoding="utf-8")
        with pytest.raises(ValueError):
            load_word_vectors(path)
