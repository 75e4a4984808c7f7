import numpy as np
import numpy.testing as npt
import pytest

from itemcat import nn
from itemcat.embedders import (
    CategoryScheme,
    EmbedderConfig,
    apply_category_mapping,
    build_embedding_networks,
    extract_embedding,
    load_category_mapping,
    load_category_scheme,
    save_category_scheme,
    split_industry,
    train_embedding_network,
)
from itemcat.features import EmbeddingTable
from itemcat.text import Document, build_vocab, encode_batch, preprocess_document

SCHEME = CategoryScheme(
    ("fashion", "jewelry", "media", "consulting"), frozenset({"fashion", "jewelry"})
)

TINY_CFG = EmbedderConfig(
    max_len=8, lstm1=6, lstm2=5, code_dim=4, epochs=2, batch_size=16, vocab_size=500
)


def make_table(vocab, dim=5, seed=0):
    rng = np.random.default_rng(seed)
    return EmbeddingTable(
        {tok: rng.normal(size=dim) for tok in vocab.index}, dim=dim
    )


def corpus_with_signal(n, seed=0, categories=("fashion", "jewelry"), uninformative=0.0):
    """Documents whose text deterministically names their category."""
    rng = np.random.default_rng(seed)
    words = {
        "fashion": ["dress", "skirt", "bralette"],
        "jewelry": ["ring", "necklace", "bracelet"],
        "media": ["video", "podcast", "edit"],
        "consulting": ["advice", "strategy", "audit"],
    }
    noise = ["large", "red", "new", "sale"]
    docs = []
    for i in range(n):
        cat = categories[int(rng.integers(0, len(categories)))]
        tokens = [words[cat][int(rng.integers(0, 3))] for _ in range(2)]
        tokens += [noise[int(rng.integers(0, len(noise)))]]
        docs.append(
            Document(
                id=f"d{i}",
                item_name=" ".join(tokens),
                seller_industry=cat,
                gold_category=cat,
            )
        )
    return docs


class TestCategoryScheme:
    def test_services_is_complement(self):
        assert SCHEME.services == frozenset({"media", "consulting"})

    def test_duplicates_rejected(self):
        with pytest.raises(ValueError):
            CategoryScheme(("a", "a"), frozenset())

    def test_unknown_goods_rejected(self):
        with pytest.raises(ValueError):
            CategoryScheme(("a",), frozenset({"b"}))

    def test_file_roundtrip_preserves_order(self, tmp_path):
        path = tmp_path / "scheme.txt"
        save_category_scheme(SCHEME, path)
        loaded = load_category_scheme(path)
        assert loaded == SCHEME
        assert loaded.categories == SCHEME.categories


class TestSplitIndustry:
    def test_partition_by_goods_membership(self):
        docs = corpus_with_signal(40, categories=("fashion", "media"))
        goods, services = split_industry(docs, SCHEME)
        assert all(d.seller_industry == "fashion" for d in goods)
        assert all(d.seller_industry == "media" for d in services)
        assert len(goods) + len(services) == len(docs)

    def test_empty_corpus(self):
        assert split_industry([], SCHEME) == ([], [])

    def test_missing_industry_rejected(self):
        with pytest.raises(ValueError, match="seller_industry"):
            split_industry([Document(id="x", item_name="y")], SCHEME)

    def test_unknown_industry_rejected(self):
        doc = Document(id="x", item_name="y", seller_industry="mystery")
        with pytest.raises(ValueError, match="mystery"):
            split_industry([doc], SCHEME)


class TestMapping:
    def test_apply_mapping(self, tmp_path):
        path = tmp_path / "map.txt"
        path.write_text("apparel fashion\ngems jewelry\n", encoding="utf-8")
        mapping = load_category_mapping(path)
        docs = [Document(id="1", item_name="x", gold_category="apparel")]
        mapped = apply_category_mapping(docs, mapping, SCHEME)
        assert mapped[0].gold_category == "fashion"

    def test_unmapped_category_rejected(self):
        docs = [Document(id="1", item_name="x", gold_category="mystery")]
        with pytest.raises(ValueError, match="mapping"):
            apply_category_mapping(docs, {}, SCHEME)

    def test_service_target_rejected(self):
        docs = [Document(id="1", item_name="x", gold_category="src")]
        with pytest.raises(ValueError, match="goods"):
            apply_category_mapping(docs, {"src": "media"}, SCHEME)


class TestTrainEmbeddingNetwork:
    def _vocab_and_table(self, docs):
        vocab = build_vocab((preprocess_document(d) for d in docs), 100)
        return vocab, make_table(vocab)

    def test_softmax_width_is_distinct_label_count(self):
        docs = corpus_with_signal(30, categories=("fashion", "jewelry"))
        vocab, table = self._vocab_and_table(docs)
        net = train_embedding_network(
            docs, "industry", source_tag="industry_goods", vocab=vocab, table=table,
            scheme=SCHEME, cfg=TINY_CFG,
        )
        assert net.label_space == ("fashion", "jewelry")
        assert net.spec.layers[-1].units == 2

    def test_autoencoder_output_width_is_vocab_size(self):
        docs = corpus_with_signal(20)
        vocab, table = self._vocab_and_table(docs)
        net = train_embedding_network(
            docs, "self", source_tag="autoencoder", vocab=vocab, table=table, cfg=TINY_CFG
        )
        assert net.spec.layers[-1].units == vocab.size

    def test_label_outside_scheme_rejected(self):
        docs = [Document(id="1", item_name="thing", seller_industry="mystery")]
        vocab, table = self._vocab_and_table(docs)
        with pytest.raises(ValueError, match="scheme"):
            train_embedding_network(
                docs, "industry", source_tag="industry_goods", vocab=vocab, table=table,
                scheme=SCHEME, cfg=TINY_CFG,
            )

    def test_learns_deterministic_text_signal(self):
        # text names the industry outright: held-out accuracy must be high
        docs = corpus_with_signal(260, seed=3)
        vocab, table = self._vocab_and_table(docs)
        cfg = EmbedderConfig(
            max_len=8, lstm1=10, lstm2=8, code_dim=6, epochs=30, batch_size=32, vocab_size=100
        )
        train, held = docs[:200], docs[200:]
        net = train_embedding_network(
            train, "industry", source_tag="industry_goods", vocab=vocab, table=table,
            scheme=SCHEME, cfg=cfg, seed=1,
        )
        x = encode_batch([preprocess_document(d) for d in held], vocab, cfg.max_len)
        probs = nn.predict_proba(net.spec, net.params, x)
        preds = [net.label_space[i] for i in probs.argmax(axis=1)]
        accuracy = np.mean([p == d.seller_industry for p, d in zip(preds, held)])
        assert accuracy > 0.9


class TestExtraction:
    def _trained_net(self):
        docs = corpus_with_signal(30)
        vocab = build_vocab((preprocess_document(d) for d in docs), 100)
        table = make_table(vocab)
        return docs, train_embedding_network(
            docs, "industry", source_tag="industry_goods", vocab=vocab, table=table,
            scheme=SCHEME, cfg=TINY_CFG,
        )

    def test_embedding_width_and_tag(self):
        docs, net = self._trained_net()
        emb = extract_embedding(net, docs[0])
        assert emb.vector.shape == (TINY_CFG.code_dim,)
        assert emb.source_tag == "industry_goods"
        assert (emb.vector >= 0).all()  # relu output

    def test_extraction_is_deterministic(self):
        docs, net = self._trained_net()
        a = extract_embedding(net, docs[1]).vector
        b = extract_embedding(net, docs[1]).vector
        npt.assert_array_equal(a, b)

    def test_matches_full_forward_penultimate(self):
        docs, net = self._trained_net()
        doc = docs[2]
        emb = extract_embedding(net, doc).vector
        x = encode_batch([preprocess_document(doc)], net.vocab, net.max_len)
        acts = nn.forward(net.spec, net.params, x)
        npt.assert_allclose(emb, acts.embedding[0], atol=1e-12)

    def test_padding_invariance(self):
        docs, net = self._trained_net()
        doc = docs[3]
        base = extract_embedding(net, doc).vector
        # embed_matrix trims to the longest length in its batch; pairing the
        # doc with a max-length one forces full padding through the network
        long_doc = Document(id="pad", item_name="x " * net.max_len)
        padded = net.embed_matrix([doc, long_doc])[0]
        npt.assert_allclose(base, padded, atol=1e-12)


class TestBuildAll:
    def test_four_sources_and_degenerate_skip(self):
        goods_docs = corpus_with_signal(40, seed=1, categories=("fashion", "jewelry"))
        # services side has a single distinct label: that network is skipped
        services_docs = [
            Document(id=f"s{i}", item_name="video podcast", seller_industry="media")
            for i in range(10)
        ]
        target = goods_docs + services_docs
        related = corpus_with_signal(30, seed=2, categories=("fashion", "jewelry"))
        related = [
            Document(id=f"r{i}", item_name=d.item_name, gold_category=d.gold_category)
            for i, d in enumerate(related)
        ]
        vocab = build_vocab((preprocess_document(d) for d in target + related), 200)
        table = make_table(vocab)
        with pytest.warns(UserWarning, match="industry_services"):
            nets = build_embedding_networks(
                target, related, SCHEME, vocab=vocab, table=table, cfg=TINY_CFG, seed=0
            )
        assert set(nets) == {"industry_goods", "related", "autoencoder"}

    def test_sample_ids_excluded_from_training(self):
        docs = corpus_with_signal(30)
        related = [
            Document(id=f"r{i}", item_name=d.item_name, gold_category=d.gold_category)
            for i, d in enumerate(corpus_with_signal(20, seed=5))
        ]
        vocab = build_vocab((preprocess_document(d) for d in docs + related), 200)
        table = make_table(vocab)
        exclude = {d.id for d in docs[:10]}
        nets = build_embedding_networks(
            docs, related, SCHEME, vocab=vocab, table=table, cfg=TINY_CFG, seed=0,
            exclude_ids=exclude,
        )
        # retraining on the manually filtered corpus gives identical params
        kept = [d for d in docs if d.id not in exclude]
        from itemcat.util import stage_seed

        direct = train_embedding_network(
            [d for d in kept if d.seller_industry in SCHEME.goods],
            "industry", source_tag="industry_goods", vocab=vocab, table=table,
            scheme=SCHEME, cfg=TINY_CFG, seed=stage_seed(0, "industry_goods"),
        )
        for l1, l2 in zip(nets["industry_goods"].params.tensors, direct.params.tensors):
            for name in l1:
                npt.assert_array_equal(l1[name], l2[name])

    def test_autoencoder_embedding_uses_encoder_only(self):
        docs = corpus_with_signal(25)
        vocab = build_vocab((preprocess_document(d) for d in docs), 200)
        table = make_table(vocab)
        net = train_embedding_network(
            docs, "self", source_tag="autoencoder", vocab=vocab, table=table, cfg=TINY_CFG
        )
        # zeroing the decoder cannot change extracted embeddings
        emb_before = net.embed_matrix(docs[:5])
        for idx in range(net.spec.embedding_layer + 1, len(net.spec.layers)):
            for name in net.params.tensors[idx]:
                net.params.tensors[idx][name][:] = 0.0
        emb_after = net.embed_matrix(docs[:5])
        npt.assert_array_equal(emb_before, emb_after)
