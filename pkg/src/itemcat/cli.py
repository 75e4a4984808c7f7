"""Command-line entry point tying the pipeline stages together.

Every command reads one JSON config (plus `key=value` overrides), writes its
artifacts into a run directory named from (command, seed, config hash), and
finishes by writing a manifest with the config snapshot and artifact
checksums. Exit codes: 0 success, 1 config error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import traceback
from collections import Counter
from pathlib import Path

import numpy as np

from . import nn
from .adjudication import load_responses, load_review_file, save_review_file
from .benchmark import BenchmarkSettings, adjudicate_sample, run_benchmark, write_report
from .config import ConfigError, RunConfig, load_config, require_paths
from .datagen import generate, write_bundle
from .embedders import (
    EmbeddingNetwork,
    apply_category_mapping,
    build_embedding_networks,
    load_category_mapping,
    load_category_scheme,
)
from .evaluation import bucket_sort_key
from .features import load_word_vectors
from .stacking import StackerConfig, save_ensemble, train_stacker, LabeledInstance
from .text import build_vocab, load_documents, preprocess_document
from .util import sha256_file, stage_seed

COMMANDS = (
    "gen-synthetic",
    "adjudicate",
    "train-embedders",
    "extract",
    "train-ete",
    "benchmark",
    "stats",
    "grad-check",
)

CONFIG_ENV_VAR = "ITEMCAT_CONFIG"
GRAD_CHECK_TOLERANCE = 1e-4


def _write_manifest(run_dir: Path, command: str, cfg: RunConfig, artifacts: list[Path]):
    manifest = {
        "command": command,
        "seed": cfg.seed,
        "config": cfg.to_dict(),
        "config_hash": cfg.config_hash(),
        "artifacts": {
            p.name: sha256_file(p) for p in sorted(artifacts, key=lambda p: p.name)
        },
    }
    path = run_dir / "manifest.json"
    with open(path, "w", encoding="utf-8") as f:
        json.dump(manifest, f, sort_keys=True, indent=2)
        f.write("\n")
    return path


def _benchmark_settings(cfg: RunConfig) -> BenchmarkSettings:
    b = cfg.benchmark
    return BenchmarkSettings(
        seed=cfg.seed,
        k_outer=b.k_outer,
        k_inner=b.k_inner,
        vocab_size=b.vocab_size,
        tfidf_terms=b.tfidf_terms,
        tfidf_reg=b.tfidf_reg,
        embedder=cfg.embedder,
        autoencoder_epochs=b.autoencoder_epochs,
        model_hidden=b.model_hidden,
        model_epochs=b.model_epochs,
        model_batch_size=b.model_batch_size,
        model_lr=b.model_lr,
        meta_reg=b.meta_reg,
        meta_tol=b.meta_tol,
        partial_ensembles=b.partial_ensembles,
        topx_values=b.topx_values,
        topx_mode=b.topx_mode,
        lazy_threshold=b.lazy_threshold,
    )


def _load_related(cfg: RunConfig, paths):
    related = load_documents(paths["related_corpus"])
    if cfg.data.related_mapping:
        scheme = load_category_scheme(paths["category_scheme"])
        mapping = load_category_mapping(cfg.data.related_mapping)
        related = apply_category_mapping(related, mapping, scheme)
    return related


def cmd_gen_synthetic(cfg: RunConfig, run_dir: Path) -> list[Path]:
    bundle = generate(cfg.synth)
    paths = write_bundle(bundle, run_dir)
    print(f"bundle written to {run_dir}")
    return list(paths.values())


def cmd_adjudicate(cfg: RunConfig, run_dir: Path) -> list[Path]:
    paths = require_paths(cfg, ["sample_docs", "responses"])
    sample = load_documents(paths["sample_docs"])
    responses = load_responses(paths["responses"])
    replacements = (
        load_responses(cfg.data.replacements) if cfg.data.replacements else []
    )
    expert = (
        load_review_file(cfg.data.expert_labels) if cfg.data.expert_labels else None
    )
    docs, labels, counts, lazy = adjudicate_sample(
        sample, responses, replacements, expert, cfg.benchmark.lazy_threshold
    )
    label_map = dict(zip((d.id for d in docs), labels))
    out_labels = run_dir / "adjudicated_labels.txt"
    save_review_file(label_map, out_labels)
    out_lazy = run_dir / "lazy_annotators.txt"
    out_lazy.write_text("".join(f"{a}\n" for a in sorted(lazy)), encoding="utf-8")
    out_counts = run_dir / "verdicts.csv"
    out_counts.write_text(
        "verdict,count\n" + "".join(f"{k},{v}\n" for k, v in sorted(counts.items())),
        encoding="utf-8",
    )
    print(f"labeled {len(label_map)} of {len(sample)} instances; verdicts {dict(sorted(counts.items()))}")
    return [out_labels, out_lazy, out_counts]


def _train_embedders(cfg: RunConfig):
    paths = require_paths(
        cfg, ["target_corpus", "related_corpus", "sample_docs", "word_vectors", "category_scheme"]
    )
    target = load_documents(paths["target_corpus"])
    related = _load_related(cfg, paths)
    sample_ids = {d.id for d in load_documents(paths["sample_docs"])}
    scheme = load_category_scheme(paths["category_scheme"])
    table = load_word_vectors(paths["word_vectors"])
    corpus = [d for d in target + related if d.id not in sample_ids]
    vocab = build_vocab((preprocess_document(d) for d in corpus), cfg.benchmark.vocab_size)
    nets = build_embedding_networks(
        target,
        related,
        scheme,
        vocab=vocab,
        table=table,
        cfg=cfg.embedder,
        seed=stage_seed(cfg.seed, "embedders"),
        exclude_ids=sample_ids,
        autoencoder_epochs=cfg.benchmark.autoencoder_epochs,
    )
    return nets, scheme, table


def cmd_train_embedders(cfg: RunConfig, run_dir: Path) -> list[Path]:
    nets, _, _ = _train_embedders(cfg)
    written = []
    for tag, net in sorted(nets.items()):
        path = run_dir / f"network_{tag}.json"
        nn.save_network(
            path,
            net.spec,
            net.params,
            net.vocab,
            meta={"source_tag": tag, "label_space": list(net.label_space), "max_len": net.max_len},
        )
        written.append(path)
        print(f"{tag}: final epoch loss {net.history[-1]:.4f} -> {path.name}")
    return written


def _load_networks(model_dir: Path) -> dict[str, EmbeddingNetwork]:
    nets = {}
    for path in sorted(model_dir.glob("network_*.json")):
        spec, params, vocab, meta = nn.load_network(path)
        tag = meta["source_tag"]
        nets[tag] = EmbeddingNetwork(
            spec=spec,
            params=params,
            vocab=vocab,
            source_tag=tag,
            label_space=tuple(meta.get("label_space", [])),
            max_len=meta.get("max_len", 15),
        )
    if not nets:
        raise ConfigError(f"no network_*.json files under {model_dir}")
    return nets


def cmd_extract(cfg: RunConfig, run_dir: Path, model_dir: str | None) -> list[Path]:
    if not model_dir:
        raise ConfigError("--models <dir with network_*.json> is required for extract")
    paths = require_paths(cfg, ["sample_docs"])
    docs = load_documents(paths["sample_docs"])
    nets = _load_networks(Path(model_dir))
    written = []
    for tag, net in sorted(nets.items()):
        matrix = net.embed_matrix(docs)
        path = run_dir / f"embeddings_{tag}.txt"
        with open(path, "w", encoding="utf-8") as f:
            for doc, row in zip(docs, matrix):
                values = " ".join(repr(float(v)) for v in row)
                f.write(f"{doc.id} {values}\n")
        written.append(path)
        print(f"{tag}: wrote {matrix.shape[0]} embeddings of width {matrix.shape[1]}")
    return written


def cmd_train_ete(cfg: RunConfig, run_dir: Path, model_dir: str | None) -> list[Path]:
    paths = require_paths(cfg, ["sample_docs", "responses"])
    sample = load_documents(paths["sample_docs"])
    responses = load_responses(paths["responses"])
    replacements = load_responses(cfg.data.replacements) if cfg.data.replacements else []
    expert = load_review_file(cfg.data.expert_labels) if cfg.data.expert_labels else None
    docs, labels, _, _ = adjudicate_sample(
        sample, responses, replacements, expert, cfg.benchmark.lazy_threshold
    )
    if model_dir:
        nets = _load_networks(Path(model_dir))
    else:
        nets, _, _ = _train_embedders(cfg)
    b = cfg.benchmark
    stacker_cfg = StackerConfig(
        inner_k=b.k_inner,
        seed=stage_seed(cfg.seed, "stacker"),
        model_hidden=b.model_hidden,
        model_epochs=b.model_epochs,
        model_batch_size=b.model_batch_size,
        model_lr=b.model_lr,
        meta_reg=b.meta_reg,
        meta_tol=b.meta_tol,
    )
    instances = [LabeledInstance(d, lbl) for d, lbl in zip(docs, labels)]
    ensemble = train_stacker(instances, nets, stacker_cfg)
    path = run_dir / "ensemble.json"
    save_ensemble(ensemble, path)
    print(f"trained stacking ensemble over sources {ensemble.source_order} on {len(docs)} instances")
    return [path]


def cmd_benchmark(cfg: RunConfig, run_dir: Path) -> list[Path]:
    paths = require_paths(
        cfg,
        [
            "target_corpus", "related_corpus", "sample_docs", "responses",
            "word_vectors", "category_scheme",
        ],
    )
    target = load_documents(paths["target_corpus"])
    related = _load_related(cfg, paths)
    sample = load_documents(paths["sample_docs"])
    responses = load_responses(paths["responses"])
    replacements = load_responses(cfg.data.replacements) if cfg.data.replacements else []
    expert = load_review_file(cfg.data.expert_labels) if cfg.data.expert_labels else None
    scheme = load_category_scheme(paths["category_scheme"])
    table = load_word_vectors(paths["word_vectors"])
    precomputed = (
        load_word_vectors(cfg.data.precomputed_vectors)
        if cfg.data.precomputed_vectors
        else None
    )
    report = run_benchmark(
        target, related, sample, responses, replacements, expert,
        scheme, table, _benchmark_settings(cfg), precomputed,
    )
    written = write_report(report, run_dir)
    ranked = sorted(report.methods, key=lambda m: -report.methods[m].mean_accuracy)
    print("mean accuracy by method:")
    for m in ranked:
        print(f"  {m:<28} {report.methods[m].mean_accuracy:.4f}")
    return written


def cmd_stats(cfg: RunConfig, run_dir: Path, dataset: str | None) -> list[Path]:
    path = Path(dataset) if dataset else None
    if path is None:
        path = require_paths(cfg, ["sample_docs"])["sample_docs"]
    if not path.exists():
        raise ConfigError(f"dataset not found: {path}")
    docs = load_documents(path)
    lengths = Counter(len(preprocess_document(d)) for d in docs)
    categories = Counter(
        d.gold_category or d.seller_industry or "(unlabeled)" for d in docs
    )
    with_desc = sum(1 for d in docs if d.item_description)
    out_hist = run_dir / "word_count_histogram.csv"
    out_hist.write_text(
        "token_count,documents\n"
        + "".join(f"{k},{lengths[k]}\n" for k in sorted(lengths)),
        encoding="utf-8",
    )
    out_cats = run_dir / "category_distribution.csv"
    total = len(docs)
    out_cats.write_text(
        "category,documents,proportion\n"
        + "".join(
            f"{cat},{n},{repr(n / total)}\n"
            for cat, n in sorted(categories.items(), key=lambda kv: (-kv[1], kv[0]))
        ),
        encoding="utf-8",
    )
    out_summary = run_dir / "dataset_summary.csv"
    mean_len = (
        sum(k * v for k, v in lengths.items()) / total if total else 0.0
    )
    out_summary.write_text(
        "documents,mean_tokens,description_presence_rate\n"
        f"{total},{repr(mean_len)},{repr(with_desc / total if total else 0.0)}\n",
        encoding="utf-8",
    )
    print(f"{total} documents, mean {mean_len:.2f} tokens, "
          f"{with_desc / total if total else 0:.1%} with descriptions")
    return [out_hist, out_cats, out_summary]


def cmd_grad_check(cfg: RunConfig, run_dir: Path) -> tuple[list[Path], bool]:
    cases = {
        "dense_softmax": nn.NetworkSpec(layers=(nn.Dense(3, "softmax"),), input_dim=5),
        "feedforward": nn.feedforward_classifier(6, 3, hidden=8),
        "lstm_last": nn.NetworkSpec(
            layers=(nn.Embed(7, 3), nn.LSTM(4), nn.Dense(3, "softmax")), max_len=5
        ),
        "lstm_stacked": nn.NetworkSpec(
            layers=(nn.Embed(7, 3), nn.LSTM(4, return_sequences=True), nn.LSTM(3), nn.Dense(2, "softmax")),
            max_len=5,
        ),
        "classifier_stack": nn.sequence_classifier(
            8, 3, max_len=6, embed_dim=4, lstm1=5, lstm2=4, code_dim=3
        ),
        "autoencoder_stack": nn.sequence_autoencoder(
            8, max_len=6, embed_dim=4, lstm1=5, lstm2=4, code_dim=3
        ),
    }
    rows = []
    worst = 0.0
    for name, spec in sorted(cases.items()):
        for seed in range(3):
            err = nn.grad_check(spec, stage_seed(cfg.seed, f"gc-{name}-{seed}"))
            worst = max(worst, err)
            rows.append((name, seed, err))
            print(f"  {name:<20} seed {seed}  max relative error {err:.3e}")
    path = run_dir / "grad_check.csv"
    path.write_text(
        "case,seed,max_relative_error\n"
        + "".join(f"{n},{s},{repr(float(e))}\n" for n, s, e in rows),
        encoding="utf-8",
    )
    passed = worst < GRAD_CHECK_TOLERANCE
    print(f"worst error {worst:.3e} ({'PASS' if passed else 'FAIL'} at {GRAD_CHECK_TOLERANCE})")
    return [path], passed


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="itemcat",
        description="Item categorization pipeline: synthetic data, annotation "
        "adjudication, embedding networks, stacked ensembles and benchmarks.",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument(
        "--config",
        default=os.environ.get(CONFIG_ENV_VAR),
        help=f"JSON config path (default: ${CONFIG_ENV_VAR})",
    )
    parser.add_argument("--models", help="directory of trained network_*.json files")
    parser.add_argument("--dataset", help="dataset path for the stats command")
    parser.add_argument(
        "overrides",
        nargs="*",
        help="config overrides, e.g. benchmark.k_outer=5 synth.seed=3",
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    if not args.config:
        print("error: --config is required (or set $" + CONFIG_ENV_VAR + ")", file=sys.stderr)
        return 1
    try:
        cfg = load_config(args.config, args.overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    run_dir = cfg.run_dir(args.command)
    try:
        run_dir.mkdir(parents=True, exist_ok=True)
        ok = True
        if args.command == "gen-synthetic":
            artifacts = cmd_gen_synthetic(cfg, run_dir)
        elif args.command == "adjudicate":
            artifacts = cmd_adjudicate(cfg, run_dir)
        elif args.command == "train-embedders":
            artifacts = cmd_train_embedders(cfg, run_dir)
        elif args.command == "extract":
            artifacts = cmd_extract(cfg, run_dir, args.models)
        elif args.command == "train-ete":
            artifacts = cmd_train_ete(cfg, run_dir, args.models)
        elif args.command == "benchmark":
            artifacts = cmd_benchmark(cfg, run_dir)
        elif args.command == "stats":
            artifacts = cmd_stats(cfg, run_dir, args.dataset)
        else:
            artifacts, ok = cmd_grad_check(cfg, run_dir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception:
        traceback.print_exc()
        return 2
    _write_manifest(run_dir, args.command, cfg, artifacts)
    print(f"run complete: {run_dir}")
    return 0 if ok else 2


if __name__ == "__main__":
    sys.exit(main())
