"""Run configuration: one structured JSON file with dotted-key overrides.

All randomness in a run flows from the single mandatory seed through named
per-stage sub-seeds, so any stage can be reproduced in isolation.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .datagen import AnnotatorModel, SynthConfig
from .embedders import EmbedderConfig


class ConfigError(ValueError):
    """Raised for malformed configs, unknown keys or unresolvable paths."""


@dataclass(frozen=True)
class DataPaths:
    target_corpus: str = ""
    related_corpus: str = ""
    sample_docs: str = ""
    responses: str = ""
    replacements: str = ""
    expert_labels: str = ""
    word_vectors: str = ""
    category_scheme: str = ""
    related_mapping: str = ""  # optional: relabels the related corpus
    precomputed_vectors: str = ""  # optional: enables the precomputed baseline


@dataclass(frozen=True)
class BenchmarkSection:
    k_outer: int = 10
    k_inner: int = 5
    vocab_size: int = 20000
    tfidf_terms: int = 3500
    tfidf_reg: float = 1.0
    autoencoder_epochs: int = 1
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


@dataclass(frozen=True)
class RunConfig:
    seed: int
    output_dir: str = "runs"
    data: DataPaths = DataPaths()
    synth: SynthConfig = SynthConfig()
    benchmark: BenchmarkSection = BenchmarkSection()
    embedder: EmbedderConfig = EmbedderConfig()

    def config_hash(self) -> str:
        return hashlib.sha256(
            json.dumps(self.to_dict(), sort_keys=True).encode("utf-8")
        ).hexdigest()

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def run_dir(self, command: str) -> Path:
        name = f"{command}-s{self.seed}-{self.config_hash()[:8]}"
        return Path(self.output_dir) / name


_SECTIONS = {
    "data": DataPaths,
    "synth": SynthConfig,
    "benchmark": BenchmarkSection,
    "embedder": EmbedderConfig,
}


def _coerce(value, target_type):
    """Parse an override string (or JSON value) into the field's type."""
    if target_type is bool:
        if isinstance(value, bool):
            return value
        if str(value).lower() in ("true", "1", "yes"):
            return True
        if str(value).lower() in ("false", "0", "no"):
            return False
        raise ConfigError(f"expected a boolean, got {value!r}")
    if target_type is int:
        return int(value)
    if target_type is float:
        return float(value)
    if target_type is str:
        return str(value)
    return value


def _build_section(cls, values: dict, where: str):
    fields = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in values.items():
        if key not in fields:
            raise ConfigError(f"unknown key {where}.{key}")
        ftype = fields[key].type
        if key == "annotators" and isinstance(value, dict):
            value = _build_section(AnnotatorModel, value, f"{where}.{key}")
        elif key == "topx_values":
            if isinstance(value, str):
                value = tuple(int(v) for v in value.split(",") if v.strip())
            else:
                value = tuple(int(v) for v in value)
        elif key == "autoencoder_epochs" and value is None:
            pass
        elif isinstance(value, (str, int, float, bool)):
            base = {"int": int, "float": float, "str": str, "bool": bool}.get(
                ftype if isinstance(ftype, str) else getattr(ftype, "__name__", "")
            )
            if base is not None:
                value = _coerce(value, base)
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad section {where}: {exc}") from exc


def load_config(path, overrides: list[str] | None = None) -> RunConfig:
    """Load the JSON config and apply `section.key=value` overrides."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = json.load(f)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be an object")
    for key_value in overrides or []:
        if "=" not in key_value:
            raise ConfigError(f"override {key_value!r} is not key=value")
        dotted, value = key_value.split("=", 1)
        parts = dotted.split(".")
        node = raw
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"cannot override through scalar {dotted!r}")
        node[parts[-1]] = value

    if "seed" not in raw:
        raise ConfigError("config must set a seed")
    known = {"seed", "output_dir"} | set(_SECTIONS)
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    sections = {}
    for name, cls in _SECTIONS.items():
        values = raw.get(name, {})
        if not isinstance(values, dict):
            raise ConfigError(f"section {name} must be an object")
        sections[name] = _build_section(cls, values, name)
    synth = sections["synth"]
    if "seed" not in raw.get("synth", {}):
        synth = dataclasses.replace(synth, seed=int(raw["seed"]))
    return RunConfig(
        seed=int(raw["seed"]),
        output_dir=str(raw.get("output_dir", "runs")),
        data=sections["data"],
        synth=synth,
        benchmark=sections["benchmark"],
        embedder=sections["embedder"],
    )


def require_paths(cfg: RunConfig, names: list[str]) -> dict[str, Path]:
    """Resolve the given data paths, failing with a diagnostic if any is missing."""
    resolved = {}
    for name in names:
        value = getattr(cfg.data, name)
        if not value:
            raise ConfigError(f"config data.{name} is required for this command")
        path = Path(value)
        if not path.exists():
            raise ConfigError(f"data.{name} points to a missing file: {path}")
        resolved[name] = path
    return resolved
