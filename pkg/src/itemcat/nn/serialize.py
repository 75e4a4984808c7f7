"""Versioned JSON persistence for networks; round-trips are value-exact.

json serializes floats with repr, which is shortest-round-trip exact for
float64, so saved tensors reload bit-identically.
"""

from __future__ import annotations

import json

from ..text import Vocabulary
from . import specs
from .network import NetworkParams

import numpy as np

FORMAT_VERSION = "itemcat-network/1"

_LAYER_TYPES = {
    "embed": specs.Embed,
    "spatial_dropout": specs.SpatialDropout,
    "lstm": specs.LSTM,
    "dropout": specs.Dropout,
    "dense": specs.Dense,
    "repeat": specs.Repeat,
    "time_dense": specs.TimeDense,
}
_TYPE_NAMES = {cls: name for name, cls in _LAYER_TYPES.items()}


def _layer_to_dict(layer) -> dict:
    d = {"type": _TYPE_NAMES[type(layer)]}
    d.update(layer.__dict__)
    return d


def _layer_from_dict(d: dict):
    d = dict(d)
    cls = _LAYER_TYPES[d.pop("type")]
    return cls(**d)


def spec_to_dict(spec: specs.NetworkSpec) -> dict:
    return {
        "layers": [_layer_to_dict(layer) for layer in spec.layers],
        "max_len": spec.max_len,
        "input_dim": spec.input_dim,
        "embedding_layer": spec.embedding_layer,
    }


def spec_from_dict(d: dict) -> specs.NetworkSpec:
    return specs.NetworkSpec(
        layers=tuple(_layer_from_dict(l) for l in d["layers"]),
        max_len=d["max_len"],
        input_dim=d["input_dim"],
        embedding_layer=d["embedding_layer"],
    )


def params_to_dict(params: NetworkParams) -> dict:
    return {
        "tensors": [
            {name: tensor.tolist() for name, tensor in layer.items()} for layer in params.tensors
        ],
        "frozen": [sorted(names) for names in params.frozen],
    }


def params_from_dict(d: dict) -> NetworkParams:
    return NetworkParams(
        tensors=[{name: np.array(val) for name, val in layer.items()} for layer in d["tensors"]],
        frozen=[set(names) for names in d["frozen"]],
    )


def save_network(path, spec: specs.NetworkSpec, params: NetworkParams, vocab: Vocabulary | None = None, meta: dict | None = None) -> None:
    payload = {
        "format": FORMAT_VERSION,
        "spec": spec_to_dict(spec),
        "params": params_to_dict(params),
        "vocab": vocab.index if vocab is not None else None,
        "meta": meta or {},
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, sort_keys=True)
        f.write("\n")


def load_network(path):
    """Returns (spec, params, vocab or None, meta dict)."""
    with open(path, "r", encoding="utf-8") as f:
        payload = json.load(f)
    if payload.get("format") != FORMAT_VERSION:
        raise ValueError(f"unsupported model format {payload.get('format')!r}")
    spec = spec_from_dict(payload["spec"])
    params = params_from_dict(payload["params"])
    vocab = Vocabulary(payload["vocab"]) if payload["vocab"] is not None else None
    return spec, params, vocab, payload.get("meta", {})
