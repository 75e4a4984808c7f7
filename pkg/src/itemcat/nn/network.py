"""Network parameter containers, forward pass and loss/gradient computation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import layers as L
from . import specs
from ..text import PAD_INDEX

CLASS_CE = "class_ce"
SEQ_RECONSTRUCTION_CE = "seq_reconstruction_ce"


@dataclass
class NetworkParams:
    """Per-layer tensor dicts plus the names of frozen tensors per layer."""

    tensors: list[dict[str, np.ndarray]]
    frozen: list[set[str]]

    def copy(self) -> "NetworkParams":
        return NetworkParams(
            tensors=[{k: v.copy() for k, v in layer.items()} for layer in self.tensors],
            frozen=[set(s) for s in self.frozen],
        )

    def trainable(self):
        """Yields (layer_index, tensor_name, tensor) for non-frozen tensors."""
        for i, layer in enumerate(self.tensors):
            for name in sorted(layer):
                if name not in self.frozen[i]:
                    yield i, name, layer[name]

    def n_trainable(self) -> int:
        return sum(t.size for _, _, t in self.trainable())


@dataclass
class Activations:
    """All per-layer outputs of one forward pass."""

    outputs: list[np.ndarray]
    embedding_layer: int | None

    @property
    def final(self) -> np.ndarray:
        return self.outputs[-1]

    @property
    def embedding(self) -> np.ndarray:
        if self.embedding_layer is None:
            raise ValueError("network has no designated embedding layer")
        return self.outputs[self.embedding_layer]


def init_params(spec: specs.NetworkSpec, seed: int, *, table=None, vocab=None) -> NetworkParams:
    """Glorot-uniform weights, zero biases, forget-gate bias 1, frozen embedding.

    The embedding matrix is filled from the word-vector table (rows 0/1 kept
    zero for padding and out-of-vocab); tokens absent from the table get zero
    rows.
    """
    rng = np.random.default_rng(seed)
    tensors, frozen = [], []
    for layer, in_shape in zip(spec.layers, spec.in_shapes):
        params, frozen_names = L.init_layer(layer, in_shape, rng, table=table, vocab=vocab)
        tensors.append(params)
        frozen.append(frozen_names)
    return NetworkParams(tensors=tensors, frozen=frozen)


def _check_input(spec: specs.NetworkSpec, inputs: np.ndarray):
    if spec.max_len is not None:
        if inputs.ndim != 2 or inputs.shape[1] > spec.max_len:
            raise ValueError(f"expected (batch, <= {spec.max_len}) index input, got {inputs.shape}")
        if not np.issubdtype(inputs.dtype, np.integer):
            raise ValueError("index input must be an integer array")
    else:
        if inputs.ndim != 2 or inputs.shape[1] != spec.input_dim:
            raise ValueError(f"expected (batch, {spec.input_dim}) input, got {inputs.shape}")


def _forward_with_caches(spec, params, inputs, train, rng, upto=None):
    _check_input(spec, inputs)
    seq_len = inputs.shape[1] if spec.max_len is not None else None
    x = inputs
    mask = None
    outputs, caches = [], []
    stop = len(spec.layers) if upto is None else upto + 1
    for layer, tensors in zip(spec.layers[:stop], params.tensors[:stop]):
        x, mask, cache = L.forward_layer(layer, tensors, x, mask, train, rng, seq_len=seq_len)
        outputs.append(x)
        caches.append(cache)
    return outputs, caches


def forward(
    spec: specs.NetworkSpec,
    params: NetworkParams,
    inputs: np.ndarray,
    *,
    train: bool = False,
    rng: np.random.Generator | None = None,
    upto: int | None = None,
) -> Activations:
    """Run the network on a batch; train=True applies dropout from rng.

    upto, when given, stops after that layer index (used to run just the
    encoder half of the autoencoder when extracting embeddings).
    """
    if train and rng is None:
        raise ValueError("train-mode forward needs an rng for dropout")
    outputs, _ = _forward_with_caches(spec, params, inputs, train, rng, upto=upto)
    return Activations(outputs=outputs, embedding_layer=spec.embedding_layer)


def _zero_grads(params: NetworkParams) -> list[dict[str, np.ndarray]]:
    return [{k: np.zeros_like(v) for k, v in layer.items()} for layer in params.tensors]


def loss_and_grads(
    spec: specs.NetworkSpec,
    params: NetworkParams,
    inputs: np.ndarray,
    labels: np.ndarray | None,
    loss_kind: str,
    *,
    train: bool = False,
    rng: np.random.Generator | None = None,
):
    """Compute the batch loss and gradients for every tensor.

    class_ce: mean softmax cross-entropy against integer labels.
    seq_reconstruction_ce: mean per-timestep cross-entropy against the input
    indices over non-padding positions (labels are ignored).

    Frozen tensors get exactly-zero gradient arrays.
    """
    if inputs.shape[0] == 0:
        raise ValueError("batch must be non-empty")
    last = spec.layers[-1]
    if not isinstance(last, (specs.Dense, specs.TimeDense)) or last.activation != "softmax":
        raise ValueError("cross-entropy losses need a final softmax layer")
    outputs, caches = _forward_with_caches(spec, params, inputs, train, rng)
    probs = outputs[-1]

    if loss_kind == CLASS_CE:
        if labels is None:
            raise ValueError("class_ce needs labels")
        labels = np.asarray(labels)
        n_classes = probs.shape[-1]
        if labels.shape != (probs.shape[0],):
            raise ValueError("labels must align with the batch")
        if labels.min() < 0 or labels.max() >= n_classes:
            raise ValueError("label index out of range")
        n = probs.shape[0]
        picked = probs[np.arange(n), labels]
        loss = -np.mean(np.log(np.maximum(picked, 1e-300)))
        dlogits = probs.copy()
        dlogits[np.arange(n), labels] -= 1.0
        dlogits /= n
    elif loss_kind == SEQ_RECONSTRUCTION_CE:
        if probs.ndim != 3:
            raise ValueError("seq_reconstruction_ce needs a sequence output")
        targets = inputs
        pad_mask = (targets != PAD_INDEX).astype(float)
        n_real = pad_mask.sum()
        b, t, v = probs.shape
        if targets.max() >= v:
            raise ValueError("reconstruction target index out of range")
        picked = np.take_along_axis(probs, targets[:, :, None], axis=2)[:, :, 0]
        if n_real == 0:
            loss = 0.0
        else:
            loss = -np.sum(pad_mask * np.log(np.maximum(picked, 1e-300))) / n_real
        dlogits = probs.copy()
        rows = np.arange(b)[:, None]
        cols = np.arange(t)[None, :]
        dlogits[rows, cols, targets] -= 1.0
        dlogits *= pad_mask[:, :, None] / max(n_real, 1.0)
    else:
        raise ValueError(f"unknown loss kind {loss_kind!r}")

    grads = _zero_grads(params)
    dout = dlogits
    from_logits = True  # final softmax folded into the loss gradient
    for idx in range(len(spec.layers) - 1, -1, -1):
        dout, layer_grads = L.backward_layer(
            spec.layers[idx], params.tensors[idx], dout, caches[idx], from_logits=from_logits
        )
        from_logits = False
        for name, g in layer_grads.items():
            if name in params.frozen[idx]:
                continue  # frozen gradients stay exactly zero
            grads[idx][name] = g
    return float(loss), grads


def predict_proba(spec: specs.NetworkSpec, params: NetworkParams, inputs: np.ndarray) -> np.ndarray:
    return forward(spec, params, inputs).final
