"""Finite-difference verification of the analytic gradients."""

from __future__ import annotations

import numpy as np

from . import specs
from .network import (
    CLASS_CE,
    SEQ_RECONSTRUCTION_CE,
    NetworkParams,
    _forward_with_caches,
    init_params,
    loss_and_grads,
)

MAX_CHECK_PARAMS = 2000
# Absolute differences below this are inside central-difference noise and are
# treated as exact agreement; without the floor, a pair of true zeros would
# otherwise divide 1e-12-sized jitter by itself.
NOISE_FLOOR = 1e-9
# relu is non-differentiable at 0: a pre-activation closer to 0 than the
# perturbations can reach makes finite differences straddle the kink, so check
# points are redrawn until every relu argument clears this margin
RELU_MARGIN = 1e-3


def _loss_fn(spec, params, inputs, labels, loss_kind, train, dropout_seed):
    rng = np.random.default_rng(dropout_seed) if train else None
    loss, grads = loss_and_grads(spec, params, inputs, labels, loss_kind, train=train, rng=rng)
    return loss, grads


def max_relative_error(
    spec: specs.NetworkSpec,
    params: NetworkParams,
    inputs: np.ndarray,
    labels: np.ndarray | None,
    loss_kind: str,
    *,
    eps: float = 1e-5,
    train: bool = False,
    dropout_seed: int = 0,
) -> float:
    """Compare analytic gradients against central differences.

    In train mode the dropout rng is re-seeded per evaluation so every
    perturbed forward pass sees identical masks.
    """
    if params.n_trainable() > MAX_CHECK_PARAMS:
        raise ValueError(
            f"{params.n_trainable()} trainable parameters; finite differences are "
            f"only feasible up to ~{MAX_CHECK_PARAMS}"
        )
    _, analytic = _loss_fn(spec, params, inputs, labels, loss_kind, train, dropout_seed)
    worst = 0.0
    for i, name, tensor in params.trainable():
        grad = analytic[i][name]
        flat = tensor.reshape(-1)
        for pos in range(flat.size):
            orig = flat[pos]
            flat[pos] = orig + eps
            up, _ = _loss_fn(spec, params, inputs, labels, loss_kind, train, dropout_seed)
            flat[pos] = orig - eps
            down, _ = _loss_fn(spec, params, inputs, labels, loss_kind, train, dropout_seed)
            flat[pos] = orig
            numeric = (up - down) / (2.0 * eps)
            a = grad.reshape(-1)[pos]
            diff = abs(a - numeric)
            if diff < NOISE_FLOOR:
                continue
            worst = max(worst, diff / max(abs(a) + abs(numeric), 1e-12))
    return worst


def _relu_margin(spec, params, inputs) -> float:
    """Smallest |pre-activation| over all relu layers (inf when there is none)."""
    _, caches = _forward_with_caches(spec, params, inputs, False, None)
    margin = np.inf
    for layer, cache in zip(spec.layers, caches):
        if isinstance(layer, (specs.Dense, specs.TimeDense)) and layer.activation == "relu":
            margin = min(margin, float(np.abs(cache["z"]).min()))
    return margin


def _random_case(spec, seed, batch_size):
    rng = np.random.default_rng(seed)
    params = init_params(spec, seed)
    # random weights in the embedding rows, so gradients upstream are generic
    for tensors, layer in zip(params.tensors, spec.layers):
        if isinstance(layer, specs.Embed):
            tensors["emb"][2:] = rng.normal(0, 0.5, size=tensors["emb"][2:].shape)
    if spec.max_len is not None:
        vocab_size = next(l.vocab_size for l in spec.layers if isinstance(l, specs.Embed))
        lengths = rng.integers(1, spec.max_len + 1, size=batch_size)
        inputs = np.zeros((batch_size, spec.max_len), dtype=np.int64)
        for row, n in enumerate(lengths):
            inputs[row, :n] = rng.integers(1, vocab_size, size=n)
    else:
        inputs = rng.normal(0, 1.0, size=(batch_size, spec.input_dim))
    if isinstance(spec.layers[-1], specs.TimeDense):
        labels = None
        loss_kind = SEQ_RECONSTRUCTION_CE
    else:
        labels = rng.integers(0, spec.layers[-1].units, size=batch_size)
        loss_kind = CLASS_CE
    return params, inputs, labels, loss_kind


def grad_check(spec: specs.NetworkSpec, seed: int, *, batch_size: int = 4, eps: float = 1e-5) -> float:
    """Gradient-check a spec on random inputs; returns the max relative error.

    Builds seeded params and a random batch (index sequences with varied real
    lengths for sequence networks, gaussian vectors otherwise) and checks the
    appropriate loss: reconstruction for decoder-ended networks, class
    cross-entropy otherwise. Cases whose relu arguments sit on the kink are
    redrawn deterministically.
    """
    for attempt in range(32):
        case_seed = seed + 100003 * attempt
        params, inputs, labels, loss_kind = _random_case(spec, case_seed, batch_size)
        if _relu_margin(spec, params, inputs) > RELU_MARGIN:
            return max_relative_error(spec, params, inputs, labels, loss_kind, eps=eps)
    raise RuntimeError("could not find a well-conditioned gradient-check case")
