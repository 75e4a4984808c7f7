"""Adam optimizer with bias correction; frozen tensors are never touched."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .network import NetworkParams


@dataclass
class AdamState:
    """First/second-moment accumulators keyed by (layer index, tensor name)."""

    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict[tuple[int, str], np.ndarray] = field(default_factory=dict)
    v: dict[tuple[int, str], np.ndarray] = field(default_factory=dict)

    @classmethod
    def for_params(cls, params: NetworkParams, lr: float = 0.001) -> "AdamState":
        state = cls(lr=lr)
        for i, name, tensor in params.trainable():
            state.m[(i, name)] = np.zeros_like(tensor)
            state.v[(i, name)] = np.zeros_like(tensor)
        return state


def adam_step(params: NetworkParams, grads, state: AdamState):
    """One bias-corrected Adam update, applied in place to non-frozen tensors.

    w -= lr * m_hat / (sqrt(v_hat) + eps), with m_hat/v_hat the
    bias-corrected moment estimates.
    """
    state.t += 1
    bc1 = 1.0 - state.beta1**state.t
    bc2 = 1.0 - state.beta2**state.t
    for i, name, tensor in params.trainable():
        g = grads[i][name]
        key = (i, name)
        m = state.m[key]
        v = state.v[key]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        tensor -= state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
    return params, state
