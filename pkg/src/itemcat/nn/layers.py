"""Forward/backward passes for each layer type.

All math is float64. Layers are stateless: parameters live in per-layer dicts
owned by the caller, and forward returns whatever cache its backward needs.
Sequence tensors are (batch, time, features); the padding mask is (batch, time)
with 1.0 at real-token positions.
"""

from __future__ import annotations

import numpy as np

from . import specs


def sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int, shape) -> np.ndarray:
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape)


# --- init -------------------------------------------------------------------


def init_layer(layer, in_shape, rng, table=None, vocab=None):
    """Returns (params dict, frozen-name set) for one layer."""
    if isinstance(layer, specs.Embed):
        emb = np.zeros((layer.vocab_size, layer.dim))
        if table is not None:
            if table.dim != layer.dim:
                raise ValueError(f"embedding table dim {table.dim} != layer dim {layer.dim}")
            if vocab is None:
                raise ValueError("vocab required to populate the embedding from a table")
            tokens = vocab.tokens_by_index()
            if len(tokens) != layer.vocab_size:
                raise ValueError(f"vocab size {len(tokens)} != embed rows {layer.vocab_size}")
            # rows 0 (padding) and 1 (out-of-vocab) stay zero
            for idx in range(2, len(tokens)):
                emb[idx] = table.get(tokens[idx])
        return {"emb": emb}, ({"emb"} if layer.frozen else set())
    if isinstance(layer, specs.LSTM):
        d_in = in_shape[2]
        h = layer.units
        wx = _glorot(rng, d_in, 4 * h, (d_in, 4 * h))
        wh = _glorot(rng, h, 4 * h, (h, 4 * h))
        b = np.zeros(4 * h)
        b[h : 2 * h] = 1.0  # forget-gate bias
        return {"wx": wx, "wh": wh, "b": b}, set()
    if isinstance(layer, specs.Dense):
        d_in = in_shape[1]
        w = _glorot(rng, d_in, layer.units, (d_in, layer.units))
        return {"w": w, "b": np.zeros(layer.units)}, set()
    if isinstance(layer, specs.TimeDense):
        d_in = in_shape[2]
        w = _glorot(rng, d_in, layer.units, (d_in, layer.units))
        return {"w": w, "b": np.zeros(layer.units)}, set()
    # SpatialDropout, Dropout, Repeat carry no parameters
    return {}, set()


# --- forward ----------------------------------------------------------------


def forward_layer(layer, params, x, mask, train, rng, seq_len=None):
    """Returns (out, mask_out, cache).

    seq_len overrides Repeat.times so a decoder matches the (possibly
    trimmed) input length of the current batch.
    """
    if isinstance(layer, specs.Embed):
        out = params["emb"][x]
        new_mask = (x != 0).astype(float)
        return out, new_mask, {"ids": x}
    if isinstance(layer, specs.SpatialDropout):
        if not train or layer.rate == 0.0:
            return x, mask, {"mask": None}
        keep = 1.0 - layer.rate
        drop = (rng.random((x.shape[0], 1, x.shape[2])) < keep) / keep
        return x * drop, mask, {"mask": drop}
    if isinstance(layer, specs.Dropout):
        if not train or layer.rate == 0.0:
            return x, mask, {"mask": None}
        keep = 1.0 - layer.rate
        drop = (rng.random(x.shape) < keep) / keep
        return x * drop, mask, {"mask": drop}
    if isinstance(layer, specs.LSTM):
        return _lstm_forward(layer, params, x, mask)
    if isinstance(layer, specs.Dense):
        z = x @ params["w"] + params["b"]
        out = _activate(layer.activation, z)
        return out, None, {"x": x, "z": z, "out": out}
    if isinstance(layer, specs.TimeDense):
        b, t, d = x.shape
        z = x.reshape(b * t, d) @ params["w"] + params["b"]
        out = _activate(layer.activation, z).reshape(b, t, layer.units)
        return out, mask, {"x": x, "z": z.reshape(b, t, layer.units), "out": out}
    if isinstance(layer, specs.Repeat):
        times = layer.times if seq_len is None else seq_len
        out = np.repeat(x[:, None, :], times, axis=1)
        return out, None, {"in_dim": x.shape[1]}
    raise TypeError(f"unknown layer {layer!r}")


def _activate(name, z):
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "softmax":
        return softmax(z)
    return z


def _lstm_forward(layer, params, x, mask):
    b, t, _ = x.shape
    h = layer.units
    if mask is None:
        mask = np.ones((b, t))
    zx = x.reshape(b * t, -1) @ params["wx"] + params["b"]
    zx = zx.reshape(b, t, 4 * h)
    gates = np.zeros((b, t, 4 * h))
    cells_new = np.zeros((b, t, h))  # candidate cell before masking
    tanh_c = np.zeros((b, t, h))
    c_states = np.zeros((b, t, h))  # post-mask cell state
    h_states = np.zeros((b, t, h))  # post-mask hidden state
    h_prev = np.zeros((b, h))
    c_prev = np.zeros((b, h))
    for step in range(t):
        z = zx[:, step, :] + h_prev @ params["wh"]
        gi = sigmoid(z[:, :h])
        gf = sigmoid(z[:, h : 2 * h])
        gg = np.tanh(z[:, 2 * h : 3 * h])
        go = sigmoid(z[:, 3 * h :])
        c_new = gf * c_prev + gi * gg
        tc = np.tanh(c_new)
        h_new = go * tc
        m = mask[:, step : step + 1]
        c_cur = m * c_new + (1.0 - m) * c_prev
        h_cur = m * h_new + (1.0 - m) * h_prev
        gates[:, step, :h] = gi
        gates[:, step, h : 2 * h] = gf
        gates[:, step, 2 * h : 3 * h] = gg
        gates[:, step, 3 * h :] = go
        cells_new[:, step] = c_new
        tanh_c[:, step] = tc
        c_states[:, step] = c_cur
        h_states[:, step] = h_cur
        h_prev, c_prev = h_cur, c_cur
    out = h_states if layer.return_sequences else h_states[:, -1, :]
    out_mask = mask if layer.return_sequences else None
    cache = {
        "x": x,
        "mask": mask,
        "gates": gates,
        "cells_new": cells_new,
        "tanh_c": tanh_c,
        "c_states": c_states,
        "h_states": h_states,
    }
    return out, out_mask, cache


# --- backward ---------------------------------------------------------------


def backward_layer(layer, params, dout, cache, *, from_logits=False):
    """Returns (dx, grads dict). dx is None for index-input layers."""
    if isinstance(layer, specs.Embed):
        grads = {"emb": np.zeros_like(params["emb"])}
        if not layer.frozen:
            np.add.at(grads["emb"], cache["ids"], dout)
        return None, grads
    if isinstance(layer, (specs.SpatialDropout, specs.Dropout)):
        drop = cache["mask"]
        return (dout if drop is None else dout * drop), {}
    if isinstance(layer, specs.LSTM):
        return _lstm_backward(layer, params, dout, cache)
    if isinstance(layer, specs.Dense):
        dz = _activation_backward(layer.activation, dout, cache, from_logits)
        dw = cache["x"].T @ dz
        db = dz.sum(axis=0)
        dx = dz @ params["w"].T
        return dx, {"w": dw, "b": db}
    if isinstance(layer, specs.TimeDense):
        b, t, units = dout.shape
        dz = _activation_backward(layer.activation, dout, cache, from_logits)
        d_in = cache["x"].shape[2]
        dz2 = dz.reshape(b * t, units)
        x2 = cache["x"].reshape(b * t, d_in)
        dw = x2.T @ dz2
        db = dz2.sum(axis=0)
        dx = (dz2 @ params["w"].T).reshape(b, t, d_in)
        return dx, {"w": dw, "b": db}
    if isinstance(layer, specs.Repeat):
        return dout.sum(axis=1), {}
    raise TypeError(f"unknown layer {layer!r}")


def _activation_backward(name, dout, cache, from_logits):
    if from_logits:
        # caller already differentiated through the activation (softmax+CE)
        return dout
    if name == "relu":
        return dout * (cache["z"] > 0)
    if name == "softmax":
        p = cache["out"]
        return p * (dout - (dout * p).sum(axis=-1, keepdims=True))
    return dout


def _lstm_backward(layer, params, dout, cache):
    x = cache["x"]
    mask = cache["mask"]
    gates = cache["gates"]
    tanh_c = cache["tanh_c"]
    cells_new = cache["cells_new"]
    c_states = cache["c_states"]
    h_states = cache["h_states"]
    b, t, d_in = x.shape
    h = layer.units

    dz_all = np.zeros((b, t, 4 * h))
    if layer.return_sequences:
        dh_seq = dout
    else:
        dh_seq = np.zeros((b, t, h))
        dh_seq[:, -1, :] = dout
    dh_carry = np.zeros((b, h))
    dc_carry = np.zeros((b, h))
    dwh = np.zeros_like(params["wh"])
    for step in range(t - 1, -1, -1):
        m = mask[:, step : step + 1]
        dh = dh_seq[:, step, :] + dh_carry
        dc = dc_carry
        gi = gates[:, step, :h]
        gf = gates[:, step, h : 2 * h]
        gg = gates[:, step, 2 * h : 3 * h]
        go = gates[:, step, 3 * h :]
        tc = tanh_c[:, step]
        c_prev = c_states[:, step - 1] if step > 0 else np.zeros((b, h))
        h_prev = h_states[:, step - 1] if step > 0 else np.zeros((b, h))

        dh_new = m * dh
        dc_new = m * dc + go * (1.0 - tc**2) * dh_new
        dgo = tc * dh_new
        dgf = c_prev * dc_new
        dgi = gg * dc_new
        dgg = gi * dc_new

        dz = np.concatenate(
            [
                dgi * gi * (1.0 - gi),
                dgf * gf * (1.0 - gf),
                dgg * (1.0 - gg**2),
                dgo * go * (1.0 - go),
            ],
            axis=1,
        )
        dz_all[:, step, :] = dz
        dwh += h_prev.T @ dz
        dh_carry = (1.0 - m) * dh + dz @ params["wh"].T
        dc_carry = (1.0 - m) * dc + gf * dc_new
    dz2 = dz_all.reshape(b * t, 4 * h)
    dwx = x.reshape(b * t, d_in).T @ dz2
    db = dz2.sum(axis=0)
    dx = (dz2 @ params["wx"].T).reshape(b, t, d_in)
    return dx, {"wx": dwx, "wh": dwh, "b": db}
