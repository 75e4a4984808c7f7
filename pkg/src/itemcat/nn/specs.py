"""Network architecture descriptors and the stacks used across the pipeline."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class Embed:
    """Frozen word-vector lookup; also yields the padding mask for LSTMs."""

    vocab_size: int
    dim: int
    frozen: bool = True


@dataclass(frozen=True)
class SpatialDropout:
    """Drops whole embedding channels across all timesteps (train mode only)."""

    rate: float


@dataclass(frozen=True)
class LSTM:
    units: int
    return_sequences: bool = False


@dataclass(frozen=True)
class Dropout:
    rate: float


@dataclass(frozen=True)
class Dense:
    units: int
    activation: str = "linear"  # linear | relu | softmax


@dataclass(frozen=True)
class Repeat:
    """Tile a vector across timesteps (sequence-decoder input)."""

    times: int


@dataclass(frozen=True)
class TimeDense:
    """Dense layer applied independently at every timestep."""

    units: int
    activation: str = "linear"


LayerSpec = Embed | SpatialDropout | LSTM | Dropout | Dense | Repeat | TimeDense

_ACTIVATIONS = ("linear", "relu", "softmax")


@dataclass(frozen=True)
class NetworkSpec:
    """An ordered layer stack with its input contract.

    Exactly one of max_len (index-sequence input) or input_dim (dense vector
    input) must be set. embedding_layer, when set, is the index of the layer
    whose output is taken as the document embedding.
    """

    layers: tuple[LayerSpec, ...]
    max_len: int | None = None
    input_dim: int | None = None
    embedding_layer: int | None = None
    in_shapes: tuple[tuple, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if (self.max_len is None) == (self.input_dim is None):
            raise ValueError("exactly one of max_len / input_dim must be set")
        if not self.layers:
            raise ValueError("network needs at least one layer")
        object.__setattr__(self, "in_shapes", tuple(self._infer_shapes()))

    def _infer_shapes(self):
        """Validate layer adjacency and record each layer's input shape.

        Shapes are ("idx", T), ("seq", T, D) or ("vec", D).
        """
        if self.max_len is not None:
            shape = ("idx", self.max_len)
        else:
            shape = ("vec", self.input_dim)
        in_shapes = []
        for pos, layer in enumerate(self.layers):
            in_shapes.append(shape)
            kind = shape[0]
            if isinstance(layer, Embed):
                if kind != "idx":
                    raise ValueError(f"layer {pos}: Embed needs index input, got {kind}")
                shape = ("seq", shape[1], layer.dim)
            elif isinstance(layer, SpatialDropout):
                if kind != "seq":
                    raise ValueError(f"layer {pos}: SpatialDropout needs sequence input")
                if not 0.0 <= layer.rate < 1.0:
                    raise ValueError(f"layer {pos}: dropout rate must be in [0, 1)")
            elif isinstance(layer, LSTM):
                if kind != "seq":
                    raise ValueError(f"layer {pos}: LSTM needs sequence input")
                if layer.return_sequences:
                    shape = ("seq", shape[1], layer.units)
                else:
                    shape = ("vec", layer.units)
            elif isinstance(layer, Dropout):
                if kind != "vec":
                    raise ValueError(f"layer {pos}: Dropout needs vector input")
                if not 0.0 <= layer.rate < 1.0:
                    raise ValueError(f"layer {pos}: dropout rate must be in [0, 1)")
            elif isinstance(layer, Dense):
                if kind != "vec":
                    raise ValueError(f"layer {pos}: Dense needs vector input")
                if layer.activation not in _ACTIVATIONS:
                    raise ValueError(f"layer {pos}: unknown activation {layer.activation!r}")
                shape = ("vec", layer.units)
            elif isinstance(layer, Repeat):
                if kind != "vec":
                    raise ValueError(f"layer {pos}: Repeat needs vector input")
                shape = ("seq", layer.times, shape[1])
            elif isinstance(layer, TimeDense):
                if kind != "seq":
                    raise ValueError(f"layer {pos}: TimeDense needs sequence input")
                if layer.activation not in _ACTIVATIONS:
                    raise ValueError(f"layer {pos}: unknown activation {layer.activation!r}")
                shape = ("seq", shape[1], layer.units)
            else:
                raise TypeError(f"unknown layer spec {layer!r}")
        return in_shapes

    @property
    def output_shape(self):
        last_in = self.in_shapes[-1]
        layer = self.layers[-1]
        if isinstance(layer, (Dense,)):
            return ("vec", layer.units)
        if isinstance(layer, TimeDense):
            return ("seq", last_in[1], layer.units)
        if isinstance(layer, LSTM):
            return ("seq", last_in[1], layer.units) if layer.return_sequences else ("vec", layer.units)
        if isinstance(layer, Embed):
            return ("seq", last_in[1], layer.dim)
        if isinstance(layer, Repeat):
            return ("seq", layer.times, last_in[1])
        return last_in


def sequence_classifier(
    vocab_size: int,
    n_classes: int,
    *,
    max_len: int = 15,
    embed_dim: int = 300,
    lstm1: int = 200,
    lstm2: int = 100,
    code_dim: int = 30,
    spatial_dropout: float = 0.3,
    dropout: float = 0.2,
) -> NetworkSpec:
    """The LSTM document classifier used to train embedding networks.

    Embedding -> spatial dropout -> LSTM (sequences) -> LSTM (last state) ->
    dropout -> relu bottleneck (the document embedding) -> softmax.
    """
    return NetworkSpec(
        layers=(
            Embed(vocab_size, embed_dim),
            SpatialDropout(spatial_dropout),
            LSTM(lstm1, return_sequences=True),
            LSTM(lstm2, return_sequences=False),
            Dropout(dropout),
            Dense(code_dim, "relu"),
            Dense(n_classes, "softmax"),
        ),
        max_len=max_len,
        embedding_layer=5,
    )


def sequence_autoencoder(
    vocab_size: int,
    *,
    max_len: int = 15,
    embed_dim: int = 300,
    lstm1: int = 200,
    lstm2: int = 100,
    code_dim: int = 30,
    spatial_dropout: float = 0.3,
    dropout: float = 0.2,
) -> NetworkSpec:
    """Self-supervised reconstruction network.

    Encoder mirrors sequence_classifier up to the relu bottleneck; the decoder
    repeats the bottleneck across timesteps, mirrors the LSTM stack and emits
    a per-timestep softmax over the vocabulary.
    """
    return NetworkSpec(
        layers=(
            Embed(vocab_size, embed_dim),
            SpatialDropout(spatial_dropout),
            LSTM(lstm1, return_sequences=True),
            LSTM(lstm2, return_sequences=False),
            Dropout(dropout),
            Dense(code_dim, "relu"),
            Repeat(max_len),
            LSTM(lstm2, return_sequences=True),
            LSTM(lstm1, return_sequences=True),
            TimeDense(vocab_size, "softmax"),
        ),
        max_len=max_len,
        embedding_layer=5,
    )


def feedforward_classifier(input_dim: int, n_classes: int, *, hidden: int = 100) -> NetworkSpec:
    """Small dense classifier used on top of fixed-length feature vectors."""
    return NetworkSpec(
        layers=(Dense(hidden, "relu"), Dense(n_classes, "softmax")),
        input_dim=input_dim,
    )
