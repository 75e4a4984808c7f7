"""Hand-rolled neural network engine: LSTM stacks, Adam, gradient checks."""

from .gradcheck import grad_check, max_relative_error
from .network import (
    CLASS_CE,
    SEQ_RECONSTRUCTION_CE,
    Activations,
    NetworkParams,
    forward,
    init_params,
    loss_and_grads,
    predict_proba,
)
from .optim import AdamState, adam_step
from .serialize import load_network, save_network
from .specs import (
    Dense,
    Dropout,
    Embed,
    LSTM,
    NetworkSpec,
    Repeat,
    SpatialDropout,
    TimeDense,
    feedforward_classifier,
    sequence_autoencoder,
    sequence_classifier,
)
from .training import TrainConfig, train

__all__ = [
    "CLASS_CE",
    "SEQ_RECONSTRUCTION_CE",
    "Activations",
    "AdamState",
    "Dense",
    "Dropout",
    "Embed",
    "LSTM",
    "NetworkParams",
    "NetworkSpec",
    "Repeat",
    "SpatialDropout",
    "TimeDense",
    "TrainConfig",
    "adam_step",
    "feedforward_classifier",
    "forward",
    "grad_check",
    "init_params",
    "load_network",
    "loss_and_grads",
    "max_relative_error",
    "predict_proba",
    "save_network",
    "sequence_autoencoder",
    "sequence_classifier",
    "train",
]
