"""Item categorization for short noisy text.

Label a small sample through crowd adjudication, train LSTM networks on
related labeled corpora, reuse their bottleneck activations as document
embeddings, and stack per-source classifiers under a logistic-regression
meta-model. Includes a synthetic-data generator and a cross-validated
benchmark harness with significance testing.
"""

from . import (
    adjudication,
    benchmark,
    datagen,
    embedders,
    evaluation,
    features,
    linear,
    nn,
    stacking,
    stats,
    text,
)

__all__ = [
    "adjudication",
    "benchmark",
    "datagen",
    "embedders",
    "evaluation",
    "features",
    "linear",
    "nn",
    "stacking",
    "stats",
    "text",
]

__version__ = "0.1.0"
