"""Python bindings for the cae clustering library."""

from ._cae import (
    ConfigError,
    Error,
    FormatError,
    IoError,
    NumericError,
    ShapeError,
    cosine_similarity,
    counterpart,
    evaluate,
    fuse,
    fusion_weights,
    kmeans,
    l2_normalize,
    load_embeddings,
    load_labels,
    run,
    save_embeddings,
    save_labels,
    select_texts,
    sinkhorn,
    softmax_counterpart,
    synth,
    transport_cost,
)

__version__ = "0.1.0"
