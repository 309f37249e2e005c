"""
Low-rank adapter math on small dense layers: forward, merge, loss, AdamW
training and checkpoints.
"""

from .adapters import (
    AdapterPair,
    DenseLayer,
    ParamCounts,
    init_adapters,
    lora_forward,
    lora_merge,
    param_counts,
    range_warnings,
)
from .checkpoint import (
    decode_binary,
    decode_json,
    encode_binary,
    encode_json,
    load_checkpoint,
    save_checkpoint,
)
from .training import (
    AdamState,
    ToyDataset,
    TrainConfig,
    adamw_step,
    loss_and_grads,
    make_base_layer,
    make_toy_dataset,
    nll_loss,
    train_adapters,
)

__all__ = [
    "AdapterPair",
    "DenseLayer",
    "ParamCounts",
    "init_adapters",
    "lora_forward",
    "lora_merge",
    "param_counts",
    "range_warnings",
    "decode_binary",
    "decode_json",
    "encode_binary",
    "encode_json",
    "load_checkpoint",
    "save_checkpoint",
    "AdamState",
    "ToyDataset",
    "TrainConfig",
    "adamw_step",
    "loss_and_grads",
    "make_base_layer",
    "make_toy_dataset",
    "nll_loss",
    "train_adapters",
]
