"""Conv + LSTM recognizer with multi-camera fusion and clip voting."""

from .checkpoint import CheckpointError, load_model, save_model
from .inference import dump_activations, fuse_views, recognize_deep, vote_clip
from .network import (
    ActivationTrace,
    NetworkConfig,
    NetworkModel,
    forward,
    init_network,
    loss_and_gradients,
    param_shapes,
)
from .training import AdamState, TrainLog, TrainSpec, adam_step, prepare_clip, train

__all__ = [
    "ActivationTrace",
    "AdamState",
    "CheckpointError",
    "NetworkConfig",
    "NetworkModel",
    "TrainLog",
    "TrainSpec",
    "adam_step",
    "dump_activations",
    "forward",
    "fuse_views",
    "init_network",
    "load_model",
    "loss_and_gradients",
    "param_shapes",
    "prepare_clip",
    "recognize_deep",
    "save_model",
    "train",
    "vote_clip",
]
