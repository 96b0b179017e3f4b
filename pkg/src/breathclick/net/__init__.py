"""From-scratch neural network: layers, model, training, persistence."""

from .model import Model, ModelConfig, load_weights, save_weights
from .training import (
    AdamState,
    TrainConfig,
    adam_step,
    predict_timesteps,
    train,
    weighted_cross_entropy,
)

__all__ = [
    "Model",
    "ModelConfig",
    "TrainConfig",
    "AdamState",
    "adam_step",
    "train",
    "predict_timesteps",
    "weighted_cross_entropy",
    "save_weights",
    "load_weights",
]
