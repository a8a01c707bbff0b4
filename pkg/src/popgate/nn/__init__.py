from .layers import (
    Activation,
    BatchNorm,
    Dense,
    DenseLayerSpec,
    Elu,
    Identity,
    LeakyRelu,
    MLP,
    Param,
    Sigmoid,
    activation_forward,
)
from .losses import mse_loss, softmax, softmax_backward
from .optim import Adam, AdamW, clip_grad_norm
from .control import TrainControl
from .checkpoint import load_checkpoint, save_checkpoint

__all__ = [
    "Activation",
    "Adam",
    "AdamW",
    "BatchNorm",
    "Dense",
    "DenseLayerSpec",
    "Elu",
    "Identity",
    "LeakyRelu",
    "MLP",
    "Param",
    "Sigmoid",
    "TrainControl",
    "activation_forward",
    "clip_grad_norm",
    "load_checkpoint",
    "mse_loss",
    "save_checkpoint",
    "softmax",
    "softmax_backward",
]
