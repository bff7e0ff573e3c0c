"""Minimal deterministic neural-network core.

Forward passes, hand-derived backward passes, MSE loss, Adam, and a
one-cycle learning-rate schedule. No general autodiff: the two model
architectures in this package are fixed stacks, so each layer carries
its own analytic backward pass, verified against finite differences.
"""

from .layers import (
    BatchNorm1d,
    Conv1d,
    ConvTranspose1d,
    Dropout,
    LeakyReLU,
    Linear,
    Parameter,
    PReLU,
    ReLU,
    Sequential,
)
from .losses import mse_loss
from .optim import Adam, OneCycleSchedule

__all__ = [
    "Adam",
    "BatchNorm1d",
    "Conv1d",
    "ConvTranspose1d",
    "Dropout",
    "LeakyReLU",
    "Linear",
    "mse_loss",
    "OneCycleSchedule",
    "Parameter",
    "PReLU",
    "ReLU",
    "Sequential",
]
