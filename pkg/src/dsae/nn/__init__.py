"""Minimal differentiable-network engine used by the autoencoder."""

from .autograd import Tensor, parameter
from .gradcheck import check_gradients
from .layers import Dense, HyperbolicDense
from .losses import logistic_loss, squared_error, supervised_contrastive_loss
from .optim import AdamState, adam_step

__all__ = [
    "AdamState",
    "Dense",
    "HyperbolicDense",
    "Tensor",
    "adam_step",
    "check_gradients",
    "logistic_loss",
    "parameter",
    "squared_error",
    "supervised_contrastive_loss",
]
