"""From-scratch MLP: activations, delta-rule training, search and export."""

from .activations import Activation, activate, derivative
from .network import DivergenceError, MlpNetwork, ShapeError, backward_update, forward, gradient, loss
from .training import (
    DEFAULT_CANDIDATES,
    Candidate,
    SearchError,
    TrainConfig,
    ValidationReport,
    architecture_search,
    train,
    validate,
)

__all__ = [
    "Activation",
    "Candidate",
    "DEFAULT_CANDIDATES",
    "DivergenceError",
    "MlpNetwork",
    "SearchError",
    "ShapeError",
    "TrainConfig",
    "ValidationReport",
    "activate",
    "architecture_search",
    "backward_update",
    "derivative",
    "forward",
    "gradient",
    "loss",
    "train",
    "validate",
]
