"""Framework-free neural network engine (numpy, float64)."""

from .activations import hard_sigmoid
from .complexity import count_flops, count_params
from .gradcheck import check_gradients
from .layers import LSTM, Conv1D, Dense, Flatten, LayerSpec, MaxPool1D, infer_shapes
from .network import Network, mse
from .optim import Adam, AdamState, adam_step

__all__ = [
    "Adam",
    "AdamState",
    "Conv1D",
    "Dense",
    "Flatten",
    "LSTM",
    "LayerSpec",
    "MaxPool1D",
    "Network",
    "adam_step",
    "check_gradients",
    "count_flops",
    "count_params",
    "hard_sigmoid",
    "infer_shapes",
    "mse",
]
