"""Layers, residual trunk, head layouts and checkpoints."""
from .layers import Activation, BatchNorm, DenseLayer, Mode, NormState, ResidualBlock, batch_normalize
from .network import HeadOutputs, Network, UNION_HEAD, init_network, network_spec_for
from .checkpoint import load_checkpoint, save_checkpoint

__all__ = [
    "Activation",
    "BatchNorm",
    "DenseLayer",
    "Mode",
    "NormState",
    "ResidualBlock",
    "batch_normalize",
    "HeadOutputs",
    "Network",
    "UNION_HEAD",
    "init_network",
    "network_spec_for",
    "load_checkpoint",
    "save_checkpoint",
]
