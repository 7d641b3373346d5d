# 网络核心包
# 固定结构的回归卷积网络：前向、反向、优化器与 NNW 权重文件
from .network import (
    CANONICAL_PARAMETER_COUNTS,
    CANONICAL_SIDE,
    ForwardTrace,
    Gradients,
    Network,
    backward,
    build_network,
    canonical_layer_specs,
    forward,
    init_network,
    input_gradient,
)
from .optim import OptimizerState, optimizer_step
from .serialization import decode_weights, encode_weights, load_weights, save_weights

__all__ = [
    "CANONICAL_PARAMETER_COUNTS",
    "CANONICAL_SIDE",
    "ForwardTrace",
    "Gradients",
    "Network",
    "OptimizerState",
    "backward",
    "build_network",
    "canonical_layer_specs",
    "decode_weights",
    "encode_weights",
    "forward",
    "init_network",
    "input_gradient",
    "load_weights",
    "optimizer_step",
    "save_weights",
]
