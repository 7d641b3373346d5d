# 网络层包
# 每个模块通过 layer_loader.register 登记自己的层类型
from .base import BaseLayer, ParametricLayer
from .loader import LayerLoader, layer_loader

layer_loader.load_builtin_layers()

from .activation import ReLU, Tanh  # noqa: E402
from .conv import Conv2D  # noqa: E402
from .dense import Flatten, Linear  # noqa: E402
from .pooling import MaxPool2D  # noqa: E402

__all__ = [
    "BaseLayer",
    "ParametricLayer",
    "LayerLoader",
    "layer_loader",
    "Conv2D",
    "ReLU",
    "MaxPool2D",
    "Flatten",
    "Linear",
    "Tanh",
]
