from typing import Any, Dict, Optional, Tuple

import numpy as np

from ...models import LayerKind
from .base import BaseLayer, Shape
from .loader import layer_loader

OPEN_BOUND = np.nextafter(1.0, 0.0)


@layer_loader.register
class ReLU(BaseLayer):
    kind = LayerKind.RELU

    def output_shape(self, input_shape: Shape) -> Shape:
        return tuple(input_shape)

    def forward(self, x: np.ndarray) -> Tuple[np.ndarray, Any]:
        return np.maximum(x, 0.0), x > 0

    def backward(self, cache: Any, grad_out: np.ndarray) -> Tuple[np.ndarray, Dict[str, np.ndarray]]:
        return np.where(cache, grad_out, 0.0), {}

    def propagate_interval(self, lower: np.ndarray, upper: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return np.maximum(lower, 0.0), np.maximum(upper, 0.0)

    def kink_pattern(self, cache: Any) -> Optional[np.ndarray]:
        return cache


@layer_loader.register
class Tanh(BaseLayer):
    kind = LayerKind.TANH

    def output_shape(self, input_shape: Shape) -> Shape:
        return tuple(input_shape)

    def forward(self, x: np.ndarray) -> Tuple[np.ndarray, Any]:
        # 输出保持在开区间 (-1, 1) 内
        out = np.clip(np.tanh(x), -OPEN_BOUND, OPEN_BOUND)
        return out, out

    def backward(self, cache: Any, grad_out: np.ndarray) -> Tuple[np.ndarray, Dict[str, np.ndarray]]:
        return grad_out * (1.0 - cache ** 2), {}

    def propagate_interval(self, lower: np.ndarray, upper: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        # 与 forward 相同的截断，截断后的 tanh 仍然单调
        lower, upper = np.tanh(lower), np.tanh(upper)
        return np.clip(lower, -OPEN_BOUND, OPEN_BOUND), np.clip(upper, -OPEN_BOUND, OPEN_BOUND)
