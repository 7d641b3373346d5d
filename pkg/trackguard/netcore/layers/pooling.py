from typing import Any, Dict, Optional, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ...models import LayerKind, LayerSpec
from .base import BaseLayer, Shape
from .loader import layer_loader


@layer_loader.register
class MaxPool2D(BaseLayer):
    """最大池化层

    反向时梯度只流向窗口内（按行优先顺序）第一个最大值。
    """

    kind = LayerKind.MAXPOOL2D

    def output_shape(self, input_shape: Shape) -> Shape:
        k, st = self.spec.kernel_size, self.spec.stride
        if len(input_shape) != 3 or input_shape[1] < k or input_shape[2] < k:
            raise self._mismatch(f"(C, H>={k}, W>={k})", input_shape)
        c, h, w = input_shape
        return (c, (h - k) // st + 1, (w - k) // st + 1)

    def _flat_windows(self, x: np.ndarray) -> np.ndarray:
        k, st = self.spec.kernel_size, self.spec.stride
        windows = sliding_window_view(x, (k, k), axis=(2, 3))[:, :, ::st, ::st]
        return windows.reshape(windows.shape[:4] + (k * k,))

    def forward(self, x: np.ndarray) -> Tuple[np.ndarray, Any]:
        flat = self._flat_windows(x)
        # argmax 返回第一个最大值
        arg = flat.argmax(axis=-1)
        out = np.take_along_axis(flat, arg[..., None], axis=-1)[..., 0]
        return out, (arg, x.shape)

    def backward(self, cache: Any, grad_out: np.ndarray) -> Tuple[np.ndarray, Dict[str, np.ndarray]]:
        arg, input_shape = cache
        k, st = self.spec.kernel_size, self.spec.stride
        out_h, out_w = grad_out.shape[2:]
        grad_in = np.zeros(input_shape)
        for idx in range(k * k):
            i, j = divmod(idx, k)
            grad_in[:, :, i:i + st * (out_h - 1) + 1:st, j:j + st * (out_w - 1) + 1:st] += np.where(
                arg == idx, grad_out, 0.0
            )
        return grad_in, {}

    def propagate_interval(self, lower: np.ndarray, upper: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return self._flat_windows(lower).max(axis=-1), self._flat_windows(upper).max(axis=-1)

    def kink_pattern(self, cache: Any) -> Optional[np.ndarray]:
        return cache[0]

    def record_dims(self) -> Tuple[int, ...]:
        return (self.spec.kernel_size, self.spec.stride)

    @classmethod
    def spec_from_record(cls, dims: Tuple[int, ...]) -> LayerSpec:
        if len(dims) != 2:
            raise ValueError(f"需要 2 个维度，实际 {len(dims)} 个")
        return LayerSpec(kind=cls.kind, kernel_size=dims[0], stride=dims[1])
