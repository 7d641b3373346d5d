from typing import Any, Dict, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ...models import LayerKind, LayerSpec
from .base import ParametricLayer, Shape, widen
from .loader import layer_loader


@layer_loader.register
class Conv2D(ParametricLayer):
    """二维卷积层

    weight 形状 (out_channels, in_channels, k, k)，bias 形状 (out_channels,)。
    im2col 通过滑动窗口视图实现，空间尺寸不固定。
    """

    kind = LayerKind.CONV2D

    def parameter_shapes(self) -> Dict[str, Shape]:
        s = self.spec
        return {
            "weight": (s.out_channels, s.in_channels, s.kernel_size, s.kernel_size),
            "bias": (s.out_channels,),
        }

    def fan_in(self) -> int:
        return self.spec.in_channels * self.spec.kernel_size ** 2

    def output_shape(self, input_shape: Shape) -> Shape:
        s = self.spec
        if len(input_shape) != 3 or input_shape[0] != s.in_channels:
            raise self._mismatch(f"({s.in_channels}, H, W)", input_shape)
        _, h, w = input_shape
        out_h = (h + 2 * s.padding - s.kernel_size) // s.stride + 1
        out_w = (w + 2 * s.padding - s.kernel_size) // s.stride + 1
        if out_h < 1 or out_w < 1:
            raise self._mismatch(f"空间尺寸 >= {s.kernel_size - 2 * s.padding}", input_shape)
        return (s.out_channels, out_h, out_w)

    def _windows(self, x: np.ndarray) -> np.ndarray:
        p, k, st = self.spec.padding, self.spec.kernel_size, self.spec.stride
        if p > 0:
            x = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p)))
        # (N, C, out_h, out_w, k, k)
        return sliding_window_view(x, (k, k), axis=(2, 3))[:, :, ::st, ::st]

    def _convolve(self, x: np.ndarray, weight: np.ndarray) -> np.ndarray:
        windows = self._windows(x)
        out = np.tensordot(windows, weight, axes=([1, 4, 5], [1, 2, 3]))
        return out.transpose(0, 3, 1, 2)

    def _input_gradient(self, grad_out: np.ndarray, weight: np.ndarray, input_shape: Shape) -> np.ndarray:
        n, c, h, w = input_shape
        p, k, st = self.spec.padding, self.spec.kernel_size, self.spec.stride
        out_h, out_w = grad_out.shape[2:]
        padded = np.zeros((n, c, h + 2 * p, w + 2 * p))
        for i in range(k):
            for j in range(k):
                padded[:, :, i:i + st * (out_h - 1) + 1:st, j:j + st * (out_w - 1) + 1:st] += np.einsum(
                    "nohw,oc->nchw", grad_out, weight[:, :, i, j]
                )
        return padded[:, :, p:p + h, p:p + w]

    def forward(self, x: np.ndarray) -> Tuple[np.ndarray, Any]:
        windows = self._windows(x)
        out = np.tensordot(windows, self.weights("weight"), axes=([1, 4, 5], [1, 2, 3]))
        out = out.transpose(0, 3, 1, 2) + self.weights("bias")[None, :, None, None]
        return out, (windows, x.shape)

    def backward(self, cache: Any, grad_out: np.ndarray) -> Tuple[np.ndarray, Dict[str, np.ndarray]]:
        windows, input_shape = cache
        grads = {
            "weight": np.tensordot(grad_out, windows, axes=([0, 2, 3], [0, 2, 3])),
            "bias": grad_out.sum(axis=(0, 2, 3)),
        }
        return self._input_gradient(grad_out, self.weights("weight"), input_shape), grads

    def propagate_interval(self, lower: np.ndarray, upper: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        center = (lower + upper) / 2.0
        radius = (upper - lower) / 2.0
        weight = self.weights("weight")
        mid = self._convolve(center, weight) + self.weights("bias")[None, :, None, None]
        rad = self._convolve(radius, np.abs(weight))
        return widen(mid - rad, mid + rad)

    def input_influence(self, input_shape: Shape) -> np.ndarray:
        out_shape = self.output_shape(input_shape)
        ones = np.ones((1,) + out_shape)
        return self._input_gradient(ones, np.abs(self.weights("weight")), (1,) + tuple(input_shape))[0]

    def record_dims(self) -> Tuple[int, ...]:
        s = self.spec
        return (s.out_channels, s.in_channels, s.kernel_size, s.kernel_size, s.stride, s.padding)

    @classmethod
    def spec_from_record(cls, dims: Tuple[int, ...]) -> LayerSpec:
        if len(dims) != 6:
            raise ValueError(f"需要 6 个维度，实际 {len(dims)} 个")
        out_c, in_c, kh, kw, stride, padding = dims
        if kh != kw:
            raise ValueError(f"只支持方形卷积核，实际 {kh}x{kw}")
        return LayerSpec(
            kind=cls.kind, in_channels=in_c, out_channels=out_c, kernel_size=kh, stride=stride, padding=padding
        )
