from typing import Any, Dict, Tuple

import numpy as np

from ...models import LayerKind, LayerSpec
from .base import BaseLayer, ParametricLayer, Shape, widen
from .loader import layer_loader


@layer_loader.register
class Flatten(BaseLayer):
    """展平层：(C, H, W) -> (C*H*W,)"""

    kind = LayerKind.FLATTEN

    def output_shape(self, input_shape: Shape) -> Shape:
        size = int(np.prod(input_shape))
        if size != self.spec.in_features:
            raise self._mismatch(f"{self.spec.in_features} 个元素", input_shape)
        return (size,)

    def forward(self, x: np.ndarray) -> Tuple[np.ndarray, Any]:
        return x.reshape(x.shape[0], -1), x.shape

    def backward(self, cache: Any, grad_out: np.ndarray) -> Tuple[np.ndarray, Dict[str, np.ndarray]]:
        return grad_out.reshape(cache), {}

    def propagate_interval(self, lower: np.ndarray, upper: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return lower.reshape(lower.shape[0], -1), upper.reshape(upper.shape[0], -1)

    def record_dims(self) -> Tuple[int, ...]:
        return (self.spec.in_features,)

    @classmethod
    def spec_from_record(cls, dims: Tuple[int, ...]) -> LayerSpec:
        if len(dims) != 1:
            raise ValueError(f"需要 1 个维度，实际 {len(dims)} 个")
        return LayerSpec(kind=cls.kind, in_features=dims[0])


@layer_loader.register
class Linear(ParametricLayer):
    """全连接层：y = W x + b，weight 形状 (out_features, in_features)"""

    kind = LayerKind.LINEAR

    def parameter_shapes(self) -> Dict[str, Shape]:
        return {
            "weight": (self.spec.out_features, self.spec.in_features),
            "bias": (self.spec.out_features,),
        }

    def fan_in(self) -> int:
        return self.spec.in_features

    def output_shape(self, input_shape: Shape) -> Shape:
        if tuple(input_shape) != (self.spec.in_features,):
            raise self._mismatch(f"({self.spec.in_features},)", input_shape)
        return (self.spec.out_features,)

    def forward(self, x: np.ndarray) -> Tuple[np.ndarray, Any]:
        return x @ self.weights("weight").T + self.weights("bias"), x

    def backward(self, cache: Any, grad_out: np.ndarray) -> Tuple[np.ndarray, Dict[str, np.ndarray]]:
        grads = {"weight": grad_out.T @ cache, "bias": grad_out.sum(axis=0)}
        return grad_out @ self.weights("weight"), grads

    def propagate_interval(self, lower: np.ndarray, upper: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        weight = self.weights("weight")
        mid = (lower + upper) / 2.0 @ weight.T + self.weights("bias")
        rad = (upper - lower) / 2.0 @ np.abs(weight).T
        return widen(mid - rad, mid + rad)

    def input_influence(self, input_shape: Shape) -> np.ndarray:
        self.output_shape(input_shape)
        return np.abs(self.weights("weight")).sum(axis=0)

    def record_dims(self) -> Tuple[int, ...]:
        return (self.spec.out_features, self.spec.in_features)

    @classmethod
    def spec_from_record(cls, dims: Tuple[int, ...]) -> LayerSpec:
        if len(dims) != 2:
            raise ValueError(f"需要 2 个维度，实际 {len(dims)} 个")
        return LayerSpec(kind=cls.kind, out_features=dims[0], in_features=dims[1])
