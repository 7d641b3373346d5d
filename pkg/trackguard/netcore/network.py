import copy
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import ShapeMismatchError, TrackGuardError
from ..models import LayerKind, LayerSpec
from .layers import BaseLayer, ParametricLayer, layer_loader
from .rng import SplitMix64

logger = logging.getLogger(__name__)

CANONICAL_SIDE = 112
CANONICAL_PARAMETER_COUNTS = [10, 10, 200960, 32896, 258]


def canonical_layer_specs(side: int = CANONICAL_SIDE) -> List[LayerSpec]:
    """按网络结构表生成层配置

    两层 3x3 卷积（各接 ReLU 与 2x2 最大池化），三层全连接，最后接 tanh。
    side 为 112 时即标准网络；其他能被 4 整除的边长得到同构的缩小网络。

    Args:
        side: 输入图像边长

    Returns:
        List[LayerSpec]: 层配置列表
    """
    if side < 4 or side % 4:
        raise ShapeMismatchError(f"输入边长必须是 4 的倍数，实际 {side}")
    flat = (side // 4) ** 2
    conv = dict(kind=LayerKind.CONV2D, in_channels=1, out_channels=1, kernel_size=3, stride=1, padding=1)
    pool = dict(kind=LayerKind.MAXPOOL2D, kernel_size=2, stride=2)
    return [
        LayerSpec(**conv),
        LayerSpec(kind=LayerKind.RELU),
        LayerSpec(**pool),
        LayerSpec(**conv),
        LayerSpec(kind=LayerKind.RELU),
        LayerSpec(**pool),
        LayerSpec(kind=LayerKind.FLATTEN, in_features=flat),
        LayerSpec(kind=LayerKind.LINEAR, in_features=flat, out_features=256),
        LayerSpec(kind=LayerKind.RELU),
        LayerSpec(kind=LayerKind.LINEAR, in_features=256, out_features=128),
        LayerSpec(kind=LayerKind.RELU),
        LayerSpec(kind=LayerKind.LINEAR, in_features=128, out_features=2),
        LayerSpec(kind=LayerKind.TANH),
    ]


@dataclass
class Gradients:
    """参数梯度：与 Network.layers 一一对应，无参数层为空字典"""

    tensors: List[Dict[str, np.ndarray]]

    @classmethod
    def zeros_like(cls, net: "Network") -> "Gradients":
        return cls([{name: np.zeros(p.shape) for name, p in layer.params.items()} for layer in net.layers])

    def __iter__(self) -> Iterator[Tuple[int, str, np.ndarray]]:
        for index, grads in enumerate(self.tensors):
            for name, grad in grads.items():
                yield index, name, grad

    def scaled(self, factor: float) -> "Gradients":
        return Gradients([{n: g * factor for n, g in layer.items()} for layer in self.tensors])

    def __add__(self, other: "Gradients") -> "Gradients":
        return Gradients(
            [{n: g + o[n] for n, g in mine.items()} for mine, o in zip(self.tensors, other.tensors)]
        )


@dataclass
class ForwardTrace:
    """一次批量前向的缓存，供反向使用"""

    caches: List[Any] = field(default_factory=list)
    output: Optional[np.ndarray] = None


class Network:
    """层序列组成的回归网络

    参数以 float32（或 astype 指定的 dtype）存储，前向/反向/区间传播在 float64 上计算，
    对外返回的输出转换为参数 dtype。读取是无副作用的，可被多个线程共享。
    """

    def __init__(self, layers: Sequence[BaseLayer], input_shape: Tuple[int, ...]):
        """初始化网络并检查相邻层形状能否衔接

        Args:
            layers: 层实例序列
            input_shape: 单个样本的输入形状（不含批量维）
        """
        if not layers:
            raise ShapeMismatchError("网络至少需要一层")
        self.layers = list(layers)
        self.input_shape = tuple(int(d) for d in input_shape)
        self.layer_shapes = [self.input_shape]
        shape = self.input_shape
        for index, layer in enumerate(self.layers):
            try:
                shape = layer.output_shape(shape)
            except ShapeMismatchError as e:
                raise ShapeMismatchError(f"第 {index} 层 {layer.kind.name}: {e}") from None
            self.layer_shapes.append(shape)
        if len(shape) != 1:
            raise ShapeMismatchError(f"网络输出必须是向量，实际形状 {shape}")
        self.output_dim = shape[0]

    @property
    def dtype(self) -> np.dtype:
        for layer in self.layers:
            for p in layer.params.values():
                return p.dtype
        return np.dtype(np.float32)

    @property
    def input_side(self) -> int:
        return self.input_shape[-1]

    def parameter_counts(self) -> List[int]:
        """每个可训练层的参数个数"""
        return [layer.parameter_count() for layer in self.layers if layer.trainable]

    def parameters(self) -> Iterator[Tuple[int, str, np.ndarray]]:
        for index, layer in enumerate(self.layers):
            for name, param in layer.params.items():
                yield index, name, param

    def copy(self) -> "Network":
        return copy.deepcopy(self)

    def astype(self, dtype) -> "Network":
        """返回参数转换为指定 dtype 的副本（梯度检查使用 float64）"""
        clone = self.copy()
        for layer in clone.layers:
            layer.params = {n: p.astype(dtype) for n, p in layer.params.items()}
        return clone

    def last_parametric_index(self) -> int:
        return max(i for i, layer in enumerate(self.layers) if layer.trainable)

    def as_batch(self, inputs: np.ndarray, batched: bool = True) -> np.ndarray:
        """把输入整理成 (N, *input_shape) 的 float64 数组

        单通道网络也接受省略通道维的 (H, W) 图像。
        """
        x = np.asarray(inputs, dtype=np.float64)
        sample_ndim = x.ndim - 1 if batched else x.ndim
        sample_shape = x.shape[x.ndim - sample_ndim:]
        short = self.input_shape[1:] if len(self.input_shape) == 3 and self.input_shape[0] == 1 else None
        if tuple(sample_shape) != self.input_shape and tuple(sample_shape) != short:
            raise ShapeMismatchError(f"输入形状应为 {self.input_shape}，实际 {tuple(sample_shape)}")
        if not batched:
            x = x[None]
        return x.reshape((x.shape[0],) + self.input_shape)

    def forward_batch(self, inputs: np.ndarray, trace: Optional[ForwardTrace] = None) -> np.ndarray:
        """批量前向，返回 float64 的 (N, output_dim) 输出"""
        x = self.as_batch(inputs)
        for layer in self.layers:
            x, cache = layer.forward(x)
            if trace is not None:
                trace.caches.append(cache)
        if not np.all(np.isfinite(x)):
            raise TrackGuardError("前向计算产生了非有限值", component="netcore")
        if trace is not None:
            trace.output = x
        return x

    def backward_trace(self, trace: ForwardTrace, upstream: np.ndarray) -> Tuple[Gradients, np.ndarray]:
        """从前向缓存反向传播

        Args:
            trace: forward_batch 填写的缓存
            upstream: 对输出的梯度，形状 (N, output_dim)

        Returns:
            参数梯度（批量求和）与对输入的梯度 (N, *input_shape)
        """
        grad = np.asarray(upstream, dtype=np.float64)
        if grad.shape != trace.output.shape:
            raise ShapeMismatchError(f"上游梯度形状应为 {trace.output.shape}，实际 {grad.shape}")
        tensors: List[Dict[str, np.ndarray]] = [{} for _ in self.layers]
        for index in range(len(self.layers) - 1, -1, -1):
            grad, tensors[index] = self.layers[index].backward(trace.caches[index], grad)
        return Gradients(tensors), grad

    def forward(self, image: np.ndarray) -> np.ndarray:
        """单个样本前向，输出 dtype 与参数一致"""
        out = self.forward_batch(self.as_batch(image, batched=False))[0].astype(self.dtype)
        if self.layers[-1].kind == LayerKind.TANH:
            # 转换精度后仍在开区间 (-1, 1) 内
            bound = np.nextafter(self.dtype.type(1), self.dtype.type(0))
            out = np.clip(out, -bound, bound)
        return out

    def kink_patterns(self, image: np.ndarray) -> List[np.ndarray]:
        """ReLU 掩码与池化选择位置，用于判断扰动是否跨越不可导点"""
        trace = ForwardTrace()
        self.forward_batch(self.as_batch(image, batched=False), trace)
        patterns = []
        for layer, cache in zip(self.layers, trace.caches):
            pattern = layer.kink_pattern(cache)
            if pattern is not None:
                patterns.append(pattern)
        return patterns

    def propagate_interval(self, lower: np.ndarray, upper: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """批量区间传播，返回 float64 上下界 (N, output_dim)"""
        lo, hi = self.as_batch(lower), self.as_batch(upper)
        for layer in self.layers:
            lo, hi = layer.propagate_interval(lo, hi)
        return lo, hi

    def input_influence(self) -> np.ndarray:
        """每个输入坐标连接到第一个带参数层的权重绝对值之和"""
        for index, layer in enumerate(self.layers):
            if isinstance(layer, ParametricLayer):
                influence = layer.input_influence(self.layer_shapes[index])
                return influence.reshape(self.input_shape)
        return np.ones(self.input_shape)

    def get_network_info(self) -> Dict[str, Any]:
        """获取网络结构信息"""
        return {
            "input_shape": list(self.input_shape),
            "output_dim": self.output_dim,
            "layers": [layer.get_layer_info() for layer in self.layers],
            "parameters": sum(self.parameter_counts()),
        }


def build_network(specs: Sequence[LayerSpec], input_shape: Tuple[int, ...], seed: Optional[int] = None) -> Network:
    """按层配置构造网络

    Args:
        specs: 层配置
        input_shape: 单个样本的输入形状
        seed: 给定时按 splitmix64 流初始化权重，否则参数全为 0

    Returns:
        Network: 网络实例
    """
    net = Network([layer_loader.build(spec) for spec in specs], input_shape)
    if seed is not None:
        stream = SplitMix64(seed)
        for layer in net.layers:
            if layer.trainable:
                layer.init_parameters(stream.uniform(layer.params["weight"].size))
    return net


def init_network(seed: int, side: int = CANONICAL_SIDE) -> Network:
    """构造按结构表初始化的网络

    Args:
        seed: 64 位随机种子，同一种子得到逐位相同的参数
        side: 输入边长，默认 112

    Returns:
        Network: 网络实例
    """
    net = build_network(canonical_layer_specs(side), (1, side, side), seed=seed)
    logger.debug(f"初始化网络 side={side} seed={seed} 参数={net.parameter_counts()}")
    return net


def forward(net: Network, image: np.ndarray) -> np.ndarray:
    """单张图像前向：返回 output_dim 个分量"""
    return net.forward(image)


def backward(net: Network, image: np.ndarray, upstream_grad: np.ndarray) -> Gradients:
    """计算 upstream_grad · N(image) 对每个参数的梯度"""
    trace = ForwardTrace()
    net.forward_batch(net.as_batch(image, batched=False), trace)
    upstream = np.asarray(upstream_grad, dtype=np.float64)
    if upstream.shape != (net.output_dim,):
        raise ShapeMismatchError(f"上游梯度形状应为 ({net.output_dim},)，实际 {upstream.shape}")
    grads, _ = net.backward_trace(trace, upstream[None])
    return grads


def input_gradient(net: Network, image: np.ndarray, upstream_grad: np.ndarray) -> np.ndarray:
    """计算 upstream_grad · N(image) 对输入的梯度"""
    trace = ForwardTrace()
    net.forward_batch(net.as_batch(image, batched=False), trace)
    _, grad = net.backward_trace(trace, np.asarray(upstream_grad, dtype=np.float64)[None])
    return grad[0]
