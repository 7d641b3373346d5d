from abc import ABC, abstractmethod
from typing import Any, ClassVar, Dict, Optional, Tuple

import numpy as np

from ...errors import ShapeMismatchError
from ...models import LayerKind, LayerSpec

Shape = Tuple[int, ...]

# 区间传播的外扩量：相对 1e-9，绝对 1e-12，覆盖 float64 运算次序不同带来的舍入差
_REL_SLACK = 1e-9
_ABS_SLACK = 1e-12


def widen(lower: np.ndarray, upper: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """把区间向外扩一点，保证与前向计算的舍入差异不会破坏可靠性"""
    tol = _REL_SLACK * (np.abs(lower) + np.abs(upper)) + _ABS_SLACK
    return lower - tol, upper + tol


class BaseLayer(ABC):
    """层基类

    所有层都应该继承此基类并实现前向、反向和区间传播。
    计算统一在 float64 上进行，批量维度在最前面；参数以自身 dtype 存储。
    """

    kind: ClassVar[LayerKind]

    def __init__(self, spec: LayerSpec):
        """初始化层

        Args:
            spec: 层配置对象
        """
        if spec.kind != self.kind:
            raise ValueError(f"{type(self).__name__} 不能使用 {spec.kind.name} 配置")
        self.spec = spec
        self.params: Dict[str, np.ndarray] = {}

    @property
    def trainable(self) -> bool:
        return bool(self.params)

    def parameter_count(self) -> int:
        return int(sum(p.size for p in self.params.values()))

    def parameter_shapes(self) -> Dict[str, Shape]:
        """参数名到形状的映射（无参数层为空）"""
        return {}

    def init_parameters(self, uniform: np.ndarray) -> None:
        """用 [0,1) 均匀随机数初始化参数，无参数层忽略"""

    def fan_in(self) -> int:
        return 0

    @abstractmethod
    def output_shape(self, input_shape: Shape) -> Shape:
        """由输入形状（不含批量维）推出输出形状

        Raises:
            ShapeMismatchError: 输入形状不适用于该层
        """

    @abstractmethod
    def forward(self, x: np.ndarray) -> Tuple[np.ndarray, Any]:
        """前向计算

        Args:
            x: 形状为 (N, *input_shape) 的 float64 数组

        Returns:
            输出数组与反向计算需要的缓存
        """

    @abstractmethod
    def backward(self, cache: Any, grad_out: np.ndarray) -> Tuple[np.ndarray, Dict[str, np.ndarray]]:
        """反向计算

        Args:
            cache: forward 返回的缓存
            grad_out: 对输出的梯度

        Returns:
            对输入的梯度，以及各参数的梯度（按批量求和）
        """

    @abstractmethod
    def propagate_interval(self, lower: np.ndarray, upper: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """区间传播：给出输入盒子上输出的可靠上下界"""

    def kink_pattern(self, cache: Any) -> Optional[np.ndarray]:
        """返回该层的分段选择（ReLU 掩码、池化位置），用于判断是否跨越不可导点"""
        return None

    def record_dims(self) -> Tuple[int, ...]:
        """NNW 记录中的维度字段"""
        return ()

    @classmethod
    def spec_from_record(cls, dims: Tuple[int, ...]) -> LayerSpec:
        """由 NNW 记录的维度字段还原层配置"""
        if dims:
            raise ValueError(f"{cls.kind.name} 不应带维度字段，实际 {len(dims)} 个")
        return LayerSpec(kind=cls.kind)

    def weights(self, name: str) -> np.ndarray:
        return self.params[name].astype(np.float64)

    def get_layer_info(self) -> Dict[str, Any]:
        """获取层的基本信息"""
        return {
            "kind": self.kind.name,
            "spec": self.spec.model_dump(exclude_none=True),
            "parameters": self.parameter_count(),
        }

    def _mismatch(self, expected: str, actual: Shape) -> ShapeMismatchError:
        return ShapeMismatchError(f"{self.kind.name} 期望输入 {expected}，实际 {actual}")


class ParametricLayer(BaseLayer):
    """带 weight/bias 的层：权重按 ±sqrt(1/fan_in) 均匀初始化，偏置为 0"""

    def __init__(self, spec: LayerSpec):
        super().__init__(spec)
        self.params = {
            name: np.zeros(shape, dtype=np.float32) for name, shape in self.parameter_shapes().items()
        }

    def init_parameters(self, uniform: np.ndarray) -> None:
        shape = self.params["weight"].shape
        bound = np.sqrt(1.0 / self.fan_in())
        self.params["weight"] = ((2.0 * uniform.reshape(shape) - 1.0) * bound).astype(np.float32)
        self.params["bias"] = np.zeros_like(self.params["bias"])

    @abstractmethod
    def input_influence(self, input_shape: Shape) -> np.ndarray:
        """每个输入坐标所连接的权重绝对值之和"""
