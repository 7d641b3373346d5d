import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Mapping, Optional, Sequence, Union

import numpy as np

from ..data import preprocess_image, read_pnm
from ..errors import DatasetError, InstantiationError, LogicEvaluationError, ShapeMismatchError
from ..logic.ast import Formula, constant_value, match_robustness, substitute
from ..netcore import Network
from .model import PropertySpec

logger = logging.getLogger(__name__)


@dataclass
class VerificationProblem:
    """可直接求解的鲁棒性问题：锚点图像、L∞ 半径与代入参数后的约束体

    Attributes:
        delta: 约束体是鲁棒性形状时的输出阈值，否则为 None
    """

    anchor: np.ndarray
    epsilon: float
    body: Formula
    delta: Optional[float]
    var: str
    anchor_name: str
    params: Dict[str, float] = field(default_factory=dict)
    images: Dict[str, np.ndarray] = field(default_factory=dict)

    def env(self, x: np.ndarray) -> Dict[str, np.ndarray]:
        """量化变量取 x 时的绑定"""
        bindings = dict(self.images)
        bindings[self.anchor_name] = self.anchor
        bindings[self.var] = x
        return bindings

    def lower_box(self) -> np.ndarray:
        return np.maximum(self.anchor - self.epsilon, 0.0)

    def upper_box(self) -> np.ndarray:
        return np.minimum(self.anchor + self.epsilon, 1.0)


def resolve_image_path(path: str, search: Sequence[Path]) -> Path:
    """按顺序在候选目录中查找输入图像：原路径、目录/路径、目录/文件名"""
    candidate = Path(path)
    if candidate.is_absolute():
        if candidate.is_file():
            return candidate
        raise InstantiationError(f"输入图像不存在: {path}")
    for base in search:
        for option in (base / candidate, base / candidate.name):
            if option.is_file():
                return option
    raise InstantiationError(f"输入图像不存在: {path}（已查找 {', '.join(str(b) for b in search)}）")


def instantiate(spec: PropertySpec, net: Network, dataset_dir: Union[str, Path, None] = None,
                overrides: Optional[Mapping[str, float]] = None,
                base_dir: Union[str, Path, None] = None) -> VerificationProblem:
    """把属性实例化为针对给定网络的问题

    Args:
        spec: 解析后的属性
        net: 网络，输入图像按其边长预处理
        dataset_dir: 数据集目录，相对路径的输入图像也在这里查找
        overrides: 覆盖已声明参数的值（如命令行给出的 epsilon）
        base_dir: 属性文件所在目录，默认当前目录

    Returns:
        VerificationProblem: 问题实例

    Raises:
        InstantiationError: 图像缺失、形状不符或覆盖了未声明的参数
    """
    params = dict(spec.params)
    for name, value in (overrides or {}).items():
        if name not in params:
            raise InstantiationError(f"参数 {name} 未在属性中声明")
        params[name] = float(value)
    try:
        epsilon = constant_value(spec.radius, params)
    except LogicEvaluationError as e:
        raise InstantiationError(f"无法求出球半径: {e}") from None
    if epsilon < 0:
        raise InstantiationError(f"球半径必须非负，实际 {epsilon}")
    search = [Path(base_dir) if base_dir else Path.cwd()]
    if dataset_dir is not None:
        search.append(Path(dataset_dir))
    images = {}
    for name, path in spec.inputs.items():
        resolved = resolve_image_path(path, search)
        try:
            images[name] = preprocess_image(read_pnm(resolved), net.input_side)
        except (ShapeMismatchError, DatasetError) as e:
            raise InstantiationError(f"输入图像 {resolved} 无法用于该网络: {e}") from None
        logger.debug(f"输入 {name} <- {resolved}")
    if len(net.input_shape) == 3 and net.input_shape[0] != 1:
        raise InstantiationError(f"网络输入形状 {net.input_shape} 不是单通道灰度图像")
    body = substitute(spec.body, params)
    anchor = images.pop(spec.anchor)
    return VerificationProblem(
        anchor=anchor,
        epsilon=epsilon,
        body=body,
        delta=match_robustness(body),
        var=spec.var,
        anchor_name=spec.anchor,
        params=params,
        images=images,
    )
