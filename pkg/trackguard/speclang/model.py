from dataclasses import dataclass, field
from typing import Dict, List

from ..logic.ast import Expr, Formula


@dataclass(frozen=True)
class PropertySpec:
    """解析后的属性：声明、L∞ 球与约束体

    Attributes:
        params: 标量参数，按声明顺序
        inputs: 输入图像变量 -> 路径
        networks: 声明的网络名
        var: 全称量化变量
        anchor: 球心输入变量
        radius: 球半径表达式
        body: 约束公式
    """

    params: Dict[str, float]
    inputs: Dict[str, str]
    networks: List[str]
    var: str
    anchor: str
    radius: Expr
    body: Formula
    declaration_order: List[str] = field(default_factory=list, compare=False)
