import math
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np

from ..errors import ShapeMismatchError, TrackGuardError
from ..logic.ast import Abs, And, BinOp, Cmp, Const, Implies, Neg, Not, Or, Output, Var
from ..netcore import Network


@dataclass
class IntervalTensor:
    """逐元素的上下界"""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        self.lower = np.asarray(self.lower)
        self.upper = np.asarray(self.upper)
        if self.lower.shape != self.upper.shape:
            raise ShapeMismatchError(f"上下界形状不一致: {self.lower.shape} vs {self.upper.shape}")
        if not (np.all(np.isfinite(self.lower)) and np.all(np.isfinite(self.upper))):
            raise TrackGuardError("区间界含非有限值", component="verify")
        if np.any(self.lower > self.upper):
            raise TrackGuardError("区间下界大于上界", component="verify")

    @classmethod
    def ball(cls, center: np.ndarray, epsilon: float) -> "IntervalTensor":
        """L∞ 球与 [0,1] 的交"""
        center = np.asarray(center, dtype=np.float64)
        return cls(np.clip(center - epsilon, 0.0, 1.0), np.clip(center + epsilon, 0.0, 1.0))

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.lower.shape

    @property
    def radius(self) -> np.ndarray:
        return (self.upper.astype(np.float64) - self.lower) / 2.0

    def contains(self, values: np.ndarray) -> bool:
        values = np.asarray(values)
        return bool(np.all(self.lower <= values) and np.all(values <= self.upper))

    def within(self, other: "IntervalTensor") -> bool:
        return bool(np.all(other.lower <= self.lower) and np.all(self.upper <= other.upper))

    def intersect(self, other: "IntervalTensor") -> "IntervalTensor":
        lower = np.maximum(self.lower, other.lower)
        return IntervalTensor(lower, np.maximum(np.minimum(self.upper, other.upper), lower))

    @staticmethod
    def hull(intervals: List["IntervalTensor"]) -> "IntervalTensor":
        return IntervalTensor(
            np.min([i.lower for i in intervals], axis=0),
            np.max([i.upper for i in intervals], axis=0),
        )


def _round_outward(lower: np.ndarray, upper: np.ndarray, dtype) -> Tuple[np.ndarray, np.ndarray]:
    """转换到输出 dtype，下界向下、上界向上取整，保证仍然包住 float64 的界"""
    lo = lower.astype(dtype)
    hi = upper.astype(dtype)
    lo = np.where(lo > lower, np.nextafter(lo, dtype.type(-np.inf)), lo)
    hi = np.where(hi < upper, np.nextafter(hi, dtype.type(np.inf)), hi)
    return lo, hi


def propagate_bounds(net: Network, box: IntervalTensor) -> IntervalTensor:
    """区间界传播

    仿射层用中心-半径形式，ReLU、池化、tanh 逐元素单调传播；结果包含盒内任意输入的网络输出。

    Args:
        net: 网络
        box: 输入盒，形状与网络单个输入相同

    Returns:
        IntervalTensor: 输出界（网络参数 dtype）
    """
    lower = net.as_batch(box.lower, batched=False)
    upper = net.as_batch(box.upper, batched=False)
    lo, hi = net.propagate_interval(lower, upper)
    lo, hi = _round_outward(lo[0], hi[0], np.dtype(net.dtype))
    return IntervalTensor(lo, np.maximum(hi, lo))


# 三值逻辑：True 必然成立，False 必然不成立，None 无法判定
def _interval(expr, outputs: Mapping[str, Tuple[np.ndarray, np.ndarray]], params: Mapping[str, float]):
    if isinstance(expr, Const):
        return expr.value, expr.value
    if isinstance(expr, Var):
        value = params[expr.name]
        return value, value
    if isinstance(expr, Output):
        lo, hi = outputs[expr.var]
        return float(lo[expr.index]), float(hi[expr.index])
    if isinstance(expr, Neg):
        lo, hi = _interval(expr.arg, outputs, params)
        return -hi, -lo
    if isinstance(expr, Abs):
        lo, hi = _interval(expr.arg, outputs, params)
        if lo >= 0:
            return lo, hi
        if hi <= 0:
            return -hi, -lo
        return 0.0, max(-lo, hi)
    a_lo, a_hi = _interval(expr.left, outputs, params)
    b_lo, b_hi = _interval(expr.right, outputs, params)
    if expr.op == "+":
        return a_lo + b_lo, a_hi + b_hi
    if expr.op == "-":
        return a_lo - b_hi, a_hi - b_lo
    if expr.op == "/":
        if b_lo <= 0 <= b_hi:
            return -math.inf, math.inf
        b_lo, b_hi = 1.0 / b_hi, 1.0 / b_lo
    products = [a_lo * b_lo, a_lo * b_hi, a_hi * b_lo, a_hi * b_hi]
    return min(products), max(products)


def formula_holds(formula, outputs: Mapping[str, Tuple[np.ndarray, np.ndarray]],
                  params: Optional[Mapping[str, float]] = None) -> Optional[bool]:
    """在网络输出区间上判定公式

    Args:
        formula: 约束公式
        outputs: 变量 -> (输出下界, 输出上界)
        params: 标量参数

    Returns:
        True 表示区间内处处成立，False 表示处处不成立，None 表示无法判定
    """
    params = params or {}
    if isinstance(formula, Cmp):
        a, b, strict = formula.oriented()
        a_lo, a_hi = _interval(a, outputs, params)
        b_lo, b_hi = _interval(b, outputs, params)
        if a_hi < b_lo or (not strict and a_hi <= b_lo):
            return True
        if a_lo > b_hi or (strict and a_lo >= b_hi):
            return False
        return None
    if isinstance(formula, Not):
        inner = formula_holds(formula.arg, outputs, params)
        return None if inner is None else not inner
    left = formula_holds(formula.left, outputs, params)
    right = formula_holds(formula.right, outputs, params)
    if isinstance(formula, And):
        if left is False or right is False:
            return False
        return True if left and right else None
    if isinstance(formula, Or):
        if left or right:
            return True
        return False if left is False and right is False else None
    if isinstance(formula, Implies):
        if left is False or right is True:
            return True
        return False if left is True and right is False else None
    raise TrackGuardError(f"无法判定的节点: {type(formula).__name__}", component="verify")


def denormalize_bounds(bounds: IntervalTensor, side: int = 112) -> List[Tuple[int, int]]:
    """把 [-1,1] 归一化输出界换算成像素坐标：下界向下取整、上界向上取整，截断到 [0, side]"""
    half = side / 2.0
    lower = np.clip(np.floor((bounds.lower.astype(np.float64) + 1.0) * half), 0, side)
    upper = np.clip(np.ceil((bounds.upper.astype(np.float64) + 1.0) * half), 0, side)
    return [(int(lo), int(hi)) for lo, hi in zip(lower, upper)]


def format_pixel_bounds(pixel_bounds: List[Tuple[int, int]]) -> str:
    return " ".join(f"[{lo} -- {hi}]" for lo, hi in pixel_bounds)
