import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Mapping, Optional

import numpy as np

from ..errors import LogicEvaluationError
from ..netcore import ForwardTrace, Gradients, Network
from .ast import (
    Abs,
    And,
    BinOp,
    Cmp,
    Const,
    Implies,
    Neg,
    Not,
    Or,
    Output,
    Var,
    match_robustness,
    output_variables,
)

logger = logging.getLogger(__name__)

DEFAULT_SHARPNESS = 1e-3

FUZZY = "fuzzy"
SURROGATE = "surrogate"
EXACT = "exact"


def split_env(env: Mapping[str, Any]):
    """把绑定拆成标量参数与图像两部分"""
    scalars, images = {}, {}
    for name, value in env.items():
        if np.ndim(value) == 0:
            scalars[name] = float(value)
        else:
            images[name] = value
    return scalars, images


def resolve_sharpness(sharpness: Optional[float], formula, env: Mapping[str, Any] = None) -> float:
    """原子比较的陡度 γ：显式给定优先，其次取鲁棒性阈值 delta，最后取 1e-3"""
    if sharpness is not None:
        if not sharpness > 0:
            raise LogicEvaluationError(f"陡度必须为正数，实际 {sharpness}")
        return float(sharpness)
    scalars, _ = split_env(env or {})
    delta = match_robustness(formula, scalars)
    return delta if delta is not None and delta > 0 else DEFAULT_SHARPNESS


class _Evaluation:
    """一次批量求值；节点值按 id 记忆，供反向复用"""

    def __init__(self, outputs: Dict[str, np.ndarray], scalars: Dict[str, float], images: Mapping[str, Any],
                 batch: int, sharpness: float, mode: str, abs_tiebreak: float):
        self.outputs = outputs
        self.scalars = scalars
        self.images = images
        self.batch = batch
        self.sharpness = sharpness
        self.mode = mode
        self.abs_tiebreak = abs_tiebreak
        self.values: Dict[int, np.ndarray] = {}
        self.output_grads = {var: np.zeros_like(out) for var, out in outputs.items()}

    def value(self, node) -> np.ndarray:
        key = id(node)
        if key not in self.values:
            self.values[key] = self._compute(node)
        return self.values[key]

    def _compute(self, node) -> np.ndarray:
        if isinstance(node, Const):
            return np.full(self.batch, float(node.value))
        if isinstance(node, Var):
            if node.name in self.scalars:
                return np.full(self.batch, self.scalars[node.name])
            if node.name in self.images or node.name in self.outputs:
                raise LogicEvaluationError(f"变量 {node.name} 是图像，不能作为标量使用")
            raise LogicEvaluationError(f"未绑定的变量: {node.name}")
        if isinstance(node, Output):
            if node.var not in self.outputs:
                raise LogicEvaluationError(f"未绑定的变量: {node.var}")
            out = self.outputs[node.var]
            if not 0 <= node.index < out.shape[1]:
                raise LogicEvaluationError(f"输出下标 {node.index} 越界（网络有 {out.shape[1]} 个输出）")
            return out[:, node.index]
        if isinstance(node, Abs):
            return np.abs(self.value(node.arg))
        if isinstance(node, Neg):
            return -self.value(node.arg)
        if isinstance(node, BinOp):
            left, right = self.value(node.left), self.value(node.right)
            if node.op == "+":
                return left + right
            if node.op == "-":
                return left - right
            if node.op == "*":
                return left * right
            if np.any(right == 0):
                raise LogicEvaluationError("表达式中出现除以零")
            return left / right
        if isinstance(node, Cmp):
            a, b, strict = node.oriented()
            a, b = self.value(a), self.value(b)
            if self.mode == EXACT:
                return a < b if strict else a <= b
            if self.mode == SURROGATE:
                return 1.0 - (a - b) / self.sharpness
            return np.clip(1.0 - np.maximum(a - b, 0.0) / self.sharpness, 0.0, 1.0)
        if isinstance(node, And):
            left, right = self.value(node.left), self.value(node.right)
            return left & right if self.mode == EXACT else np.minimum(left, right)
        if isinstance(node, Or):
            left, right = self.value(node.left), self.value(node.right)
            return left | right if self.mode == EXACT else np.maximum(left, right)
        if isinstance(node, Implies):
            left, right = self.value(node.left), self.value(node.right)
            if self.mode == EXACT:
                return ~left | right
            return np.where(left <= right, 1.0, right)
        if isinstance(node, Not):
            arg = self.value(node.arg)
            return ~arg if self.mode == EXACT else 1.0 - arg
        raise LogicEvaluationError(f"无法求值的节点: {type(node).__name__}")

    def backward(self, node, upstream: np.ndarray) -> None:
        """把 upstream（对节点值的梯度）传到网络输出上；min/max 相等时走第一个参数"""
        if not np.any(upstream):
            return
        if isinstance(node, Output):
            self.output_grads[node.var][:, node.index] += upstream
        elif isinstance(node, Abs):
            value = self.value(node.arg)
            slope = np.where(value == 0, self.abs_tiebreak, np.sign(value))
            self.backward(node.arg, upstream * slope)
        elif isinstance(node, Neg):
            self.backward(node.arg, -upstream)
        elif isinstance(node, BinOp):
            left, right = self.value(node.left), self.value(node.right)
            if node.op == "+":
                self.backward(node.left, upstream)
                self.backward(node.right, upstream)
            elif node.op == "-":
                self.backward(node.left, upstream)
                self.backward(node.right, -upstream)
            elif node.op == "*":
                self.backward(node.left, upstream * right)
                self.backward(node.right, upstream * left)
            else:
                self.backward(node.left, upstream / right)
                self.backward(node.right, -upstream * left / right ** 2)
        elif isinstance(node, Cmp):
            a_node, b_node, _ = node.oriented()
            slope = upstream / self.sharpness
            if self.mode == FUZZY:
                diff = self.value(a_node) - self.value(b_node)
                slope = np.where((diff > 0) & (diff < self.sharpness), slope, 0.0)
            self.backward(a_node, -slope)
            self.backward(b_node, slope)
        elif isinstance(node, (And, Or)):
            left, right = self.value(node.left), self.value(node.right)
            first = left <= right if isinstance(node, And) else left >= right
            self.backward(node.left, np.where(first, upstream, 0.0))
            self.backward(node.right, np.where(first, 0.0, upstream))
        elif isinstance(node, Implies):
            left, right = self.value(node.left), self.value(node.right)
            self.backward(node.right, np.where(left <= right, 0.0, upstream))
        elif isinstance(node, Not):
            self.backward(node.arg, -upstream)


@dataclass
class ConstraintEvaluation:
    """批量求值结果

    Attributes:
        truth: 每个样本的真值 (B,)；exact 模式下为布尔数组
        outputs: 每个网络输入变量的输出 (B, output_dim)
        output_grads: 单样本损失对各变量输出的梯度
        parameter_grads: 批量平均损失对网络参数的梯度（未请求时为 None）
        input_grads: 单样本损失对各图像变量的梯度
    """

    truth: np.ndarray
    outputs: Dict[str, np.ndarray]
    output_grads: Dict[str, np.ndarray] = field(default_factory=dict)
    parameter_grads: Optional[Gradients] = None
    input_grads: Dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def loss(self) -> np.ndarray:
        return 1.0 - self.truth


def evaluate_constraint(formula, env: Mapping[str, Any], net: Network, sharpness: Optional[float] = None, *,
                        mode: str = FUZZY, abs_tiebreak: float = 1.0, batched: bool = False,
                        fixed_outputs: Optional[Mapping[str, np.ndarray]] = None,
                        parameter_grads: bool = False, input_grads: bool = False) -> ConstraintEvaluation:
    """在一批绑定上求值约束，并按需计算损失 1 - truth 的梯度

    Args:
        formula: 约束公式
        env: 变量绑定；标量为参数，数组为图像（batched 时首维为批量）
        net: 网络，公式中任何网络名都指向它
        sharpness: 原子陡度 γ，None 时由 resolve_sharpness 决定
        mode: fuzzy（Gödel 语义）、surrogate（不截断的原子）或 exact（经典语义）
        abs_tiebreak: abs 在 0 处的次梯度
        batched: env 中的图像是否带批量维
        fixed_outputs: 已知且不求导的变量输出，如 PGD 中的锚点
        parameter_grads: 是否计算参数梯度
        input_grads: 是否计算对图像变量的梯度

    Raises:
        LogicEvaluationError: 未绑定变量、除以零或输出下标越界
    """
    scalars, images = split_env(env)
    fixed = {var: np.atleast_2d(np.asarray(out, dtype=np.float64)) for var, out in (fixed_outputs or {}).items()}
    traces: Dict[str, ForwardTrace] = {}
    outputs: Dict[str, np.ndarray] = {}
    for var in output_variables(formula):
        if var in fixed:
            outputs[var] = fixed[var]
            continue
        if var not in images:
            raise LogicEvaluationError(f"未绑定的变量: {var}")
        trace = ForwardTrace()
        batch = images[var] if batched else np.asarray(images[var])[None]
        outputs[var] = net.forward_batch(batch, trace)
        traces[var] = trace
    sizes = {out.shape[0] for out in outputs.values()}
    batch = max(sizes) if sizes else 1
    for var, out in outputs.items():
        if out.shape[0] != batch:
            outputs[var] = np.broadcast_to(out, (batch, out.shape[1])).copy()
    gamma = resolve_sharpness(sharpness, formula, scalars) if mode != EXACT else DEFAULT_SHARPNESS
    evaluation = _Evaluation(outputs, scalars, images, batch, gamma, mode, abs_tiebreak)
    truth = evaluation.value(formula)
    result = ConstraintEvaluation(truth=truth, outputs=outputs)
    if mode == EXACT or not (parameter_grads or input_grads):
        return result
    evaluation.backward(formula, -np.ones(batch))
    result.output_grads = evaluation.output_grads
    grads = Gradients.zeros_like(net) if parameter_grads else None
    for var, trace in traces.items():
        upstream = evaluation.output_grads[var]
        if trace.output.shape[0] != batch:
            upstream = upstream.sum(axis=0, keepdims=True)
        var_grads, image_grad = net.backward_trace(trace, upstream)
        if grads is not None:
            grads = grads + var_grads.scaled(1.0 / batch)
        if input_grads:
            result.input_grads[var] = image_grad if batched else image_grad[0]
    result.parameter_grads = grads
    return result


def eval_truth(formula, env: Mapping[str, Any], net: Network, sharpness: Optional[float] = None) -> float:
    """Gödel 模糊真值 ⟦formula⟧ ∈ [0, 1]"""
    return float(evaluate_constraint(formula, env, net, sharpness).truth[0])


def constraint_loss(formula, env: Mapping[str, Any], net: Network, sharpness: Optional[float] = None) -> float:
    """约束损失 1 - ⟦formula⟧ ∈ [0, 1]"""
    return 1.0 - eval_truth(formula, env, net, sharpness)


def eval_exact(formula, env: Mapping[str, Any], net: Network) -> bool:
    """经典二值语义，比较严格区分 < 与 <="""
    return bool(evaluate_constraint(formula, env, net, mode=EXACT).truth[0])
