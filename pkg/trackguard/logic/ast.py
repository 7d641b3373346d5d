"""约束语法树

表达式节点：Const、Var、Abs、Neg、BinOp、Output；公式节点：Cmp、And、Or、Implies、Not。
节点是不可变的 dataclass，结构相等即 ==。
"""
from dataclasses import dataclass
from typing import Iterator, List, Mapping, Optional, Union

from ..errors import LogicEvaluationError

COMPARISONS = ("<=", "<", ">=", ">")
ARITHMETIC = ("+", "-", "*", "/")


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    """标量参数引用（epsilon、delta 等）"""

    name: str


@dataclass(frozen=True)
class Abs:
    arg: "Expr"


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"

    def __post_init__(self):
        if self.op not in ARITHMETIC:
            raise ValueError(f"未知运算符: {self.op}")


@dataclass(frozen=True)
class Output:
    """网络输出分量 network(var)[index]"""

    network: str
    var: str
    index: int


@dataclass(frozen=True)
class Cmp:
    op: str
    left: "Expr"
    right: "Expr"

    def __post_init__(self):
        if self.op not in COMPARISONS:
            raise ValueError(f"未知比较符: {self.op}")

    def oriented(self):
        """返回 (a, b, strict)，使原子等价于 a <= b 或 a < b"""
        if self.op in ("<=", "<"):
            return self.left, self.right, self.op == "<"
        return self.right, self.left, self.op == ">"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Not:
    arg: "Formula"


Expr = Union[Const, Var, Abs, Neg, BinOp, Output]
Formula = Union[Cmp, And, Or, Implies, Not]
Node = Union[Expr, Formula]

EXPRESSION_TYPES = (Const, Var, Abs, Neg, BinOp, Output)
FORMULA_TYPES = (Cmp, And, Or, Implies, Not)


def children(node: Node) -> List[Node]:
    if isinstance(node, (Abs, Neg, Not)):
        return [node.arg]
    if isinstance(node, (BinOp, Cmp, And, Or, Implies)):
        return [node.left, node.right]
    return []


def walk(node: Node) -> Iterator[Node]:
    """前序遍历"""
    stack = [node]
    while stack:
        current = stack.pop()
        yield current
        stack.extend(reversed(children(current)))


def output_variables(node: Node) -> List[str]:
    """公式中作为网络输入出现的变量，按首次出现顺序"""
    seen: List[str] = []
    for n in walk(node):
        if isinstance(n, Output) and n.var not in seen:
            seen.append(n.var)
    return seen


def substitute(node: Node, values: Mapping[str, float]) -> Node:
    """把已知参数替换为常量，其余节点原样重建"""
    if isinstance(node, Var):
        return Const(float(values[node.name])) if node.name in values else node
    if isinstance(node, (Abs, Neg, Not)):
        return type(node)(substitute(node.arg, values))
    if isinstance(node, (BinOp, Cmp)):
        return type(node)(node.op, substitute(node.left, values), substitute(node.right, values))
    if isinstance(node, (And, Or, Implies)):
        return type(node)(substitute(node.left, values), substitute(node.right, values))
    return node


def conjuncts(formula: Formula) -> List[Formula]:
    """展开 And 链"""
    if isinstance(formula, And):
        return conjuncts(formula.left) + conjuncts(formula.right)
    return [formula]


def conjunction(formulas: List[Formula]) -> Formula:
    """左结合地合取"""
    result = formulas[0]
    for f in formulas[1:]:
        result = And(result, f)
    return result


def robustness_body(delta: float, output_dim: int = 2, network: str = "N", var: str = "x", anchor: str = "x0") -> Formula:
    """局部鲁棒性约束：每个输出分量 |N(x)[i] - N(x0)[i]| <= delta"""
    return conjunction([
        Cmp("<=", Abs(BinOp("-", Output(network, var, i), Output(network, anchor, i))), Const(float(delta)))
        for i in range(output_dim)
    ])


def _constant(expr: Expr, params: Mapping[str, float]) -> Optional[float]:
    if isinstance(expr, Const):
        return expr.value
    if isinstance(expr, Var) and expr.name in params:
        return float(params[expr.name])
    return None


def match_robustness(formula: Formula, params: Mapping[str, float] = None) -> Optional[float]:
    """识别鲁棒性形状的公式并取出阈值

    公式须是若干 |N(x)[i] - N(x0)[i]| <= delta 原子的合取（两个变量次序任意，允许 >= 的反向写法），
    且所有原子的阈值相同。

    Returns:
        Optional[float]: 阈值 delta；形状不符时为 None
    """
    params = params or {}
    deltas = set()
    pairs = set()
    for atom in conjuncts(formula):
        if not isinstance(atom, Cmp):
            return None
        a, b, _ = atom.oriented()
        delta = _constant(b, params)
        if delta is None or not isinstance(a, Abs) or not isinstance(a.arg, BinOp) or a.arg.op != "-":
            return None
        left, right = a.arg.left, a.arg.right
        if not (isinstance(left, Output) and isinstance(right, Output)):
            return None
        if left.network != right.network or left.index != right.index or left.var == right.var:
            return None
        pairs.add(frozenset((left.var, right.var)))
        deltas.add(delta)
    if len(deltas) != 1 or len(pairs) != 1:
        return None
    return deltas.pop()


def constant_value(expr: Expr, params: Mapping[str, float]) -> float:
    """求不含网络输出的表达式的值

    Raises:
        LogicEvaluationError: 含网络输出、未知参数或除以零
    """
    if isinstance(expr, Const):
        return float(expr.value)
    if isinstance(expr, Var):
        if expr.name not in params:
            raise LogicEvaluationError(f"未绑定的变量: {expr.name}")
        return float(params[expr.name])
    if isinstance(expr, Abs):
        return abs(constant_value(expr.arg, params))
    if isinstance(expr, Neg):
        return -constant_value(expr.arg, params)
    if isinstance(expr, BinOp):
        left, right = constant_value(expr.left, params), constant_value(expr.right, params)
        if expr.op == "/" and right == 0:
            raise LogicEvaluationError("表达式中出现除以零")
        if expr.op == "+":
            return left + right
        if expr.op == "-":
            return left - right
        return left * right if expr.op == "*" else left / right
    raise LogicEvaluationError(f"{type(expr).__name__} 不是常量表达式")
