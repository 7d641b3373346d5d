from ..logic.ast import Abs, And, BinOp, Cmp, Const, Implies, Neg, Not, Or, Output, Var
from .model import PropertySpec

# 公式优先级
IMPLIES, OR, AND, ATOM = 1, 2, 3, 4
# 表达式优先级
SUM, PRODUCT, UNARY, PRIMARY = 1, 2, 3, 4


def format_number(value: float) -> str:
    """至少 9 位有效数字、且能精确还原的十进制表示"""
    value = float(value)
    for digits in range(9, 18):
        text = format(value, f"#.{digits}g")
        if float(text) == value:
            break
    # "#" 会在整数部分占满有效位时留下结尾的小数点
    return text + "0" if text.endswith(".") else text


def quote_string(value: str) -> str:
    escaped = value.replace("\\", "\\\\").replace('"', '\\"')
    return f'"{escaped}"'


def _expr_precedence(expr) -> int:
    if isinstance(expr, BinOp):
        return SUM if expr.op in "+-" else PRODUCT
    if isinstance(expr, Neg) or (isinstance(expr, Const) and format_number(expr.value).startswith("-")):
        return UNARY
    return PRIMARY


def format_expr(expr, minimum: int = SUM) -> str:
    """打印表达式，优先级低于 minimum 时加括号"""
    text = _format_expr(expr)
    return f"({text})" if _expr_precedence(expr) < minimum else text


def _format_expr(expr) -> str:
    if isinstance(expr, Const):
        return format_number(expr.value)
    if isinstance(expr, Var):
        return expr.name
    if isinstance(expr, Output):
        return f"{expr.network}({expr.var})[{expr.index}]"
    if isinstance(expr, Abs):
        return f"abs({format_expr(expr.arg)})"
    if isinstance(expr, Neg):
        # -(1.0) 与字面量 -1.0 是不同的树
        operand = f"({_format_expr(expr.arg)})" if isinstance(expr.arg, Const) else format_expr(expr.arg, UNARY)
        return f"-{operand}" if not operand.startswith("-") else f"- {operand}"
    own = _expr_precedence(expr)
    return f"{format_expr(expr.left, own)} {expr.op} {format_expr(expr.right, own + 1)}"


def _formula_precedence(formula) -> int:
    if isinstance(formula, Implies):
        return IMPLIES
    if isinstance(formula, Or):
        return OR
    if isinstance(formula, And):
        return AND
    return ATOM


def format_formula(formula, minimum: int = IMPLIES) -> str:
    """打印公式，使用最少的括号"""
    text = _format_formula(formula)
    return f"({text})" if _formula_precedence(formula) < minimum else text


def _format_formula(formula) -> str:
    if isinstance(formula, Cmp):
        return f"{format_expr(formula.left)} {formula.op} {format_expr(formula.right)}"
    if isinstance(formula, Not):
        return f"not {format_formula(formula.arg, ATOM)}"
    if isinstance(formula, Implies):
        return f"{format_formula(formula.left, IMPLIES + 1)} => {format_formula(formula.right, IMPLIES)}"
    own = _formula_precedence(formula)
    keyword = "and" if isinstance(formula, And) else "or"
    return f"{format_formula(formula.left, own)} {keyword} {format_formula(formula.right, own + 1)}"


def pretty_print(spec: PropertySpec) -> str:
    """规范格式输出：声明各占一行，量词行后接缩进的约束体"""
    lines = []
    declared = spec.declaration_order or [*spec.params, *spec.inputs, *spec.networks]
    for name in declared:
        if name in spec.params:
            lines.append(f"param {name} = {format_number(spec.params[name])}")
        elif name in spec.inputs:
            lines.append(f"input {name} = {quote_string(spec.inputs[name])}")
        elif name in spec.networks:
            lines.append(f"network {name}")
    lines.append(f"forall {spec.var} in ball({spec.anchor}, {format_expr(spec.radius)}) .")
    lines.append(f"  {format_formula(spec.body)}")
    return "\n".join(lines) + "\n"
