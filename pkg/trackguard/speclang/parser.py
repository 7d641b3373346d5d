import functools
import logging
from typing import Dict, List, Optional

from ..errors import LogicEvaluationError, SpecError
from ..logic.ast import Abs, And, BinOp, Cmp, Const, Implies, Neg, Not, Or, Output, Var, constant_value
from .lexer import Token, tokenize
from .model import PropertySpec

logger = logging.getLogger(__name__)

OUTPUT_INDICES = (0, 1)
MAX_NESTING = 200


def _nested(method):
    """公式与表达式的递归入口，嵌套层数超过 MAX_NESTING 时报语法错误"""

    @functools.wraps(method)
    def wrapper(self, *args, **kwargs):
        if self.depth >= MAX_NESTING:
            raise self._error(f"嵌套超过 {MAX_NESTING} 层")
        self.depth += 1
        try:
            return method(self, *args, **kwargs)
        finally:
            self.depth -= 1

    return wrapper


class Parser:
    """属性语言的递归下降解析器

    优先级从低到高：=>（右结合）、or、and、not、比较；表达式中 + - 低于 * /，一元负号最高。
    """

    def __init__(self, text: str):
        self.tokens: List[Token] = tokenize(text)
        self.pos = 0
        self.params: Dict[str, float] = {}
        self.inputs: Dict[str, str] = {}
        self.networks: List[str] = []
        self.order: List[str] = []
        self.var: Optional[str] = None
        self.furthest: Optional[SpecError] = None
        self.depth = 0

    # 词法单元操作
    @property
    def current(self) -> Token:
        return self.tokens[self.pos]

    def _error(self, message: str, token: Optional[Token] = None, kind: str = "syntax") -> SpecError:
        token = token or self.current
        return SpecError(kind, message, token.line, token.column)

    def _describe(self, token: Token) -> str:
        return "文件结尾" if token.kind == "EOF" else repr(token.text)

    def expect(self, kind: str) -> Token:
        token = self.current
        if token.kind != kind:
            raise self._error(f"期望 {kind}，实际 {self._describe(token)}")
        self.pos += 1
        return token

    def accept(self, kind: str) -> Optional[Token]:
        if self.current.kind == kind:
            self.pos += 1
            return self.tokens[self.pos - 1]
        return None

    # 顶层
    def parse(self) -> PropertySpec:
        while self.current.kind in ("param", "input", "network"):
            self.declaration()
        self.expect("forall")
        var_token = self.expect("IDENT")
        self._declare(var_token)
        self.var = var_token.text
        self.expect("in")
        self.expect("ball")
        self.expect("(")
        anchor = self.expect("IDENT")
        if anchor.text not in self.inputs:
            raise self._error(f"球心 {anchor.text} 未声明为 input", anchor, kind="undeclared")
        self.expect(",")
        radius_token = self.current
        radius = self.expression()
        self.expect(")")
        try:
            radius_value = constant_value(radius, self.params)
        except LogicEvaluationError as e:
            raise self._error(f"球半径必须是常量表达式: {e}", radius_token) from None
        if radius_value < 0:
            raise self._error(f"球半径必须非负，实际 {radius_value}", radius_token)
        self.expect(".")
        body = self.formula()
        self.expect("EOF")
        return PropertySpec(
            params=dict(self.params),
            inputs=dict(self.inputs),
            networks=list(self.networks),
            var=self.var,
            anchor=anchor.text,
            radius=radius,
            body=body,
            declaration_order=list(self.order),
        )

    def _declare(self, token: Token) -> None:
        if token.text in self.order:
            raise self._error(f"重复声明: {token.text}", token, kind="duplicate")
        self.order.append(token.text)

    def declaration(self) -> None:
        keyword = self.current.kind
        self.pos += 1
        name = self.expect("IDENT")
        self._declare(name)
        if keyword == "network":
            self.networks.append(name.text)
            return
        self.expect("=")
        if keyword == "param":
            negative = self.accept("-") is not None
            number = self.expect("NUMBER")
            self.params[name.text] = -number.value if negative else number.value
        else:
            self.inputs[name.text] = self.expect("STRING").value

    # 公式
    @_nested
    def formula(self):
        left = self.clause()
        if self.accept("=>"):
            return Implies(left, self.formula())
        return left

    def clause(self):
        result = self.term()
        while self.accept("or"):
            result = Or(result, self.term())
        return result

    def term(self):
        result = self.atom_formula()
        while self.accept("and"):
            result = And(result, self.atom_formula())
        return result

    @_nested
    def atom_formula(self):
        if self.accept("not"):
            return Not(self.atom_formula())
        if self.current.kind == "(":
            # "(" 既可能包住公式，也可能是比较左侧的括号表达式
            start = self.pos
            try:
                self.pos += 1
                inner = self.formula()
                self.expect(")")
                if self.current.kind not in ("<=", "<", ">=", ">", "+", "-", "*", "/"):
                    return inner
            except SpecError as e:
                self._remember(e)
            self.pos = start
        return self.atom()

    def _remember(self, error: SpecError) -> None:
        if self.furthest is None or (error.line, error.column) > (self.furthest.line, self.furthest.column):
            self.furthest = error

    def atom(self):
        try:
            left = self.expression()
            op = self.current
            if op.kind not in ("<=", "<", ">=", ">"):
                raise self._error(f"期望比较运算符，实际 {self._describe(op)}")
            self.pos += 1
            result = Cmp(op.kind, left, self.expression())
            self.furthest = None
            return result
        except SpecError as e:
            if e.kind == "syntax" and self.furthest is not None and \
                    (self.furthest.line, self.furthest.column) > (e.line, e.column):
                raise self.furthest from None
            raise

    # 表达式
    @_nested
    def expression(self):
        result = self.product()
        while self.current.kind in ("+", "-"):
            op = self.current.kind
            self.pos += 1
            result = BinOp(op, result, self.product())
        return result

    def product(self):
        result = self.unary()
        while self.current.kind in ("*", "/"):
            op = self.current.kind
            self.pos += 1
            result = BinOp(op, result, self.unary())
        return result

    @_nested
    def unary(self):
        if self.accept("-"):
            if self.current.kind == "NUMBER":
                return Const(-self.expect("NUMBER").value)
            return Neg(self.unary())
        return self.primary()

    def primary(self):
        token = self.current
        if token.kind == "NUMBER":
            self.pos += 1
            return Const(token.value)
        if token.kind == "abs":
            self.pos += 1
            self.expect("(")
            arg = self.expression()
            self.expect(")")
            return Abs(arg)
        if token.kind == "(":
            self.pos += 1
            inner = self.expression()
            self.expect(")")
            return inner
        if token.kind == "IDENT":
            self.pos += 1
            if self.current.kind == "(":
                return self.output(token)
            if token.text not in self.params:
                raise self._error(f"{token.text} 未声明为 param", token, kind="undeclared")
            return Var(token.text)
        raise self._error(f"期望表达式，实际 {self._describe(token)}")

    def output(self, network: Token):
        if network.text not in self.networks:
            raise self._error(f"网络 {network.text} 未声明", network, kind="undeclared")
        self.expect("(")
        var = self.expect("IDENT")
        if var.text != self.var and var.text not in self.inputs:
            raise self._error(f"变量 {var.text} 未声明", var, kind="undeclared")
        self.expect(")")
        self.expect("[")
        index = self.current
        if not index.is_integer:
            raise self._error(f"输出下标必须是整数，实际 {self._describe(index)}")
        self.pos += 1
        if int(index.text) not in OUTPUT_INDICES:
            raise self._error(f"输出下标必须是 0 或 1，实际 {index.text}", index)
        self.expect("]")
        return Output(network.text, var.text, int(index.text))


def parse_property(text: str) -> PropertySpec:
    """解析属性文本

    Args:
        text: 属性文件内容

    Returns:
        PropertySpec: 解析结果

    Raises:
        SpecError: 词法、语法、未声明或重复声明错误，带行列位置
    """
    spec = Parser(text).parse()
    logger.debug(f"属性解析完成: forall {spec.var} in ball({spec.anchor}, ...)，参数 {list(spec.params)}")
    return spec
