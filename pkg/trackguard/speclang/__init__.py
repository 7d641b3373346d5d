# 属性规约语言包
# 词法、递归下降解析、规范打印与实例化
from .instantiate import VerificationProblem, instantiate, resolve_image_path
from .lexer import Token, tokenize
from .model import PropertySpec
from .parser import Parser, parse_property
from .printer import format_expr, format_formula, pretty_print

__all__ = [
    "Parser",
    "PropertySpec",
    "Token",
    "VerificationProblem",
    "format_expr",
    "format_formula",
    "instantiate",
    "parse_property",
    "pretty_print",
    "resolve_image_path",
    "tokenize",
]
