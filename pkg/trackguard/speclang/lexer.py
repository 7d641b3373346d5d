import re
from dataclasses import dataclass
from typing import List, Optional

from ..errors import SpecError

KEYWORDS = {"param", "input", "network", "forall", "in", "ball", "and", "or", "not", "abs"}
SYMBOLS = ["=>", "<=", ">=", "<", ">", "=", "(", ")", "[", "]", ",", ".", "+", "-", "*", "/"]

NUMBER_RE = re.compile(r"\d+(\.\d+)?([eE][+-]?\d+)?")
IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


@dataclass(frozen=True)
class Token:
    """词法单元

    kind 为 NUMBER、IDENT、STRING、EOF，关键字和符号的 kind 即其文本。
    """

    kind: str
    text: str
    line: int
    column: int
    value: Optional[object] = None

    @property
    def is_integer(self) -> bool:
        return self.kind == "NUMBER" and self.text.isdigit()


def tokenize(text: str) -> List[Token]:
    """把属性文件切分成词法单元，末尾总有一个 EOF

    '#' 到行尾为注释。

    Raises:
        SpecError: 非法字符、数字格式错误或字符串未闭合（kind=lexical）
    """
    tokens: List[Token] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        ch = text[pos]
        column = pos - line_start + 1
        if ch == "\n":
            pos, line, line_start = pos + 1, line + 1, pos + 1
            continue
        if ch.isspace():
            pos += 1
            continue
        if ch == "#":
            while pos < len(text) and text[pos] != "\n":
                pos += 1
            continue
        if ch.isdigit():
            match = NUMBER_RE.match(text, pos)
            end = match.end()
            if end < len(text) and (text[end].isalpha() or text[end] == "_"):
                raise SpecError("lexical", f"数字后紧跟非法字符 {text[end]!r}", line, end - line_start + 1)
            tokens.append(Token("NUMBER", match.group(), line, column, float(match.group())))
            pos = end
            continue
        if ch.isalpha() or ch == "_":
            word = IDENT_RE.match(text, pos).group()
            tokens.append(Token(word if word in KEYWORDS else "IDENT", word, line, column, word))
            pos += len(word)
            continue
        if ch == '"':
            value, pos = _read_string(text, pos, line, line_start)
            tokens.append(Token("STRING", value, line, column, value))
            continue
        for symbol in SYMBOLS:
            if text.startswith(symbol, pos):
                tokens.append(Token(symbol, symbol, line, column))
                pos += len(symbol)
                break
        else:
            raise SpecError("lexical", f"非法字符 {ch!r}", line, column)
    tokens.append(Token("EOF", "", line, pos - line_start + 1))
    return tokens


def _read_string(text: str, pos: int, line: int, line_start: int):
    chars = []
    start = pos
    pos += 1
    while pos < len(text):
        ch = text[pos]
        if ch == '"':
            return "".join(chars), pos + 1
        if ch == "\n":
            break
        if ch == "\\" and pos + 1 < len(text) and text[pos + 1] in '"\\':
            chars.append(text[pos + 1])
            pos += 2
            continue
        chars.append(ch)
        pos += 1
    raise SpecError("lexical", "字符串未闭合", line, start - line_start + 1)
