# symexpr/parser.py
"""
多項式表示式文法（遞迴下降）

    expr    ::= term { ("+" | "-") term }
    term    ::= unary { ("*" | "/") unary }
    unary   ::= ("+" | "-") unary | power
    power   ::= atom [ "^" integer ]
    atom    ::= number | name | "(" expr ")"
    number  ::= digits [ "." digits ] | digits "/" digits
    name    ::= 已宣告的座標名稱

除法只允許除以非零常數；"^" 只接受非負整數次方。
"""
import re
from fractions import Fraction
from typing import List, NamedTuple, Sequence

from errors import ExprSyntaxError, UnknownVariableError
from .expr import Expr

_TOKEN_RE = re.compile(r"\s*(?:(?P<num>\d+(?:\.\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^()]))")


class Token(NamedTuple):
    kind: str
    text: str
    pos: int


def tokenize(text: str) -> List[Token]:
    tokens: List[Token] = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN_RE.match(text, pos)
        if not m:
            # 跳過空白後回報真正出錯的位置
            bad = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ExprSyntaxError(f"非預期的字元 {text[bad]!r}", bad, text)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append(Token(kind, m.group(kind), start))
        pos = m.end()
    tokens.append(Token("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, variables: Sequence[str]):
        self.text = text
        self.variables = tuple(variables)
        self.tokens = tokenize(text)
        self.i = 0

    # ---- 小工具 ----
    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def advance(self) -> Token:
        t = self.tokens[self.i]
        self.i += 1
        return t

    def expect_op(self, op: str) -> None:
        if self.tok.kind != "op" or self.tok.text != op:
            raise ExprSyntaxError(f"預期 {op!r}，得到 {self.tok.text or '結尾'!r}", self.tok.pos, self.text)
        self.advance()

    def is_op(self, *ops: str) -> bool:
        return self.tok.kind == "op" and self.tok.text in ops

    # ---- 文法 ----
    def parse(self) -> Expr:
        if self.tok.kind == "end":
            raise ExprSyntaxError("空白的表示式", 0, self.text)
        result = self.expr()
        if self.tok.kind != "end":
            raise ExprSyntaxError(f"多餘的符號 {self.tok.text!r}", self.tok.pos, self.text)
        return result

    def expr(self) -> Expr:
        left = self.term()
        while self.is_op("+", "-"):
            op = self.advance().text
            right = self.term()
            left = left + right if op == "+" else left - right
        return left

    def term(self) -> Expr:
        left = self.unary()
        while self.is_op("*", "/"):
            op_tok = self.advance()
            right = self.unary()
            if op_tok.text == "*":
                left = left * right
            else:
                if not right.is_constant():
                    raise ExprSyntaxError("只能除以常數", op_tok.pos, self.text)
                if right.constant_term() == 0:
                    raise ExprSyntaxError("除以 0", op_tok.pos, self.text)
                left = left / right.constant_term()
        return left

    def unary(self) -> Expr:
        if self.is_op("-"):
            self.advance()
            return -self.unary()
        if self.is_op("+"):
            self.advance()
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.is_op("^"):
            self.advance()
            tok = self.tok
            if tok.kind != "num" or "." in tok.text:
                raise ExprSyntaxError("次方必須是非負整數", tok.pos, self.text)
            self.advance()
            base = base ** int(tok.text)
        return base

    def atom(self) -> Expr:
        tok = self.tok
        if tok.kind == "num":
            self.advance()
            return Expr.constant(self.variables, Fraction(tok.text))
        if tok.kind == "name":
            self.advance()
            if tok.text not in self.variables:
                raise UnknownVariableError(tok.text, tok.pos)
            return Expr.coordinate(self.variables, tok.text)
        if self.is_op("("):
            self.advance()
            inner = self.expr()
            self.expect_op(")")
            return inner
        raise ExprSyntaxError(f"非預期的符號 {tok.text or '結尾'!r}", tok.pos, self.text)


def parse_expr(text: str, variables: Sequence[str]) -> Expr:
    """
    把中序字串解析成 canonical Expr
    :param text: 例如 "-y/2"、"x^2*y - 1/3"
    :param variables: 座標名稱（順序即座標順序）
    """
    if not isinstance(text, str):
        text = str(text)
    return _Parser(text, variables).parse()
