"""Scalar expression language: lexer, recursive-descent parser, evaluator.

Grammar::

    expr   = term {("+"|"-") term} ;
    term   = factor {("*"|"/") factor} ;
    factor = ["-"] power ;
    power  = atom ["^" ["-"] integer] ;
    atom   = number | ident | ident "(" expr ")" | "(" expr ")" ;

Evaluation is generic over the scalar algebra of :mod:`semiinv_sdk.jets`:
plain floats, :class:`~semiinv_sdk.jets.Jet2`, or jets of jets.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Any, Mapping, Sequence, Union

import numpy as np

from .errors import DomainError, ExpressionError, LexError, ParseError
from .jets import FUNCTIONS, Jet2, ipow, real_value

# ---- tokens ------------------------------------------------------------------

NUMBER = "NUM"
IDENT = "IDENT"
STRING = "STRING"
EOF = "EOF"

PUNCTUATION = {
    "+": "PLUS",
    "-": "MINUS",
    "*": "STAR",
    "/": "SLASH",
    "^": "CARET",
    "(": "LPAREN",
    ")": "RPAREN",
}
# extra punctuation accepted only in scenario files
SCENARIO_PUNCTUATION = {
    "{": "LBRACE",
    "}": "RBRACE",
    "[": "LBRACKET",
    "]": "RBRACKET",
    ",": "COMMA",
    "=": "EQUALS",
}

_NUMBER_RE = re.compile(r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")
_STRING_RE = re.compile(r'"[^"\n]*"')


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    position: int
    line: int
    column: int

    def __repr__(self) -> str:
        if self.kind in (NUMBER, IDENT, STRING):
            return f"{self.kind}({self.text})"
        return self.kind


def tokenize(source: str, scenario: bool = False) -> list[Token]:
    """Split ``source`` into tokens carrying offsets and line/column.

    With ``scenario=True`` the braces, brackets, commas, ``=``, quoted
    strings and ``#`` line comments of the scenario grammar are accepted too.
    """
    punctuation = dict(PUNCTUATION)
    if scenario:
        punctuation.update(SCENARIO_PUNCTUATION)

    tokens: list[Token] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(source):
        ch = source[pos]
        if ch == "\n":
            pos += 1
            line += 1
            line_start = pos
            continue
        if ch.isspace():
            pos += 1
            continue
        column = pos - line_start + 1
        if scenario and ch == "#":
            end = source.find("\n", pos)
            pos = len(source) if end == -1 else end
            continue
        if ch.isdigit() or (ch == "." and _NUMBER_RE.match(source, pos)):
            m = _NUMBER_RE.match(source, pos)
            tokens.append(Token(NUMBER, m.group(), pos, line, column))
            pos = m.end()
            continue
        if ch.isalpha() or ch == "_":
            m = _IDENT_RE.match(source, pos)
            tokens.append(Token(IDENT, m.group(), pos, line, column))
            pos = m.end()
            continue
        if scenario and ch == '"':
            m = _STRING_RE.match(source, pos)
            if m is None:
                raise LexError(pos, line, column, ch)
            tokens.append(Token(STRING, m.group()[1:-1], pos, line, column))
            pos = m.end()
            continue
        if ch in punctuation:
            tokens.append(Token(punctuation[ch], ch, pos, line, column))
            pos += 1
            continue
        raise LexError(pos, line, column, ch)
    tokens.append(Token(EOF, "", pos, line, pos - line_start + 1))
    return tokens


# ---- AST -----------------------------------------------------------------------


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: Expression


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * /
    left: Expression
    right: Expression


@dataclass(frozen=True)
class Pow:
    base: Expression
    exponent: int


@dataclass(frozen=True)
class Call:
    fn: str
    arg: Expression


Expression = Union[Const, Var, Neg, BinOp, Pow, Call]


# ---- parser --------------------------------------------------------------------


class Parser:
    """Recursive-descent parser over a token list.

    The scenario loader drives the same instance across a whole file, calling
    :meth:`expression` wherever the scenario grammar expects an EXPR.
    """

    def __init__(self, tokens: Sequence[Token]) -> None:
        self.tokens = list(tokens)
        self.index = 0

    @property
    def current(self) -> Token:
        return self.tokens[self.index]

    def advance(self) -> Token:
        tok = self.tokens[self.index]
        if tok.kind != EOF:
            self.index += 1
        return tok

    def check(self, kind: str, text: str | None = None) -> bool:
        tok = self.current
        return tok.kind == kind and (text is None or tok.text == text)

    def expect(self, kind: str, text: str | None = None, what: str | None = None) -> Token:
        if not self.check(kind, text):
            self.fail(what or (repr(text) if text else kind))
        return self.advance()

    def fail(self, expected: str) -> None:
        tok = self.current
        raise ParseError(tok.position, tok.line, tok.column, expected, tok.text or tok.kind)

    def expression(self) -> Expression:
        node = self._term()
        while self.current.kind in ("PLUS", "MINUS"):
            op = self.advance().text
            node = BinOp(op, node, self._term())
        return node

    def _term(self) -> Expression:
        node = self._factor()
        while self.current.kind in ("STAR", "SLASH"):
            op = self.advance().text
            node = BinOp(op, node, self._factor())
        return node

    def _factor(self) -> Expression:
        if self.check("MINUS"):
            self.advance()
            return Neg(self._power())
        return self._power()

    def _power(self) -> Expression:
        base = self._atom()
        if self.check("CARET"):
            self.advance()
            sign = 1
            if self.check("MINUS"):
                self.advance()
                sign = -1
            tok = self.current
            if tok.kind != NUMBER or not tok.text.isdigit():
                self.fail("integer exponent")
            self.advance()
            return Pow(base, sign * int(tok.text))
        return base

    def _atom(self) -> Expression:
        tok = self.current
        if tok.kind == NUMBER:
            self.advance()
            return Const(float(tok.text))
        if tok.kind == IDENT:
            self.advance()
            if self.check("LPAREN"):
                if tok.text not in FUNCTIONS:
                    raise ParseError(tok.position, tok.line, tok.column, "one of " + ", ".join(FUNCTIONS), tok.text)
                self.advance()
                arg = self.expression()
                self.expect("RPAREN", what="')'")
                return Call(tok.text, arg)
            return Var(tok.text)
        if tok.kind == "LPAREN":
            self.advance()
            node = self.expression()
            self.expect("RPAREN", what="')'")
            return node
        self.fail("expression")
        raise AssertionError("unreachable")


def parse(tokens: Sequence[Token] | str) -> Expression:
    """Parse a complete expression (a string is tokenized first)."""
    if isinstance(tokens, str):
        tokens = tokenize(tokens)
    parser = Parser(tokens)
    node = parser.expression()
    if not parser.check(EOF):
        parser.fail("end of expression")
    return node


# ---- printing ------------------------------------------------------------------


def to_source(node: Expression) -> str:
    """Render ``node`` so that ``parse(to_source(node)) == node``."""
    if isinstance(node, Const):
        return repr(float(node.value))
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Call):
        return f"{node.fn}({to_source(node.arg)})"
    if isinstance(node, Pow):
        base = to_source(node.base)
        if not isinstance(node.base, (Const, Var, Call)):
            base = f"({base})"
        return f"{base}^{node.exponent}"
    if isinstance(node, Neg):
        inner = to_source(node.arg)
        if not isinstance(node.arg, (Const, Var, Call, Pow)):
            inner = f"({inner})"
        return f"-{inner}"
    return f"({to_source(node.left)} {node.op} {to_source(node.right)})"


def free_variables(node: Expression) -> set[str]:
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, Const):
        return set()
    if isinstance(node, BinOp):
        return free_variables(node.left) | free_variables(node.right)
    if isinstance(node, Pow):
        return free_variables(node.base)
    return free_variables(node.arg)


# ---- evaluation ----------------------------------------------------------------


def eval(node: Expression, env: Mapping[str, Any]) -> Any:  # noqa: A001
    """Evaluate ``node`` over whatever scalar algebra ``env`` is bound in."""
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        try:
            return env[node.name]
        except KeyError:
            raise ExpressionError(f"unbound variable {node.name!r}") from None
    if isinstance(node, Neg):
        return -eval(node.arg, env)
    if isinstance(node, BinOp):
        left = eval(node.left, env)
        right = eval(node.right, env)
        if node.op == "+":
            return left + right
        if node.op == "-":
            return left - right
        if node.op == "*":
            return left * right
        if real_value(right) == 0.0:
            raise DomainError(node, 0.0)
        return left / right
    if isinstance(node, Pow):
        base = eval(node.base, env)
        try:
            return ipow(base, node.exponent)
        except DomainError as exc:
            raise DomainError(node, exc.value) from None
    if isinstance(node, Call):
        arg = eval(node.arg, env)
        try:
            return FUNCTIONS[node.fn](arg)
        except DomainError as exc:
            raise DomainError(node, exc.value) from None
    raise TypeError(f"not an expression node: {node!r}")


def jet_variables(point: Sequence[float], names: Sequence[str]) -> dict[str, Jet2]:
    """Environment seeding each coordinate as an active jet variable."""
    n = len(names)
    return {name: Jet2.variable(float(point[i]), i, n) for i, name in enumerate(names)}


def nested_variables(point: Sequence[float], names: Sequence[str]) -> dict[str, Jet2]:
    """Environment of jets whose values are themselves jets.

    Evaluating with this environment yields a jet ``r`` where ``r.value``,
    ``r.grad[i]`` and ``r.hess[i, j]`` are outer jets; differentiating those
    once more gives third (and, through the Hessians, fourth) derivatives.
    """
    n = len(names)
    env = {}
    for i, name in enumerate(names):
        grad = np.zeros(n)
        grad[i] = 1.0
        env[name] = Jet2(Jet2.variable(float(point[i]), i, n), grad, np.zeros((n, n)))
    return env


def eval_jet2(node: Expression, point: Sequence[float], names: Sequence[str]) -> Jet2:
    """Value, gradient and Hessian of ``node`` at ``point``."""
    n = len(names)
    result = eval(node, jet_variables(point, names))
    return result if isinstance(result, Jet2) else Jet2.constant(float(result), n)


def eval_jet2_nested(node: Expression, env: Mapping[str, Jet2]) -> Jet2:
    """Evaluate over jets-of-jets (see :func:`nested_variables`)."""
    result = eval(node, env)
    if isinstance(result, Jet2):
        return result
    n = len(env)
    return Jet2(Jet2.constant(float(result), n), np.zeros(n), np.zeros((n, n)))
