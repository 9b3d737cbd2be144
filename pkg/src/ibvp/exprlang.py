"""A small arithmetic expression language for problem configuration files.

Grammar (see ``docs/grammar.md``)::

    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary)*
    unary   := "-" unary | power
    power   := primary ("^" unary)?
    primary := NUMBER | NAME | NAME "(" expr ("," expr)* ")" | "(" expr ")"

``^`` is right-associative and binds tighter than unary minus, so ``-2^2``
evaluates to -4 and ``2^3^2`` to 512.  Evaluation works on Python floats and
on numpy arrays alike; domain violations raise :class:`EvalDomainError`
instead of producing NaN.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable, Mapping, Union

import numpy as np

from .errors import IBVPError

VARIABLES = frozenset({"t", "x", "y", "s"})
CONSTANTS = {"pi": math.pi, "e": math.e}
FUNCTIONS: dict[str, int] = {
    "exp": 1,
    "log": 1,
    "sin": 1,
    "cos": 1,
    "atan": 1,
    "sqrt": 1,
    "abs": 1,
    "min": 2,
    "max": 2,
    "pow": 2,
}


class ExprError(IBVPError):
    """Base class for parse and evaluation errors; carries a source position."""

    def __init__(self, message: str, source: str, pos: int):
        self.message = message
        self.source = source
        self.pos = pos
        self.line, self.col = _line_col(source, pos)
        super().__init__(f"{self.line}:{self.col}: {message}")


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, source: str, pos: int, expected: frozenset[str] = frozenset()):
        self.expected = expected
        if expected:
            message = f"{message}; expected one of {', '.join(sorted(expected))}"
        super().__init__(message, source, pos)


class UnknownIdentifierError(ExprSyntaxError):
    pass


class ArityError(ExprSyntaxError):
    pass


class UnboundVariableError(ExprError):
    pass


class EvalDomainError(ExprError):
    pass


def _line_col(source: str, pos: int) -> tuple[int, int]:
    line = source.count("\n", 0, pos) + 1
    start = source.rfind("\n", 0, pos) + 1
    return line, pos - start + 1


# -- AST -------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float
    span: tuple[int, int] = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Var:
    name: str
    span: tuple[int, int] = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Const:
    name: str
    span: tuple[int, int] = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Neg:
    operand: "Node"
    span: tuple[int, int] = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"
    span: tuple[int, int] = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple["Node", ...]
    span: tuple[int, int] = field(default=(0, 0), compare=False, repr=False)


Node = Union[Num, Var, Const, Neg, BinOp, Call]


# -- lexer -----------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str  # "number", "name", "op", "end"
    text: str
    pos: int


def _tokenize(source: str) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {source[pos]!r}", source, pos)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append(_Token(kind, m.group(), pos))
        pos = m.end()
    tokens.append(_Token("end", "", len(source)))
    return tokens


# -- parser ----------------------------------------------------------------

_PRIMARY_START = frozenset({"NUMBER", "NAME", "'('", "'-'"})


class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.tokens = _tokenize(source)
        self.i = 0

    @property
    def tok(self) -> _Token:
        return self.tokens[self.i]

    def advance(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, expected: frozenset[str]) -> ExprSyntaxError:
        tok = self.tok
        what = "end of input" if tok.kind == "end" else repr(tok.text)
        return ExprSyntaxError(f"unexpected {what}", self.source, tok.pos, expected)

    def expect_op(self, text: str) -> _Token:
        if self.tok.kind == "op" and self.tok.text == text:
            return self.advance()
        raise self.error(frozenset({repr(text)}))

    def parse(self) -> Node:
        node = self.expr()
        if self.tok.kind != "end":
            raise self.error(frozenset({"operator", "end of input"}))
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.advance().text
            right = self.term()
            node = BinOp(op, node, right, (node.span[0], right.span[1]))
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.advance().text
            right = self.unary()
            node = BinOp(op, node, right, (node.span[0], right.span[1]))
        return node

    def unary(self) -> Node:
        if self.tok.kind == "op" and self.tok.text == "-":
            start = self.advance().pos
            operand = self.unary()
            return Neg(operand, (start, operand.span[1]))
        return self.power()

    def power(self) -> Node:
        base = self.primary()
        if self.tok.kind == "op" and self.tok.text == "^":
            self.advance()
            exponent = self.unary()
            return BinOp("^", base, exponent, (base.span[0], exponent.span[1]))
        return base

    def primary(self) -> Node:
        tok = self.tok
        if tok.kind == "number":
            self.advance()
            return Num(float(tok.text), (tok.pos, tok.pos + len(tok.text)))
        if tok.kind == "name":
            self.advance()
            span = (tok.pos, tok.pos + len(tok.text))
            if self.tok.kind == "op" and self.tok.text == "(":
                return self.call(tok)
            if tok.text in VARIABLES:
                return Var(tok.text, span)
            if tok.text in CONSTANTS:
                return Const(tok.text, span)
            if tok.text in FUNCTIONS:
                raise ExprSyntaxError(f"function {tok.text!r} must be called", self.source, self.tok.pos, frozenset({"'('"}))
            raise UnknownIdentifierError(f"unknown identifier {tok.text!r}", self.source, tok.pos)
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            inner = self.expr()
            self.expect_op(")")
            return inner
        raise self.error(_PRIMARY_START)

    def call(self, name_tok: _Token) -> Node:
        name = name_tok.text
        if name not in FUNCTIONS:
            raise UnknownIdentifierError(f"unknown function {name!r}", self.source, name_tok.pos)
        self.expect_op("(")
        args = [self.expr()]
        while self.tok.kind == "op" and self.tok.text == ",":
            self.advance()
            args.append(self.expr())
        close = self.expect_op(")")
        if len(args) != FUNCTIONS[name]:
            raise ArityError(
                f"{name}() takes {FUNCTIONS[name]} argument(s), got {len(args)}", self.source, name_tok.pos
            )
        return Call(name, tuple(args), (name_tok.pos, close.pos + 1))


# -- public API ------------------------------------------------------------


@dataclass(frozen=True)
class Expr:
    """A parsed expression together with its source text."""

    source: str
    root: Node = field(compare=False)

    def __call__(self, **bindings):
        return evaluate(self, bindings)

    @property
    def free_variables(self) -> frozenset[str]:
        return _free_vars(self.root)

    def __str__(self) -> str:
        return pretty(self.root)


def parse(source: str) -> Expr:
    """Parse ``source`` into an :class:`Expr` or raise an :class:`ExprSyntaxError`."""
    return Expr(source, _Parser(source).parse())


def _free_vars(node: Node) -> frozenset[str]:
    if isinstance(node, Var):
        return frozenset({node.name})
    if isinstance(node, Neg):
        return _free_vars(node.operand)
    if isinstance(node, BinOp):
        return _free_vars(node.left) | _free_vars(node.right)
    if isinstance(node, Call):
        out = frozenset()
        for a in node.args:
            out |= _free_vars(a)
        return out
    return frozenset()


def evaluate(expr: Expr | Node, bindings: Mapping[str, float | np.ndarray], source: str | None = None):
    """Evaluate an expression under ``bindings``.

    Scalars in give a float out; any array binding broadcasts.
    """
    if isinstance(expr, Expr):
        source, root = expr.source, expr.root
    else:
        root = expr
        source = source or pretty(expr)
    with np.errstate(all="ignore"):
        out = _eval(root, bindings, source)
    if np.ndim(out) == 0:
        return float(out)
    return out


def _defined(v) -> bool:
    # Overflow to +-inf follows IEEE arithmetic; only NaN marks an undefined value.
    return not bool(np.any(np.isnan(v)))


def _domain(node: Node, source: str, what: str) -> EvalDomainError:
    return EvalDomainError(what, source, node.span[0])


def _eval(node: Node, env: Mapping, source: str):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Const):
        return CONSTANTS[node.name]
    if isinstance(node, Var):
        try:
            v = env[node.name]
        except KeyError:
            raise UnboundVariableError(f"variable {node.name!r} is not bound", source, node.span[0]) from None
        return np.asarray(v, dtype=float) if not isinstance(v, float) else v
    if isinstance(node, Neg):
        return -_eval(node.operand, env, source)
    if isinstance(node, BinOp):
        a = _eval(node.left, env, source)
        b = _eval(node.right, env, source)
        if node.op == "+":
            out = a + b
        elif node.op == "-":
            out = a - b
        elif node.op == "*":
            out = a * b
        elif node.op == "/":
            if np.any(np.asarray(b) == 0):
                raise _domain(node, source, "division by zero")
            out = np.divide(a, b)
        else:
            out = _binary_pow(node, a, b, source)
        if not _defined(out):
            raise _domain(node, source, f"undefined result of {node.op!r}")
        return out
    if isinstance(node, Call):
        args = [_eval(a, env, source) for a in node.args]
        return _CALLS[node.func](node, args, source)
    raise TypeError(f"not an expression node: {node!r}")


def _unary(fn: Callable, check: Callable | None = None, what: str = ""):
    def call(node, args, source):
        (a,) = args
        if check is not None and np.any(check(np.asarray(a))):
            raise _domain(node, source, what)
        out = fn(a)
        if not _defined(out):
            raise _domain(node, source, f"undefined result of {node.func}()")
        return out

    return call


def _binary_pow(node, a, b, source):
    base, expo = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    if np.any((base == 0) & (expo < 0)):
        raise _domain(node, source, "zero raised to a negative power")
    if np.any((base < 0) & (expo != np.round(expo))):
        raise _domain(node, source, "negative base with non-integer exponent")
    out = np.power(base, expo)
    if not _defined(out):
        raise _domain(node, source, "undefined power")
    return out


_CALLS = {
    "exp": _unary(np.exp),
    "log": _unary(np.log, lambda a: a <= 0, "log of a nonpositive number"),
    "sin": _unary(np.sin),
    "cos": _unary(np.cos),
    "atan": _unary(np.arctan),
    "sqrt": _unary(np.sqrt, lambda a: a < 0, "sqrt of a negative number"),
    "abs": _unary(np.abs),
    "min": lambda node, args, source: np.minimum(*args),
    "max": lambda node, args, source: np.maximum(*args),
    "pow": lambda node, args, source: _binary_pow(node, args[0], args[1], source),
}


# -- printer ---------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4, "atom": 5}


def _prec(node: Node) -> int:
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return _PREC["neg"]
    return _PREC["atom"]


def _wrap(node: Node, need: bool) -> str:
    s = pretty(node)
    return f"({s})" if need else s


def pretty(node: Node | Expr) -> str:
    """Render an AST with the minimal parentheses needed to reparse it identically."""
    if isinstance(node, Expr):
        node = node.root
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, (Var, Const)):
        return node.name
    if isinstance(node, Neg):
        return "-" + _wrap(node.operand, _prec(node.operand) < _PREC["neg"])
    if isinstance(node, Call):
        return f"{node.func}({', '.join(pretty(a) for a in node.args)})"
    p = _PREC[node.op]
    if node.op == "^":
        left = _wrap(node.left, _prec(node.left) <= p)
        right = _wrap(node.right, _prec(node.right) < _PREC["neg"])
        return f"{left}^{right}"
    left = _wrap(node.left, _prec(node.left) < p)
    right = _wrap(node.right, _prec(node.right) <= p)
    return f"{left} {node.op} {right}"
