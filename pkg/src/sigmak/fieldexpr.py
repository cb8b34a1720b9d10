"""A tiny closed-form expression language for coefficient fields.

Coefficient data (alpha, f, background tensor components, manufactured
solutions) enters the library as strings like "0.1*sin(x1)*cos(x2)". The
grammar has numbers, coordinate variables x1..xn, the unary functions
sin, cos, exp, log, abs, sqrt, the binary operators + - * / ^, and
parentheses. Precedence from tightest to loosest: ^, unary minus, * /,
+ -; the four arithmetic operators associate left, ^ associates right.

parse produces an immutable AST; evaluate runs it at a point in IEEE
doubles; eval_array runs it over numpy coordinate arrays with the same
domain checks, which is how grids are sampled. to_string pretty-prints
with minimal parentheses and is an exact inverse of parse on trees:
parse(to_string(t)) == t.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DomainError, ExprEvalError, ExprSyntaxError

__all__ = [
    "Const", "Var", "Unary", "Binary", "ExprAst",
    "parse", "evaluate", "eval_array", "to_string", "free_var_max",
    "FUNCTIONS",
]

FUNCTIONS = ("sin", "cos", "exp", "log", "abs", "sqrt")


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    index: int  # 1-based, as in the source text x1..xn


@dataclass(frozen=True)
class Unary:
    op: str  # 'neg' or a name from FUNCTIONS
    arg: "ExprAst"


@dataclass(frozen=True)
class Binary:
    op: str  # one of + - * / ^
    left: "ExprAst"
    right: "ExprAst"


ExprAst = Union[Const, Var, Unary, Binary]

_NUMBER = re.compile(r"(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")
_VAR = re.compile(r"x([1-9][0-9]*)\Z")


class _Tokenizer:
    def __init__(self, src: str):
        self.src = src
        self.pos = 0
        self._skip_ws()

    def _skip_ws(self):
        while self.pos < len(self.src) and self.src[self.pos].isspace():
            self.pos += 1

    def peek(self):
        """(kind, text, offset) of the next token without consuming it."""
        self._skip_ws()
        if self.pos >= len(self.src):
            return ("end", "", self.pos)
        ch = self.src[self.pos]
        if ch in "+-*/^()":
            return ("op", ch, self.pos)
        m = _NUMBER.match(self.src, self.pos)
        if m:
            return ("number", m.group(0), self.pos)
        m = _IDENT.match(self.src, self.pos)
        if m:
            return ("ident", m.group(0), self.pos)
        raise ExprSyntaxError(f"unexpected character {ch!r}", self.pos)

    def next(self):
        kind, text, offset = self.peek()
        self.pos = offset + len(text)
        return kind, text, offset


class _Parser:
    """Recursive descent for:

        sum     := product (('+'|'-') product)*
        product := unary (('*'|'/') unary)*
        unary   := '-' unary | power
        power   := atom ('^' unary)?
        atom    := number | name '(' sum ')' | var | '(' sum ')'
    """

    def __init__(self, src: str, n: int):
        self.toks = _Tokenizer(src)
        self.n = n

    def parse(self) -> ExprAst:
        node = self.sum()
        kind, text, offset = self.toks.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected {text!r}", offset)
        return node

    def sum(self) -> ExprAst:
        node = self.product()
        while True:
            kind, text, _ = self.toks.peek()
            if kind == "op" and text in "+-":
                self.toks.next()
                node = Binary(text, node, self.product())
            else:
                return node

    def product(self) -> ExprAst:
        node = self.unary()
        while True:
            kind, text, _ = self.toks.peek()
            if kind == "op" and text in "*/":
                self.toks.next()
                node = Binary(text, node, self.unary())
            else:
                return node

    def unary(self) -> ExprAst:
        kind, text, _ = self.toks.peek()
        if kind == "op" and text == "-":
            self.toks.next()
            return Unary("neg", self.unary())
        return self.power()

    def power(self) -> ExprAst:
        node = self.atom()
        kind, text, _ = self.toks.peek()
        if kind == "op" and text == "^":
            self.toks.next()
            # right-associative; exponent may carry its own unary minus
            return Binary("^", node, self.unary())
        return node

    def atom(self) -> ExprAst:
        kind, text, offset = self.toks.next()
        if kind == "number":
            value = float(text)
            if not np.isfinite(value):
                raise ExprSyntaxError(f"constant {text!r} overflows", offset)
            return Const(value)
        if kind == "op" and text == "(":
            node = self.sum()
            self.expect(")")
            return node
        if kind == "ident":
            if text in FUNCTIONS:
                self.expect("(")
                node = self.sum()
                self.expect(")")
                return Unary(text, node)
            m = _VAR.match(text)
            if m:
                index = int(m.group(1))
                if index > self.n:
                    raise ExprSyntaxError(
                        f"variable x{index} exceeds dimension n={self.n}", offset)
                return Var(index)
            raise ExprSyntaxError(f"unknown identifier {text!r}", offset)
        where = "end of input" if kind == "end" else repr(text)
        raise ExprSyntaxError(f"expected expression, found {where}", offset)

    def expect(self, ch: str):
        kind, text, offset = self.toks.peek()
        if kind == "op" and text == ch:
            self.toks.next()
            return
        found = "end of input" if kind == "end" else repr(text)
        raise ExprSyntaxError(f"expected {ch!r}, found {found}", offset)


def parse(src: str, n: int) -> ExprAst:
    """Parse an expression over x1..xn. Syntax errors carry the byte offset."""
    if not 1 <= n:
        raise DomainError(f"dimension must be positive, got {n}")
    return _Parser(src, n).parse()


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}


def _prec(node: ExprAst) -> int:
    if isinstance(node, (Const, Var)):
        return 5
    if isinstance(node, Unary):
        return 5 if node.op != "neg" else _PREC["neg"]
    return _PREC[node.op]


def to_string(node: ExprAst) -> str:
    """Render with the fewest parentheses that preserve the tree exactly."""
    if isinstance(node, Const):
        return repr(node.value)
    if isinstance(node, Var):
        return f"x{node.index}"
    if isinstance(node, Unary):
        if node.op == "neg":
            arg = to_string(node.arg)
            if _prec(node.arg) < _PREC["neg"]:
                arg = f"({arg})"
            return f"-{arg}"
        return f"{node.op}({to_string(node.arg)})"
    p = _PREC[node.op]
    left, right = to_string(node.left), to_string(node.right)
    if node.op == "^":
        # right-associative: parenthesize the left on ties
        if _prec(node.left) <= p:
            left = f"({left})"
        if _prec(node.right) < p:
            right = f"({right})"
    else:
        if _prec(node.left) < p:
            left = f"({left})"
        if _prec(node.right) <= p:
            right = f"({right})"
    return f"{left}{node.op}{right}"


def free_var_max(node: ExprAst) -> int:
    """Largest coordinate index appearing in the tree (0 if constant)."""
    if isinstance(node, Const):
        return 0
    if isinstance(node, Var):
        return node.index
    if isinstance(node, Unary):
        return free_var_max(node.arg)
    return max(free_var_max(node.left), free_var_max(node.right))


def eval_array(node: ExprAst, coords, shape=None) -> np.ndarray:
    """Evaluate over numpy coordinate arrays (broadcastable to `shape`).

    Domain violations (log of a nonpositive value, division by zero,
    negative base under a fractional power, overflow to non-finite) raise
    ExprEvalError naming the offending subexpression; when `shape` is given
    the first failing grid index is included.
    """
    coords = [np.asarray(c, dtype=float) for c in coords]

    def fail(message: str, sub: ExprAst, mask):
        index = None
        if shape is not None:
            full = np.broadcast_to(mask, shape)
            index = tuple(int(i) for i in np.argwhere(full)[0])
        raise ExprEvalError(message, to_string(sub), index)

    def walk(sub: ExprAst) -> np.ndarray:
        if isinstance(sub, Const):
            return np.float64(sub.value)
        if isinstance(sub, Var):
            if sub.index > len(coords):
                raise DomainError(
                    f"expression uses x{sub.index} but only {len(coords)} "
                    "coordinates were supplied")
            return coords[sub.index - 1]
        if isinstance(sub, Unary):
            a = walk(sub.arg)
            if sub.op == "neg":
                return -a
            if sub.op == "log":
                bad = a <= 0.0
                if np.any(bad):
                    fail("log of a non-positive value", sub, bad)
                out = np.log(a)
            elif sub.op == "sqrt":
                bad = a < 0.0
                if np.any(bad):
                    fail("square root of a negative value", sub, bad)
                out = np.sqrt(a)
            elif sub.op == "sin":
                out = np.sin(a)
            elif sub.op == "cos":
                out = np.cos(a)
            elif sub.op == "exp":
                out = np.exp(a)
            elif sub.op == "abs":
                out = np.abs(a)
            else:
                raise DomainError(f"unknown function {sub.op!r}")
            bad = ~np.isfinite(out)
            if np.any(bad):
                fail("non-finite result", sub, bad)
            return out
        a = walk(sub.left)
        b = walk(sub.right)
        if sub.op == "+":
            out = a + b
        elif sub.op == "-":
            out = a - b
        elif sub.op == "*":
            out = a * b
        elif sub.op == "/":
            bad = b == 0.0
            if np.any(bad):
                fail("division by zero", sub, bad)
            out = a / b
        elif sub.op == "^":
            nonint = b != np.floor(b)
            bad = (a < 0.0) & nonint
            if np.any(bad):
                fail("negative base under a fractional power", sub, bad)
            bad = (a == 0.0) & (b < 0.0)
            if np.any(bad):
                fail("zero base under a negative power", sub, bad)
            out = np.power(a, b)
        else:
            raise DomainError(f"unknown operator {sub.op!r}")
        bad = ~np.isfinite(out)
        if np.any(bad):
            fail("non-finite result (overflow)", sub, bad)
        return out

    return walk(node)


def evaluate(node: ExprAst, point) -> float:
    """Evaluate at a single point (sequence of coordinates)."""
    coords = [np.float64(p) for p in point]
    return float(eval_array(node, coords, shape=None))
