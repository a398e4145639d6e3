"""System-definition expression DSL: parser, printer, and tape evaluation.

Grammar (whitespace insignificant)::

    expr    := term (('+'|'-') term)*
    term    := factor (('*'|'/') factor)*
    factor  := '-' factor | power
    power   := atom ('^' factor)?
    atom    := NUMBER | IDENT | '(' expr ')'
    NUMBER  := decimal literal with optional fraction and exponent
    IDENT   := letter (letter|digit)*

Binary +, -, *, / are left-associative; '^' is right-associative and binds
tighter than unary minus.  Identifiers of the form x1..xn are coordinates;
any other identifier must be a declared parameter.  The exponent of '^'
must fold to a numeric constant at parse time (it may itself be written as
an arithmetic expression of literals, e.g. ``x^-2`` or ``x^(3/2)``).

Parsed expressions are immutable and are compiled once into a flat
instruction tape executed by the active kernel backend; evaluation is
reentrant and thread-safe (scratch stacks are thread-local).
"""

from __future__ import annotations

import re
import threading
from dataclasses import dataclass
from typing import Mapping, Sequence, Union

import numpy as np

from . import _kernels
from ._kernels import ops
from .dual import Dual
from .errors import EvalDomainError, ParseError, UnboundParameterError

__all__ = [
    "Const",
    "Var",
    "Param",
    "Neg",
    "Bin",
    "Pow",
    "Node",
    "Expression",
    "parse",
    "evaluate",
    "eval_dual",
    "to_source",
]


# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    index: int  # 1-based, matches the x1..xn spelling


@dataclass(frozen=True)
class Param:
    name: str


@dataclass(frozen=True)
class Neg:
    child: "Node"


@dataclass(frozen=True)
class Bin:
    op: str  # one of + - * /
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Pow:
    base: "Node"
    exponent: float  # folded at parse time


Node = Union[Const, Var, Param, Neg, Bin, Pow]


# ---------------------------------------------------------------------------
# Lexer / parser

_TOKEN_RE = re.compile(
    r"\s*(?:"
    r"(?P<number>(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z][A-Za-z0-9]*)"
    r"|(?P<op>[-+*/^()])"
    r")"
)

_VAR_RE = re.compile(r"^x(\d+)$")


class _Tokens:
    def __init__(self, source: str):
        self.source = source
        self.items: list[tuple[str, str, int]] = []  # (kind, text, position)
        pos = 0
        while pos < len(source):
            m = _TOKEN_RE.match(source, pos)
            if m is None or m.end() == pos:
                stripped = source[pos:].lstrip()
                if not stripped:
                    break
                at = len(source) - len(stripped)
                raise ParseError(f"unexpected character {stripped[0]!r}", at)
            pos = m.end()
            kind = m.lastgroup
            self.items.append((kind, m.group(kind), m.start(kind)))
        self.i = 0

    def peek(self):
        if self.i < len(self.items):
            return self.items[self.i]
        return ("end", "", len(self.source))

    def next(self):
        tok = self.peek()
        self.i += 1
        return tok


class _Parser:
    def __init__(self, source: str, n: int, parameters):
        if not source or not source.strip():
            raise ParseError("empty expression", 0)
        self.toks = _Tokens(source)
        self.n = n
        self.parameters = frozenset(parameters or ())

    def parse(self) -> Node:
        node = self.expr()
        kind, text, pos = self.toks.peek()
        if kind != "end":
            raise ParseError(f"unexpected token {text!r}", pos)
        return node

    def expr(self) -> Node:
        node = self.term()
        while True:
            kind, text, _ = self.toks.peek()
            if kind == "op" and text in "+-":
                self.toks.next()
                node = Bin(text, node, self.term())
            else:
                return node

    def term(self) -> Node:
        node = self.factor()
        while True:
            kind, text, _ = self.toks.peek()
            if kind == "op" and text in "*/":
                self.toks.next()
                node = Bin(text, node, self.factor())
            else:
                return node

    def factor(self) -> Node:
        kind, text, _ = self.toks.peek()
        if kind == "op" and text == "-":
            self.toks.next()
            return Neg(self.factor())
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        kind, text, pos = self.toks.peek()
        if kind == "op" and text == "^":
            self.toks.next()
            exponent_node = self.factor()
            folded = _fold_constant(exponent_node)
            if folded is None:
                raise ParseError("exponent must fold to a numeric constant", pos)
            if not np.isfinite(folded):
                raise ParseError("exponent folds to a non-finite value", pos)
            return Pow(base, float(folded))
        return base

    def atom(self) -> Node:
        kind, text, pos = self.toks.next()
        if kind == "number":
            value = float(text)
            if not np.isfinite(value):
                raise ParseError("numeric literal out of range", pos)
            return Const(value)
        if kind == "ident":
            m = _VAR_RE.match(text)
            if m:
                index = int(m.group(1))
                if index < 1 or index > self.n:
                    raise ParseError(
                        f"variable index out of range: {text} (n={self.n})", pos
                    )
                return Var(index)
            if text in self.parameters:
                return Param(text)
            raise ParseError(f"unknown identifier {text!r}", pos)
        if kind == "op" and text == "(":
            node = self.expr()
            kind2, text2, pos2 = self.toks.next()
            if not (kind2 == "op" and text2 == ")"):
                raise ParseError("expected ')'", pos2)
            return node
        raise ParseError(f"expected a number, identifier or '(', got {text!r}", pos)


def _fold_constant(node: Node):
    """Value of a literal-only subtree, or None if it references x or params."""
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Neg):
        v = _fold_constant(node.child)
        return None if v is None else -v
    if isinstance(node, Bin):
        l = _fold_constant(node.left)
        r = _fold_constant(node.right)
        if l is None or r is None:
            return None
        if node.op == "+":
            return l + r
        if node.op == "-":
            return l - r
        if node.op == "*":
            return l * r
        if r == 0.0:
            return None
        return l / r
    if isinstance(node, Pow):
        b = _fold_constant(node.base)
        if b is None:
            return None
        try:
            return float(b) ** node.exponent
        except (OverflowError, ValueError, ZeroDivisionError):
            return None
    return None


# ---------------------------------------------------------------------------
# Printer

# Precedence levels used when re-emitting source: a child is parenthesized
# when its level is below the context's requirement.
_LEVEL_ADD, _LEVEL_MUL, _LEVEL_NEG, _LEVEL_POW, _LEVEL_ATOM = 1, 2, 3, 4, 5


def _format_number(value: float) -> str:
    if value == int(value) and abs(value) < 1e16:
        return str(int(value))
    return repr(value)


def _print(node: Node, need: int) -> str:
    if isinstance(node, Const):
        if node.value < 0.0 or (node.value == 0.0 and str(node.value)[0] == "-"):
            # negative constants only arise in programmatically built trees;
            # emit them in unary-minus form so the output re-parses
            return _print(Neg(Const(-node.value)), need)
        text, level = _format_number(node.value), _LEVEL_ATOM
    elif isinstance(node, Var):
        text, level = f"x{node.index}", _LEVEL_ATOM
    elif isinstance(node, Param):
        text, level = node.name, _LEVEL_ATOM
    elif isinstance(node, Neg):
        text, level = "-" + _print(node.child, _LEVEL_NEG), _LEVEL_NEG
    elif isinstance(node, Bin):
        if node.op in "+-":
            level = _LEVEL_ADD
            text = (
                _print(node.left, _LEVEL_ADD)
                + node.op
                + _print(node.right, _LEVEL_MUL)
            )
        else:
            level = _LEVEL_MUL
            text = (
                _print(node.left, _LEVEL_MUL)
                + node.op
                + _print(node.right, _LEVEL_NEG)
            )
    else:  # Pow
        level = _LEVEL_POW
        text = _print(node.base, _LEVEL_ATOM) + "^" + _format_number(node.exponent)
    if level < need:
        return "(" + text + ")"
    return text


def to_source(node_or_expression) -> str:
    """Render an AST (or Expression) back to DSL source.

    Printing a parsed tree and re-parsing it reproduces the tree exactly.
    """
    node = getattr(node_or_expression, "ast", node_or_expression)
    return _print(node, 0)


# ---------------------------------------------------------------------------
# Tape compilation

_tls = threading.local()


def _scratch(depth: int):
    cache = getattr(_tls, "cache", None)
    if cache is None or cache[0].shape[0] < depth:
        cache = (
            np.empty(max(depth, 16), dtype=np.float64),
            np.empty(max(depth, 16), dtype=np.float64),
            np.empty(2, dtype=np.float64),
            np.empty(2, dtype=np.int64),
        )
        _tls.cache = cache
    return cache


class Expression:
    """An immutable parsed expression bound to a dimension n.

    Evaluation runs on a flat postorder instruction tape through the active
    kernel backend.  ``param_names`` is the declared parameter set; the
    referenced subset (sorted) defines the parameter slot layout.
    """

    __slots__ = (
        "ast",
        "n",
        "param_names",
        "param_slots",
        "_code",
        "_arg",
        "_consts",
        "_nodes",
        "_stack_need",
    )

    def __init__(self, ast: Node, n: int, param_names=()):
        self.ast = ast
        self.n = int(n)
        self.param_names = frozenset(param_names)
        code: list[int] = []
        arg: list[int] = []
        consts: list[float] = []
        nodes: list[Node] = []
        referenced: set[str] = set()
        slots: dict[str, int] = {}

        def emit(op, a, node):
            code.append(op)
            arg.append(a)
            nodes.append(node)

        def walk(node: Node):
            if isinstance(node, Const):
                consts.append(float(node.value))
                emit(ops.OP_CONST, len(consts) - 1, node)
                return 1
            if isinstance(node, Var):
                if node.index < 1 or node.index > self.n:
                    raise ParseError(
                        f"variable index out of range: x{node.index}", 0
                    )
                emit(ops.OP_VAR, node.index - 1, node)
                return 1
            if isinstance(node, Param):
                referenced.add(node.name)
                if node.name not in slots:
                    slots[node.name] = -1  # assigned after the walk
                emit(ops.OP_PARAM, 0, node)
                return 1
            if isinstance(node, Neg):
                d = walk(node.child)
                emit(ops.OP_NEG, 0, node)
                return d
            if isinstance(node, Bin):
                dl = walk(node.left)
                dr = walk(node.right)
                op = {
                    "+": ops.OP_ADD,
                    "-": ops.OP_SUB,
                    "*": ops.OP_MUL,
                    "/": ops.OP_DIV,
                }[node.op]
                emit(op, 0, node)
                return max(dl, 1 + dr)
            if isinstance(node, Pow):
                d = walk(node.base)
                e = node.exponent
                if float(e).is_integer() and abs(e) <= ops.MAX_POWI:
                    emit(ops.OP_POWI, int(e), node)
                else:
                    consts.append(float(e))
                    emit(ops.OP_POWR, len(consts) - 1, node)
                return d
            raise TypeError(f"not an AST node: {node!r}")

        self._stack_need = walk(ast)
        self.param_slots = tuple(sorted(referenced))
        slot_index = {name: k for k, name in enumerate(self.param_slots)}
        # patch parameter instructions now that slot order is known
        for k, node in enumerate(nodes):
            if code[k] == ops.OP_PARAM:
                arg[k] = slot_index[node.name]
        unknown = referenced - self.param_names
        if unknown:
            raise ParseError(
                f"unknown identifier(s): {', '.join(sorted(unknown))}", 0
            )
        self._code = np.asarray(code, dtype=np.int32)
        self._arg = np.asarray(arg, dtype=np.int32)
        self._consts = np.asarray(consts, dtype=np.float64)
        self._nodes = nodes

    # -- parameter binding ---------------------------------------------------

    def bind(self, params: Mapping[str, float] | None) -> np.ndarray:
        """Build the parameter slot vector for this expression."""
        values = np.empty(len(self.param_slots), dtype=np.float64)
        for k, name in enumerate(self.param_slots):
            if params is None or name not in params:
                raise UnboundParameterError(f"parameter {name!r} is not bound")
            values[k] = float(params[name])
        return values

    # -- evaluation ----------------------------------------------------------

    def _raise(self, err) -> None:
        index = int(err[1])
        message = ops.ERR_MESSAGES.get(int(err[0]), "evaluation error")
        raise EvalDomainError(message, subexpression=to_source(self._nodes[index]))

    def eval_raw(self, x: np.ndarray, pvec: np.ndarray) -> float:
        """Fast path: x must already be a C-contiguous float64 array."""
        stack, _, _, err = _scratch(self._stack_need)
        v = _kernels.active.eval_value(
            self._code, self._arg, self._consts, x, pvec, stack, err
        )
        if err[0]:
            self._raise(err)
        return v

    def eval_dual_raw(self, x: np.ndarray, pvec: np.ndarray, axis0: int):
        """Fast path dual evaluation; axis0 is the 0-based seed index."""
        vstack, dstack, out, err = _scratch(self._stack_need)
        _kernels.active.eval_dual(
            self._code, self._arg, self._consts, x, pvec, axis0,
            vstack, dstack, out, err,
        )
        if err[0]:
            self._raise(err)
        return out[0], out[1]

    def evaluate(self, x: Sequence[float], params: Mapping[str, float] | None = None) -> float:
        x_arr = np.ascontiguousarray(x, dtype=np.float64)
        if x_arr.shape != (self.n,):
            raise ValueError(f"point has shape {x_arr.shape}, expected ({self.n},)")
        return float(self.eval_raw(x_arr, self.bind(params)))

    def eval_dual(
        self,
        x: Sequence[float],
        axis: int,
        params: Mapping[str, float] | None = None,
    ) -> Dual:
        """Evaluate value and exact partial d/dx_axis (axis is 1-based)."""
        x_arr = np.ascontiguousarray(x, dtype=np.float64)
        if x_arr.shape != (self.n,):
            raise ValueError(f"point has shape {x_arr.shape}, expected ({self.n},)")
        if axis < 1 or axis > self.n:
            raise ValueError(f"axis {axis} out of range 1..{self.n}")
        v, d = self.eval_dual_raw(x_arr, self.bind(params), axis - 1)
        return Dual(float(v), float(d))

    # -- misc ----------------------------------------------------------------

    def __eq__(self, other):
        return isinstance(other, Expression) and self.ast == other.ast and self.n == other.n

    def __hash__(self):
        return hash((self.n, to_source(self.ast)))

    def __repr__(self):
        return f"Expression({to_source(self.ast)!r}, n={self.n})"


# ---------------------------------------------------------------------------
# Module-level API


def parse(source: str, n: int, parameters=()) -> Expression:
    """Parse DSL source against dimension n and a set of parameter names."""
    ast = _Parser(source, n, parameters).parse()
    return Expression(ast, n, parameters)


def evaluate(expression: Expression, x, params=None) -> float:
    return expression.evaluate(x, params)


def eval_dual(expression: Expression, x, axis: int, params=None) -> Dual:
    return expression.eval_dual(x, axis, params)
