"""A small expression language for hyperreal quantities.

Grammar (whitespace-insensitive)::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := '-' factor | atom ('^' int)?
    atom   := number | symbol | 'exp' '(' expr ')' | '(' expr ')'
    int    := '-'? digits

Unary minus binds looser than ``^``, so ``-a^2`` is ``-(a^2)``.  Decimal
literals are exact (``0.25`` is ``1/4``) and an integer literal divided by
an integer literal folds into a single rational literal, so ``3/4`` parses
to ``Number(3/4)``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Mapping, Union

from . import transfield as tf
from . import ultraproduct as up

__all__ = [
    "AST",
    "Binary",
    "Call",
    "ExprSyntaxError",
    "Neg",
    "Number",
    "Symbol",
    "UnboundSymbol",
    "eval_grid",
    "eval_seq",
    "evaluate",
    "free_symbols",
    "fully_parenthesized",
    "parse",
    "to_source",
]


class ExprSyntaxError(ValueError):
    """Parse failure at a byte ``offset`` with the set of tokens expected there."""

    def __init__(self, offset: int, expected, found: str):
        self.offset = offset
        self.expected = tuple(sorted(set(expected)))
        self.found = found
        super().__init__(
            f"syntax error at offset {offset}: expected one of "
            f"{', '.join(self.expected)}; found {found}"
        )


class UnboundSymbol(NameError):
    def __init__(self, name: str):
        super().__init__(f"unbound symbol: {name}")
        self.name = name


# -- AST ---------------------------------------------------------------------


@dataclass(frozen=True)
class Number:
    value: Fraction


@dataclass(frozen=True)
class Symbol:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "AST"


@dataclass(frozen=True)
class Binary:
    """``op`` is one of ``+ - * / ^``; for ``^`` the right side is an integer Number."""

    op: str
    left: "AST"
    right: "AST"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "AST"


AST = Union[Number, Symbol, Neg, Binary, Call]


# -- lexer -------------------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>\d+(?:\.\d*)?|\.\d+)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)

_ATOM_START = ("number", "symbol", "exp", "(", "-")


@dataclass(frozen=True)
class _Tok:
    kind: str  # number, name, op, end
    text: str
    offset: int  # byte offset


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ExprSyntaxError(
                _byte_offset(text, pos), _ATOM_START, repr(text[pos])
            )
        if m.lastgroup != "ws":
            toks.append(_Tok(m.lastgroup, m.group(), _byte_offset(text, pos)))
        pos = m.end()
    toks.append(_Tok("end", "", _byte_offset(text, len(text))))
    return toks


def _byte_offset(text: str, i: int) -> int:
    return len(text[:i].encode("utf-8"))


# -- parser ------------------------------------------------------------------


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def _is_op(self, *ops) -> bool:
        return self.tok.kind == "op" and self.tok.text in ops

    def _fail(self, expected):
        t = self.tok
        found = "end of input" if t.kind == "end" else repr(t.text)
        raise ExprSyntaxError(t.offset, expected, found)

    def _expect_op(self, op: str):
        if not self._is_op(op):
            self._fail([op])
        self.i += 1

    def parse(self) -> AST:
        node = self.expr()
        if self.tok.kind != "end":
            self._fail(["+", "-", "*", "/", "^", "end of input"])
        return node

    def expr(self) -> AST:
        node = self.term()
        while self._is_op("+", "-"):
            op = self.tok.text
            self.i += 1
            node = Binary(op, node, self.term())
        return node

    def term(self) -> AST:
        node, literal = self.factor()
        while self._is_op("*", "/"):
            op = self.tok.text
            self.i += 1
            rhs, rhs_literal = self.factor()
            if op == "/" and literal and rhs_literal and rhs.value != 0:
                node = Number(node.value / rhs.value)
            else:
                node = Binary(op, node, rhs)
            literal = False
        return node

    def factor(self) -> tuple[AST, bool]:
        """Returns the node and whether it is a bare integer literal."""
        if self._is_op("-"):
            self.i += 1
            operand, _ = self.factor()
            return Neg(operand), False
        node, literal = self.atom()
        if self._is_op("^"):
            self.i += 1
            node = Binary("^", node, Number(Fraction(self._int())))
            literal = False
        return node, literal

    def _int(self) -> int:
        sign = 1
        if self._is_op("-"):
            sign = -1
            self.i += 1
        t = self.tok
        if t.kind != "number" or not t.text.isdigit():
            self._fail(["int"] if sign < 0 else ["int", "-"])
        self.i += 1
        return sign * int(t.text)

    def atom(self) -> tuple[AST, bool]:
        t = self.tok
        if t.kind == "number":
            self.i += 1
            return Number(Fraction(t.text)), t.text.isdigit()
        if t.kind == "name":
            self.i += 1
            if t.text == "exp":
                self._expect_op("(")
                arg = self.expr()
                self._expect_op(")")
                return Call("exp", arg), False
            return Symbol(t.text), False
        if self._is_op("("):
            self.i += 1
            node = self.expr()
            self._expect_op(")")
            return node, False
        self._fail(_ATOM_START)


def parse(text: str) -> AST:
    return _Parser(text).parse()


# -- printers ----------------------------------------------------------------

# binding strength of each printed form
_SUM, _PRODUCT, _FACTOR, _POWER, _ATOM = 1, 2, 3, 4, 5


def _number_source(q: Fraction) -> tuple[str, int]:
    if q < 0:
        inner, _ = _number_source(-q)
        return f"(-{inner})", _ATOM
    if q.denominator == 1:
        return str(q.numerator), _ATOM
    return f"{q.numerator}/{q.denominator}", _PRODUCT


def _src(node: AST) -> tuple[str, int]:
    if isinstance(node, Number):
        return _number_source(node.value)
    if isinstance(node, Symbol):
        return node.name, _ATOM
    if isinstance(node, Call):
        return f"{node.func}({to_source(node.arg)})", _ATOM
    if isinstance(node, Neg):
        return "-" + _wrap(node.operand, _FACTOR), _FACTOR
    if node.op == "^":
        return f"{_wrap(node.left, _ATOM)}^{node.right.value.numerator}", _POWER
    if node.op in "+-":
        return f"{_wrap(node.left, _SUM)}{node.op}{_wrap(node.right, _PRODUCT)}", _SUM
    rhs = _wrap(node.right, _FACTOR)
    if node.op == "/" and _is_int_literal(node.left) and _is_int_literal(node.right):
        # keep int/int as a division rather than a folded rational literal
        rhs = f"({rhs})"
    return f"{_wrap(node.left, _PRODUCT)}{node.op}{rhs}", _PRODUCT


def _is_int_literal(node: AST) -> bool:
    return (
        isinstance(node, Number) and node.value >= 0 and node.value.denominator == 1
    )


def _wrap(node: AST, need: int) -> str:
    s, level = _src(node)
    return s if level >= need else f"({s})"


def to_source(node: AST) -> str:
    """Print with the fewest parentheses that preserve the tree."""
    return _src(node)[0]


def fully_parenthesized(node: AST) -> str:
    """Reference printer: every compound node wrapped in parentheses."""
    if isinstance(node, Number):
        q = node.value
        return str(q.numerator) if q.denominator == 1 else f"({q.numerator}/{q.denominator})"
    if isinstance(node, Symbol):
        return node.name
    if isinstance(node, Call):
        return f"{node.func}({fully_parenthesized(node.arg)})"
    if isinstance(node, Neg):
        return f"(-{fully_parenthesized(node.operand)})"
    if node.op == "^":
        return f"({fully_parenthesized(node.left)}^{node.right.value.numerator})"
    rhs = fully_parenthesized(node.right)
    if node.op == "/" and _is_int_literal(node.left) and _is_int_literal(node.right):
        rhs = f"({rhs})"
    return f"({fully_parenthesized(node.left)}{node.op}{rhs})"


def free_symbols(node: AST) -> set[str]:
    if isinstance(node, Symbol):
        return {node.name}
    if isinstance(node, Number):
        return set()
    if isinstance(node, (Neg, Call)):
        return free_symbols(node.operand if isinstance(node, Neg) else node.arg)
    return free_symbols(node.left) | free_symbols(node.right)


# -- evaluation --------------------------------------------------------------


def evaluate(
    node: AST,
    bindings: Mapping[str, object],
    const: Callable[[Fraction], object],
    exp: Callable[[object], object],
):
    """Structural evaluation in any field that supplies ``const`` and ``exp``."""

    def go(n):
        if isinstance(n, Number):
            return const(n.value)
        if isinstance(n, Symbol):
            try:
                return bindings[n.name]
            except KeyError:
                raise UnboundSymbol(n.name) from None
        if isinstance(n, Neg):
            return -go(n.operand)
        if isinstance(n, Call):
            return exp(go(n.arg))
        if n.op == "^":
            return tf.ipow(go(n.left), int(n.right.value), const(Fraction(1)))
        lhs, rhs = go(n.left), go(n.right)
        if n.op == "+":
            return lhs + rhs
        if n.op == "-":
            return lhs - rhs
        if n.op == "*":
            return lhs * rhs
        return lhs / rhs

    return go(node)


def eval_grid(
    node: AST | str, bindings: Mapping[str, tf.HyperValue] | None = None, K: int | None = None
) -> tf.HyperValue:
    if isinstance(node, str):
        node = parse(node)
    k = tf.default_truncation() if K is None else K
    env = {"eps": tf.epsilon(k)}
    env.update(bindings or {})
    return evaluate(node, env, lambda q: tf.HyperValue.const(q, k), tf.hv_exp)


def eval_seq(
    node: AST | str, bindings: Mapping[str, up.SeqHyper] | None = None
) -> up.SeqHyper:
    if isinstance(node, str):
        node = parse(node)
    env = {"eps": up.seq_reciprocal()}
    env.update(bindings or {})
    return evaluate(node, env, up.seq_constant, up.seq_exp)


_EPS_POWER = re.compile(r"^\s*eps_power\(\s*([^()]+?)\s*\)\s*$")


def bind(lets, mode: str = "grid", K: int | None = None) -> dict:
    """Evaluate ``name -> definition`` pairs in order, in one backend.

    A definition is expression text, an AST or a number, and may refer to
    ``eps`` and to earlier names.  ``eps_power(p)`` (``p`` rational) binds
    ``eps**p``, which the grammar's integer-only ``^`` cannot express.
    """
    if mode not in ("grid", "seq"):
        raise ValueError(f"unknown backend {mode!r}")
    items = lets.items() if isinstance(lets, Mapping) else lets
    env: dict = {}
    for name, definition in items:
        if isinstance(definition, str):
            m = _EPS_POWER.match(definition)
            if m:
                p = Fraction(m.group(1).replace(" ", ""))
                if mode == "grid":
                    env[name] = tf.HyperValue.monomial(a=p, K=K)
                else:
                    env[name] = up.seq_power(-p)
                continue
            definition = parse(definition)
        elif not isinstance(definition, (Number, Symbol, Neg, Binary, Call)):
            definition = Number(Fraction(definition))
        if mode == "grid":
            env[name] = eval_grid(definition, env, K)
        else:
            env[name] = eval_seq(definition, env)
    return env
