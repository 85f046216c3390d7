"""Rate expressions: a tiny arithmetic language over parameters and counts.

Grammar::

    Expr   := Term (('+' | '-') Term)*
    Term   := Factor (('*' | '/') Factor)*
    Factor := number | ident | 'W_' ident | 'N' | '(' Expr ')'

``W_X`` is the count of compartment ``X``, ``N`` the population size and any
other identifier a model parameter.  Trees are frozen dataclasses, so two
models built from the same text compare equal.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Mapping, Sequence, Union

import numpy as np

from .errors import RateExprSyntaxError, UnknownIdentifierError


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Param:
    name: str


@dataclass(frozen=True)
class Count:
    name: str
    index: int


@dataclass(frozen=True)
class PopSize:
    pass


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "RateExpr"
    right: "RateExpr"


RateExpr = Union[Num, Param, Count, PopSize, BinOp]

_PRECEDENCE = {"+": 1, "-": 1, "*": 2, "/": 2}


def evaluate(expr: RateExpr, theta: Mapping[str, float], counts: Sequence[int], N: int) -> float:
    """Reference tree-walking evaluation in float64."""
    if isinstance(expr, BinOp):
        a = evaluate(expr.left, theta, counts, N)
        b = evaluate(expr.right, theta, counts, N)
        if expr.op == "+":
            return a + b
        if expr.op == "-":
            return a - b
        if expr.op == "*":
            return a * b
        if b == 0.0:
            return math.nan
        return a / b
    if isinstance(expr, Num):
        return float(expr.value)
    if isinstance(expr, Param):
        return float(theta[expr.name])
    if isinstance(expr, Count):
        return float(counts[expr.index])
    if isinstance(expr, PopSize):
        return float(N)
    raise TypeError(f"not a rate expression: {expr!r}")


def identifiers(expr: RateExpr) -> tuple[set[str], set[str]]:
    """(parameter names, compartment names) referenced by ``expr``."""
    params: set[str] = set()
    comps: set[str] = set()

    def walk(e):
        if isinstance(e, BinOp):
            walk(e.left)
            walk(e.right)
        elif isinstance(e, Param):
            params.add(e.name)
        elif isinstance(e, Count):
            comps.add(e.name)

    walk(expr)
    return params, comps


def depends_on_state(expr: RateExpr) -> bool:
    if isinstance(expr, Count):
        return True
    if isinstance(expr, BinOp):
        return depends_on_state(expr.left) or depends_on_state(expr.right)
    return False


def _fmt_number(value: float) -> str:
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return repr(float(value))


def to_source(expr: RateExpr) -> str:
    """Render with the minimal parentheses that parse back to the same tree."""
    if isinstance(expr, Num):
        return _fmt_number(expr.value)
    if isinstance(expr, Param):
        return expr.name
    if isinstance(expr, Count):
        return f"W_{expr.name}"
    if isinstance(expr, PopSize):
        return "N"
    prec = _PRECEDENCE[expr.op]
    left = to_source(expr.left)
    if isinstance(expr.left, BinOp) and _PRECEDENCE[expr.left.op] < prec:
        left = f"({left})"
    right = to_source(expr.right)
    if isinstance(expr.right, BinOp) and _PRECEDENCE[expr.right.op] <= prec:
        right = f"({right})"
    return f"{left} {expr.op} {right}"


# ---------------------------------------------------------------- parsing

_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/()])"
    r")"
)


def tokenize(src: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    end = len(src.rstrip())
    while pos < end:
        m = _TOKEN.match(src, pos)
        if m is None or m.end() == pos:
            bad = src[pos:].lstrip()
            col = len(src) - len(bad)
            raise RateExprSyntaxError(f"unexpected character {bad[:1]!r}", col, src)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(src)))
    return tokens


class _Parser:
    def __init__(self, src, parameters, compartments):
        self.src = src
        self.tokens = tokenize(src)
        self.i = 0
        self.parameters = set(parameters)
        self.comp_index = {name: k for k, name in enumerate(compartments)}

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, tok, what="unexpected token"):
        shown = tok[1] if tok[0] != "end" else "end of input"
        raise RateExprSyntaxError(f"{what} {shown!r}", tok[2], self.src)

    def expr(self):
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.take()[1]
            node = BinOp(op, node, self.factor())
        return node

    def factor(self):
        tok = self.take()
        kind, text, pos = tok
        if kind == "num":
            return Num(float(text))
        if kind == "ident":
            if text == "N":
                return PopSize()
            if text.startswith("W_") and len(text) > 2:
                name = text[2:]
                if name not in self.comp_index:
                    raise UnknownIdentifierError(f"unknown compartment {name!r}", name, pos, self.src)
                return Count(name, self.comp_index[name])
            if text not in self.parameters:
                raise UnknownIdentifierError(f"unknown parameter {text!r}", text, pos, self.src)
            return Param(text)
        if kind == "op" and text == "(":
            node = self.expr()
            closing = self.take()
            if closing[1] != ")":
                self.fail(closing, "expected ')' but found")
            return node
        self.fail(tok)

    def parse(self):
        node = self.expr()
        if self.peek()[0] != "end":
            self.fail(self.peek())
        return node


def parse_rate_expr(src: str, parameters: Sequence[str], compartments: Sequence[str]) -> RateExpr:
    """Parse ``src`` against the given parameter and (ordered) compartment names."""
    return _Parser(src, parameters, compartments).parse()


# ------------------------------------------------------------ compilation

OP_LIT = 0
OP_PARAM = 1
OP_COUNT = 2
OP_POP = 3
OP_SLOT = 4
OP_ADD = 5
OP_SUB = 6
OP_MUL = 7
OP_DIV = 8

_BIN_CODES = {"+": OP_ADD, "-": OP_SUB, "*": OP_MUL, "/": OP_DIV}


@dataclass(frozen=True)
class Program:
    """Postfix programs for a list of expressions, padded into dense arrays.

    State-free subtrees of each rate are hoisted into *slot* programs that
    are evaluated once per simulation (their value only depends on the
    parameters and N); the per-event programs then read them with
    ``OP_SLOT``.  Evaluation order of every operation is unchanged, so the
    result is bit-identical to :func:`evaluate`.
    """

    code: np.ndarray        # (n_rates, max_len, 2) int64: opcode, argument
    length: np.ndarray      # (n_rates,) int64
    slot_code: np.ndarray   # (n_slots, max_slot_len, 2) int64
    slot_length: np.ndarray
    literals: np.ndarray    # float64
    max_stack: int


def compile_rates(exprs: Sequence[RateExpr], parameters: Sequence[str]) -> Program:
    param_index = {name: k for k, name in enumerate(parameters)}
    literals: list[float] = []
    slots: list[list[tuple[int, int]]] = []

    def lit(value):
        literals.append(float(value))
        return len(literals) - 1

    def emit_plain(e, out):
        if isinstance(e, BinOp):
            emit_plain(e.left, out)
            emit_plain(e.right, out)
            out.append((_BIN_CODES[e.op], 0))
        elif isinstance(e, Num):
            out.append((OP_LIT, lit(e.value)))
        elif isinstance(e, Param):
            out.append((OP_PARAM, param_index[e.name]))
        elif isinstance(e, Count):
            out.append((OP_COUNT, e.index))
        else:
            out.append((OP_POP, 0))

    def emit(e, out):
        if not depends_on_state(e):
            if isinstance(e, BinOp):
                body: list[tuple[int, int]] = []
                emit_plain(e, body)
                slots.append(body)
                out.append((OP_SLOT, len(slots) - 1))
            else:
                emit_plain(e, out)
            return
        if isinstance(e, BinOp):
            emit(e.left, out)
            emit(e.right, out)
            out.append((_BIN_CODES[e.op], 0))
        else:
            emit_plain(e, out)

    programs = []
    for e in exprs:
        body: list[tuple[int, int]] = []
        emit(e, body)
        programs.append(body)

    def pack(progs):
        width = max([len(p) for p in progs] + [1])
        code = np.zeros((len(progs), width, 2), dtype=np.int64)
        length = np.zeros(len(progs), dtype=np.int64)
        for k, p in enumerate(progs):
            length[k] = len(p)
            if p:
                code[k, : len(p)] = np.asarray(p, dtype=np.int64)
        return code, length

    def depth(prog):
        d = best = 0
        for op, _ in prog:
            d += 1 if op <= OP_SLOT else -1
            best = max(best, d)
        return best

    code, length = pack(programs)
    slot_code, slot_length = pack(slots) if slots else (np.zeros((0, 1, 2), np.int64), np.zeros(0, np.int64))
    return Program(
        code=code,
        length=length,
        slot_code=slot_code,
        slot_length=slot_length,
        literals=np.asarray(literals if literals else [0.0], dtype=np.float64),
        max_stack=max([depth(p) for p in programs + slots] + [1]),
    )
