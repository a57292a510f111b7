"""Propositional expressions in the SMV operator subset.

Binding strength, tightest first: ``!``, ``=``/``!=`` (composed dialect
only), ``&``, ``|``, ``<->``, ``->``.  ``&``, ``|`` and ``<->`` associate to
the left, ``->`` to the right.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, Mapping, Union

from .errors import SyntaxFail


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    value: bool


@dataclass(frozen=True)
class Not:
    arg: "BoolExpr"


@dataclass(frozen=True)
class Bin:
    op: str
    left: "BoolExpr"
    right: "BoolExpr"


BoolExpr = Union[Var, Const, Not, Bin]

# dialect -> accepted binary operators
_DIALECT_OPS = {
    "smv": {"&", "|", "->", "<->"},
    "composed": {"&", "|", "->", "<->", "=", "!="},
    "tlsf": {"&", "|", "->", "<->", "&&", "||"},
}
_PREC = {"->": 1, "<->": 2, "|": 3, "||": 3, "&": 4, "&&": 4, "=": 5, "!=": 5}
_RIGHT = {"->"}
_CANON = {"&&": "&", "||": "|"}

_TOKEN = re.compile(r"\s*(<->|->|&&|\|\||!=|:=|[!&|()=~;:,{}\[\]]|[A-Za-z_][A-Za-z0-9_$#]*(?:\.[A-Za-z_][A-Za-z0-9_$#]*)*|\d+|\S)")


@dataclass(frozen=True)
class Token:
    text: str
    pos: int


def tokenize(text: str, start: int = 0) -> list[Token]:
    out = []
    i = 0
    while i < len(text):
        m = _TOKEN.match(text, i)
        if not m or not m.group(1):
            break
        out.append(Token(m.group(1), start + m.start(1)))
        i = m.end()
    return out


class _ExprParser:
    def __init__(self, tokens: list[Token], dialect: str, where: str):
        self.toks = tokens
        self.i = 0
        self.ops = _DIALECT_OPS[dialect]
        self.dialect = dialect
        self.where = where

    def peek(self) -> str | None:
        return self.toks[self.i].text if self.i < len(self.toks) else None

    def fail(self, msg: str):
        raise SyntaxFail(f"{self.where}: {msg}" if self.where else msg)

    def parse(self, min_prec: int = 1) -> BoolExpr:
        left = self.unary()
        while True:
            op = self.peek()
            if op in ("&&", "||", "~") and op not in self.ops:
                self.fail(f"operator {op} invalid, use {_CANON.get(op, '!')}")
            if op == "=" and "=" not in self.ops:
                self.fail("operator = invalid, use <->")
            if op not in self.ops or _PREC[op] < min_prec:
                return left
            self.i += 1
            nxt = _PREC[op] if op in _RIGHT else _PREC[op] + 1
            right = self.parse(nxt)
            left = Bin(_CANON.get(op, op), left, right)

    def unary(self) -> BoolExpr:
        t = self.peek()
        if t is None:
            self.fail("expression ends early")
        if t == "~":
            self.fail("operator ~ invalid, use !")
        if t == "!":
            self.i += 1
            return Not(self.unary())
        if t == "(":
            self.i += 1
            e = self.parse()
            if self.peek() != ")":
                self.fail("missing )")
            self.i += 1
            return e
        self.i += 1
        if t in ("TRUE", "FALSE"):
            return Const(t == "TRUE")
        if self.dialect == "tlsf" and t in ("true", "false"):
            return Const(t == "true")
        if t.isdigit():
            self.fail(f"integer constant {t} in boolean expression")
        if t in ("case", "esac", "if", "IF", "then", "else", "?"):
            self.fail("if-then-else and case expressions are not allowed")
        if re.fullmatch(r"[A-Za-z_][\w$#.]*", t):
            if "." in t and self.dialect != "composed":
                self.fail(f"qualified name {t} not allowed")
            if self.peek() == "(":
                self.fail(f"{t}(...) is not a boolean operator")
            return Var(t)
        self.fail(f"unexpected token {t!r}")


def parse_expr(tokens: list[Token] | str, dialect: str = "smv", where: str = "") -> BoolExpr:
    toks = tokenize(tokens) if isinstance(tokens, str) else tokens
    p = _ExprParser(toks, dialect, where)
    e = p.parse()
    if p.peek() is not None:
        p.fail(f"unexpected token {p.peek()!r}")
    return e


def names(e: BoolExpr) -> Iterator[str]:
    if isinstance(e, Var):
        yield e.name
    elif isinstance(e, Not):
        yield from names(e.arg)
    elif isinstance(e, Bin):
        yield from names(e.left)
        yield from names(e.right)


def evaluate(e: BoolExpr, env: Mapping[str, bool]) -> bool:
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        return bool(env[e.name])
    if isinstance(e, Not):
        return not evaluate(e.arg, env)
    a = evaluate(e.left, env)
    if e.op == "&":
        return a and evaluate(e.right, env)
    if e.op == "|":
        return a or evaluate(e.right, env)
    b = evaluate(e.right, env)
    if e.op == "->":
        return (not a) or b
    if e.op in ("<->", "="):
        return a == b
    if e.op == "!=":
        return a != b
    raise ValueError(f"unknown operator {e.op}")


def to_text(e: BoolExpr, parent: int = 0) -> str:
    """Print with the fewest parentheses that re-parse to the same tree."""
    if isinstance(e, Const):
        return "TRUE" if e.value else "FALSE"
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Not):
        inner = to_text(e.arg, 99)
        return "!" + inner
    p = _PREC[e.op]
    if e.op in _RIGHT:
        s = f"{to_text(e.left, p + 1)} {e.op} {to_text(e.right, p)}"
    else:
        s = f"{to_text(e.left, p)} {e.op} {to_text(e.right, p + 1)}"
    return f"({s})" if p < parent else s


def rename(e: BoolExpr, mapping: Mapping[str, str]) -> BoolExpr:
    if isinstance(e, Var):
        return Var(mapping.get(e.name, e.name))
    if isinstance(e, Not):
        return Not(rename(e.arg, mapping))
    if isinstance(e, Bin):
        return Bin(e.op, rename(e.left, mapping), rename(e.right, mapping))
    return e
