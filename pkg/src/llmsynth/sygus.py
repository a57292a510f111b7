"""SyGuS-IF 2.1 problems: parsing, candidate checks, evaluation, query emission.

The internal verifier searches for a falsifying assignment of the declared
variables: exhaustively over a bounded domain when it is small enough,
otherwise over seeded random samples.  Finding none is evidence, not proof;
:func:`emit_smt_query` produces the query an external SMT solver can decide.
"""

from __future__ import annotations

import itertools
import random
import re
import subprocess
from dataclasses import dataclass, field
from typing import Iterable, Union

from .grammar import (Atom, Grammar, GrammarError, ParseError, SList, Term, derives, parse_grammar,
                      parse_sexprs, top_level_spans)
from .harness import Verdict, VerdictKind


class SygusParseError(ParseError):
    def __init__(self, message, pos=None, text=None, command: str | None = None):
        self.command = command
        super().__init__(message, pos, text)


class SignatureMismatch(ValueError):
    pass


class GrammarFail(ValueError):
    def __init__(self, function: str, message: str | None = None):
        self.function = function
        super().__init__(message or f"body of {function} is not derivable from its grammar")


class EvalError(ValueError):
    def __init__(self, message: str, assignment: dict | None = None):
        self.assignment = assignment
        super().__init__(message)


# --------------------------------------------------------------------------
# values

@dataclass(frozen=True, slots=True)
class BitVec:
    width: int
    value: int

    def __post_init__(self):
        if self.width < 1:
            raise ValueError("bit-vector width must be positive")
        if not 0 <= self.value < (1 << self.width):
            raise ValueError(f"{self.value} does not fit in {self.width} bits")

    @classmethod
    def wrap(cls, width: int, value: int) -> "BitVec":
        return cls(width, value & ((1 << width) - 1))

    @property
    def signed(self) -> int:
        return self.value - (1 << self.width) if self.value >> (self.width - 1) else self.value

    def __str__(self):
        return f"(_ bv{self.value} {self.width})"


Value = Union[bool, int, BitVec]


def format_value(v: Value) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v) if v >= 0 else f"(- {-v})"
    return str(v)


# --------------------------------------------------------------------------
# problem structure

def sort_str(t: Term) -> str:
    return str(t)


def bv_width(sort: str) -> int | None:
    m = re.fullmatch(r"\(_ BitVec (\d+)\)", sort)
    return int(m.group(1)) if m else None


@dataclass
class FunDef:
    name: str
    params: tuple[tuple[str, str], ...]
    return_sort: str
    body: Term

    def __str__(self):
        ps = " ".join(f"({n} {s})" for n, s in self.params)
        return f"(define-fun {self.name} ({ps}) {self.return_sort} {self.body})"


@dataclass
class SynthFun:
    name: str
    params: tuple[tuple[str, str], ...]
    return_sort: str
    grammar: Grammar | None = None

    def define_fun(self, body: Term) -> str:
        return str(FunDef(self.name, self.params, self.return_sort, body))


@dataclass
class SygusProblem:
    logic: str
    synth_funs: list[SynthFun]
    declared_vars: list[tuple[str, str]]
    constraints: list[Term]
    definitions: list[FunDef] = field(default_factory=list)
    text: str = ""

    def synth_fun(self, name: str) -> SynthFun:
        for f in self.synth_funs:
            if f.name == name:
                return f
        raise KeyError(name)


@dataclass
class CandidateDefs:
    defs: list[FunDef]

    def __str__(self):
        return "\n".join(str(d) for d in self.defs)


UNSUPPORTED = {"inv-constraint", "synth-inv", "assume", "chc-constraint", "declare-weight",
               "optimize-synth", "declare-datatype", "declare-datatypes", "oracle-constraint",
               "declare-oracle-fun", "oracle-assume", "constraint-and", "define-sort"}

BOOL_OPS = {"and", "or", "not", "=>", "xor", "=", "distinct", "ite"}
INT_OPS = {"+", "-", "*", "div", "mod", "abs", "<", "<=", ">", ">="}
BV_OPS = {"bvand", "bvor", "bvxor", "bvnot", "bvneg", "bvadd", "bvsub", "bvmul", "bvudiv",
          "bvurem", "bvshl", "bvlshr", "bvashr", "bvult", "bvule", "bvugt", "bvuge", "bvslt",
          "bvsle", "bvsgt", "bvsge", "bvnand", "bvnor", "bvxnor", "bvcomp", "concat"}
# recognised so problems parse; evaluation routes them to an external solver
EXTERNAL_OPS = {"str.++", "str.len", "str.at", "str.substr", "str.prefixof", "str.suffixof",
                "str.contains", "str.indexof", "str.replace", "str.to.int", "int.to.str",
                "str.to_int", "str.from_int", "select", "store"}
KNOWN_OPS = BOOL_OPS | INT_OPS | BV_OPS | EXTERNAL_OPS | {"let"}

_INT = re.compile(r"-?\d+")


def _is_literal(text: str) -> bool:
    return (text in ("true", "false") or bool(_INT.fullmatch(text)) or text.startswith("#x")
            or text.startswith("#b") or text.startswith('"'))


def _params(t: Term, where: str, text: str, pos: int) -> tuple[tuple[str, str], ...]:
    if not isinstance(t, SList):
        raise SygusParseError(f"{where}: parameter list expected", pos, text, where)
    out = []
    for p in t:
        if not (isinstance(p, SList) and len(p) == 2 and isinstance(p[0], Atom)):
            raise SygusParseError(f"{where}: malformed parameter {p}", pos, text, where)
        out.append((p[0].text, sort_str(p[1])))
    return tuple(out)


def _synth_grammar(rest: list[Term], where: str, text: str, pos: int) -> Grammar | None:
    if not rest:
        return None
    try:
        if len(rest) == 2:
            predecl, groups = rest
            names = [d[0].text for d in predecl if isinstance(d, SList) and d.children]
            g = parse_grammar(groups.children if isinstance(groups, SList) else [groups],
                              start=names[0] if names else None)
            if names and list(g.rules) != names:
                missing = set(names) ^ set(g.rules)
                raise SygusParseError(f"{where}: nonterminals {sorted(missing)} declared but not "
                                      f"given rules (or vice versa)", pos, text, where)
            return g
        if len(rest) == 1:
            groups = rest[0]
            return parse_grammar(groups.children if isinstance(groups, SList) else [groups])
    except GrammarError as exc:
        raise SygusParseError(f"{where}: {exc}", pos, text, where) from None
    raise SygusParseError(f"{where}: unexpected trailing arguments", pos, text, where)


def parse_sygus(text: str) -> SygusProblem:
    """Read a SyGuS-IF problem.

    Recognised commands: set-logic, synth-fun (with or without a grammar),
    declare-var, define-fun, constraint, check-synth, plus set-option and
    set-info, which are ignored.
    """
    try:
        spans = top_level_spans(text)
        forms = parse_sexprs(text)
    except ParseError as exc:
        raise SygusParseError(str(exc), exc.pos) from None
    if not forms:
        raise SygusParseError("empty SyGuS file", 0, text)
    logic = None
    funs: list[SynthFun] = []
    decls: list[tuple[str, str]] = []
    constraints: list[Term] = []
    defs: list[FunDef] = []
    for (pos, _), form in zip(spans, forms):
        if not isinstance(form, SList) or form.head is None:
            raise SygusParseError(f"expected a command, found {form}", pos, text)
        cmd = form.head
        args = list(form.children[1:])
        if cmd == "set-logic":
            if logic is not None:
                raise SygusParseError("more than one set-logic command", pos, text, cmd)
            if len(args) != 1 or not isinstance(args[0], Atom):
                raise SygusParseError("set-logic takes one symbol", pos, text, cmd)
            logic = args[0].text
        elif cmd == "synth-fun":
            if len(args) < 3 or not isinstance(args[0], Atom):
                raise SygusParseError("synth-fun needs a name, parameters and a sort", pos, text, cmd)
            name = args[0].text
            if any(f.name == name for f in funs):
                raise SygusParseError(f"synth-fun {name} declared twice", pos, text, cmd)
            funs.append(SynthFun(name, _params(args[1], cmd, text, pos), sort_str(args[2]),
                                 _synth_grammar(args[3:], cmd, text, pos)))
        elif cmd == "declare-var":
            if len(args) != 2 or not isinstance(args[0], Atom):
                raise SygusParseError("declare-var takes a name and a sort", pos, text, cmd)
            decls.append((args[0].text, sort_str(args[1])))
        elif cmd == "define-fun":
            defs.append(_fundef(form, text, pos))
        elif cmd == "constraint":
            if len(args) != 1:
                raise SygusParseError("constraint takes one term", pos, text, cmd)
            constraints.append(args[0])
        elif cmd in ("check-synth", "set-option", "set-info"):
            pass
        elif cmd in UNSUPPORTED:
            raise SygusParseError(f"unsupported feature: {cmd}", pos, text, cmd)
        else:
            raise SygusParseError(f"unknown command {cmd}", pos, text, cmd)
    if logic is None:
        logic = "ALL"
    problem = SygusProblem(logic, funs, decls, constraints, defs, text)
    _check_scopes(problem)
    return problem


def _fundef(form: Term, text: str = "", pos: int | None = None) -> FunDef:
    if not (isinstance(form, SList) and form.head == "define-fun" and len(form) == 5
            and isinstance(form[1], Atom)):
        raise SygusParseError(f"malformed define-fun {form}", pos, text or None, "define-fun")
    return FunDef(form[1].text, _params(form[2], "define-fun", text, pos), sort_str(form[3]), form[4])


def _check_scopes(p: SygusProblem):
    funs = {f.name for f in p.synth_funs} | {d.name for d in p.definitions}
    nullary = {f.name for f in p.synth_funs if not f.params} | {d.name for d in p.definitions if not d.params}
    names = {v for v, _ in p.declared_vars}
    for c in p.constraints:
        for sym, is_head in _symbols(c, frozenset()):
            if is_head and sym not in funs and sym not in KNOWN_OPS:
                raise SygusParseError(f"constraint applies undeclared function {sym}", command="constraint")
            if not is_head and sym not in names and sym not in nullary:
                raise SygusParseError(f"constraint references undeclared symbol {sym}", command="constraint")


def _symbols(t: Term, bound: frozenset):
    if isinstance(t, Atom):
        if not _is_literal(t.text) and t.text not in bound:
            yield t.text, False
        return
    if not t.children:
        return
    head = t.children[0]
    if isinstance(head, Atom) and head.text == "_":
        return
    if isinstance(head, Atom) and head.text == "let" and len(t) == 3:
        names = set()
        for b in t[1]:
            if isinstance(b, SList) and len(b) == 2:
                yield from _symbols(b[1], bound)
                names.add(b[0].text)
        yield from _symbols(t[2], bound | names)
        return
    if isinstance(head, Atom):
        yield head.text, True
    else:
        yield from _symbols(head, bound)
    for c in t.children[1:]:
        yield from _symbols(c, bound)


def parse_candidate(text: str) -> CandidateDefs:
    forms = parse_sexprs(text)
    if not forms:
        raise SygusParseError("no define-fun in candidate", 0, text)
    return CandidateDefs([_fundef(f) for f in forms])


# --------------------------------------------------------------------------
# syntactic checks

def check_signature(problem: SygusProblem, candidate: CandidateDefs) -> None:
    """Raise SignatureMismatch at the first field that differs."""
    wanted = {f.name: f for f in problem.synth_funs}
    seen = set()
    for d in candidate.defs:
        if d.name not in wanted:
            raise SignatureMismatch(f"define-fun {d.name} does not match any synth-fun "
                                    f"(helper functions are not allowed)")
        if d.name in seen:
            raise SignatureMismatch(f"define-fun {d.name} given twice")
        seen.add(d.name)
    for f in problem.synth_funs:
        if f.name not in seen:
            raise SignatureMismatch(f"missing define-fun for synth-fun {f.name}")
        d = next(x for x in candidate.defs if x.name == f.name)
        nts = set(f.grammar.rules) if f.grammar else set()
        for pname, _ in d.params:
            if pname in nts and pname not in {n for n, _ in f.params}:
                raise SignatureMismatch(f"{f.name}: parameter {pname} is a grammar nonterminal")
        if len(d.params) != len(f.params):
            raise SignatureMismatch(f"{f.name}: arity {len(d.params)} differs from {len(f.params)}")
        for i, ((dn, ds), (fn, fs)) in enumerate(zip(d.params, f.params)):
            if dn != fn:
                raise SignatureMismatch(f"{f.name}: parameter {i} is named {dn}, expected {fn}")
            if ds != fs:
                raise SignatureMismatch(f"{f.name}: parameter {fn} has sort {ds}, expected {fs}")
        if d.return_sort != f.return_sort:
            raise SignatureMismatch(f"{f.name}: return sort {d.return_sort} differs from {f.return_sort}")


def check_grammar(problem: SygusProblem, candidate: CandidateDefs) -> None:
    bodies = {d.name: d.body for d in candidate.defs}
    for f in problem.synth_funs:
        if f.grammar is not None and not derives(f.grammar, f.grammar.start, bodies[f.name]):
            raise GrammarFail(f.name)


# --------------------------------------------------------------------------
# evaluation

def _euclid(a: int, b: int) -> tuple[int, int]:
    # div/mod by zero are fixed to 0 and a so evaluation stays total
    if b == 0:
        return 0, a
    r = a % abs(b)
    return (a - r) // b, r


def _need(v, kind, op):
    if kind is bool:
        ok = isinstance(v, bool)
    elif kind is int:
        ok = isinstance(v, int) and not isinstance(v, bool)
    else:
        ok = isinstance(v, BitVec)
    if not ok:
        raise EvalError(f"{op}: argument {format_value(v) if isinstance(v, (bool, int, BitVec)) else v} "
                        f"has the wrong sort")
    return v


def _atom_value(text: str, env, funs, depth):
    if text == "true":
        return True
    if text == "false":
        return False
    if _INT.fullmatch(text):
        return int(text)
    if text.startswith("#x"):
        return BitVec(4 * (len(text) - 2), int(text[2:], 16))
    if text.startswith("#b"):
        return BitVec(len(text) - 2, int(text[2:], 2))
    if text in env:
        return env[text]
    if text in funs and not funs[text].params:
        return _apply(funs[text], [], funs, depth)
    raise EvalError(f"unbound name {text}")


def _apply(f: FunDef, args, funs, depth):
    if depth <= 0:
        raise EvalError(f"call depth exceeded applying {f.name} (recursive definitions are not allowed)")
    if len(args) != len(f.params):
        raise EvalError(f"{f.name} expects {len(f.params)} arguments, got {len(args)}")
    return _eval(f.body, {n: v for (n, _), v in zip(f.params, args)}, funs, depth - 1)


def _bv_binop(op, a: BitVec, b: BitVec) -> Value:
    if a.width != b.width:
        raise EvalError(f"{op}: width mismatch {a.width} vs {b.width}")
    w, x, y = a.width, a.value, b.value
    mask = (1 << w) - 1
    if op == "bvand":
        return BitVec(w, x & y)
    if op == "bvor":
        return BitVec(w, x | y)
    if op == "bvxor":
        return BitVec(w, x ^ y)
    if op == "bvnand":
        return BitVec(w, ~(x & y) & mask)
    if op == "bvnor":
        return BitVec(w, ~(x | y) & mask)
    if op == "bvxnor":
        return BitVec(w, ~(x ^ y) & mask)
    if op == "bvadd":
        return BitVec.wrap(w, x + y)
    if op == "bvsub":
        return BitVec.wrap(w, x - y)
    if op == "bvmul":
        return BitVec.wrap(w, x * y)
    if op == "bvudiv":
        return BitVec(w, mask if y == 0 else x // y)
    if op == "bvurem":
        return BitVec(w, x if y == 0 else x % y)
    if op == "bvshl":
        return BitVec.wrap(w, x << y if y < w else 0)
    if op == "bvlshr":
        return BitVec(w, x >> y if y < w else 0)
    if op == "bvashr":
        return BitVec.wrap(w, a.signed >> min(y, w))
    if op == "bvcomp":
        return BitVec(1, int(x == y))
    if op == "bvult":
        return x < y
    if op == "bvule":
        return x <= y
    if op == "bvugt":
        return x > y
    if op == "bvuge":
        return x >= y
    if op == "bvslt":
        return a.signed < b.signed
    if op == "bvsle":
        return a.signed <= b.signed
    if op == "bvsgt":
        return a.signed > b.signed
    if op == "bvsge":
        return a.signed >= b.signed
    raise EvalError(f"unsupported bit-vector operator {op}")


_LEFT_ASSOC_BV = {"bvand", "bvor", "bvxor", "bvadd", "bvmul"}


def _eval(t: Term, env: dict, funs: dict, depth: int) -> Value:
    if isinstance(t, Atom):
        return _atom_value(t.text, env, funs, depth)
    if not t.children:
        raise EvalError("cannot evaluate ()")
    head = t.children[0]
    args = t.children[1:]
    if isinstance(head, SList):
        return _eval_indexed(head, args, env, funs, depth)
    op = head.text
    if op == "_":
        m = re.fullmatch(r"bv(\d+)", args[0].text) if args and isinstance(args[0], Atom) else None
        if m and len(args) == 2:
            return BitVec.wrap(int(args[1].text), int(m.group(1)))
        raise EvalError(f"unsupported indexed term {t}")
    if op == "ite":
        if len(args) != 3:
            raise EvalError("ite takes three arguments")
        c = _need(_eval(args[0], env, funs, depth), bool, op)
        return _eval(args[1] if c else args[2], env, funs, depth)
    if op == "let":
        bindings = args[0]
        new = dict(env)
        for b in bindings:
            new[b[0].text] = _eval(b[1], env, funs, depth)
        return _eval(args[1], new, funs, depth)
    if op in funs:
        return _apply(funs[op], [_eval(a, env, funs, depth) for a in args], funs, depth)
    if op in EXTERNAL_OPS:
        raise EvalError(f"{op}: strings and arrays are only checked by the external solver")
    vals = [_eval(a, env, funs, depth) for a in args]
    return _eval_op(op, vals)


def _eval_indexed(head: SList, args, env, funs, depth):
    if head.head != "_" or len(head) < 3:
        raise EvalError(f"unsupported indexed operator {head}")
    name = head[1].text
    idx = [int(i.text) for i in head.children[2:]]
    x = _need(_eval(args[0], env, funs, depth), BitVec, name)
    if name == "extract":
        hi, lo = idx
        if not 0 <= lo <= hi < x.width:
            raise EvalError(f"extract bounds {hi}:{lo} outside width {x.width}")
        return BitVec(hi - lo + 1, (x.value >> lo) & ((1 << (hi - lo + 1)) - 1))
    if name == "zero_extend":
        return BitVec(x.width + idx[0], x.value)
    if name == "sign_extend":
        return BitVec.wrap(x.width + idx[0], x.signed)
    raise EvalError(f"unsupported indexed operator {name}")


def _eval_op(op: str, vals: list) -> Value:
    if op == "not":
        return not _need(vals[0], bool, op)
    if op == "and":
        return all(_need(v, bool, op) for v in vals)
    if op == "or":
        return any([_need(v, bool, op) for v in vals])
    if op == "xor":
        acc = False
        for v in vals:
            acc ^= _need(v, bool, op)
        return acc
    if op == "=>":
        for v in vals:
            _need(v, bool, op)
        acc = vals[-1]
        for v in reversed(vals[:-1]):
            acc = (not v) or acc
        return acc
    if op == "=":
        _same_sort(vals, op)
        return all(v == vals[0] for v in vals[1:])
    if op == "distinct":
        _same_sort(vals, op)
        return len(set(vals)) == len(vals)
    if op in INT_OPS:
        xs = [_need(v, int, op) for v in vals]
        if op == "+":
            return sum(xs)
        if op == "-":
            if len(xs) == 1:
                return -xs[0]
            acc = xs[0]
            for x in xs[1:]:
                acc -= x
            return acc
        if op == "*":
            acc = 1
            for x in xs:
                acc *= x
            return acc
        if op in ("div", "mod"):
            acc = xs[0]
            for x in xs[1:]:
                q, r = _euclid(acc, x)
                acc = q if op == "div" else r
            return acc
        if op == "abs":
            return abs(xs[0])
        return all(_cmp(op, a, b) for a, b in zip(xs, xs[1:]))
    if op in BV_OPS:
        bs = [_need(v, BitVec, op) for v in vals]
        if op == "bvnot":
            return BitVec(bs[0].width, ~bs[0].value & ((1 << bs[0].width) - 1))
        if op == "bvneg":
            return BitVec.wrap(bs[0].width, -bs[0].value)
        if op == "concat":
            acc = bs[0]
            for b in bs[1:]:
                acc = BitVec(acc.width + b.width, (acc.value << b.width) | b.value)
            return acc
        if op in _LEFT_ASSOC_BV:
            acc = bs[0]
            for b in bs[1:]:
                acc = _bv_binop(op, acc, b)
            return acc
        if len(bs) != 2:
            raise EvalError(f"{op} takes two arguments")
        return _bv_binop(op, bs[0], bs[1])
    raise EvalError(f"unknown operator {op}")


def _same_sort(vals, op):
    kinds = {type(v) if not isinstance(v, BitVec) else ("bv", v.width) for v in vals}
    if len(kinds) > 1:
        raise EvalError(f"{op}: arguments of different sorts")


def _cmp(op, a, b):
    return {"<": a < b, "<=": a <= b, ">": a > b, ">=": a >= b}[op]


def _function_table(problem: SygusProblem | None, defs: CandidateDefs | None) -> dict:
    funs = {}
    if problem is not None:
        funs.update({d.name: d for d in problem.definitions})
    if defs is not None:
        funs.update({d.name: d for d in defs.defs})
    return funs


def eval_term(term: Term, env: dict, defs: CandidateDefs | None = None, *,
              problem: SygusProblem | None = None) -> Value:
    """Big-step evaluation under ``env`` with the candidate's functions in scope."""
    funs = _function_table(problem, defs)
    return _eval(term, env, funs, len(funs) + 1)


# --------------------------------------------------------------------------
# counterexample search

@dataclass
class SearchConfig:
    exhaustive_bound: int = 32
    random_samples: int = 10_000
    seed: int = 0
    max_exhaustive: int = 10 ** 6


def _int_scan(bound: int) -> list[int]:
    out = [0]
    for k in range(1, bound + 1):
        out += [k, -k]
    return out


def _domain(sort: str, bound: int) -> list | None:
    if sort == "Int":
        return _int_scan(bound)
    if sort == "Bool":
        return [False, True]
    w = bv_width(sort)
    if w is not None and w <= 8:
        return [BitVec(w, v) for v in range(1 << w)]
    return None


def _sample(sort: str, rng: random.Random, bound: int) -> Value:
    if sort == "Int":
        return rng.randint(-bound, bound)
    if sort == "Bool":
        return rng.random() < 0.5
    w = bv_width(sort)
    if w is not None:
        return BitVec(w, rng.getrandbits(w))
    raise EvalError(f"cannot sample values of sort {sort}")


def _assignments(problem: SygusProblem, search: SearchConfig) -> Iterable[dict]:
    names = [n for n, _ in problem.declared_vars]
    domains = [_domain(s, search.exhaustive_bound) for _, s in problem.declared_vars]
    size = 1
    for d in domains:
        size = size * len(d) if d is not None and size is not None else None
    if size is not None and size <= search.max_exhaustive:
        for combo in itertools.product(*domains):
            yield dict(zip(names, combo))
        return
    rng = random.Random(search.seed)
    for _ in range(search.random_samples):
        yield {n: _sample(s, rng, search.exhaustive_bound) for n, s in problem.declared_vars}


def find_counterexample(problem: SygusProblem, candidate: CandidateDefs,
                        search: SearchConfig | None = None) -> dict | None:
    """First assignment (in scan order) under which some constraint is false.

    Integers are scanned 0, 1, -1, 2, -2, ... up to the bound, so reported
    counterexamples are small.  ``None`` only means the search found nothing.
    """
    search = search or SearchConfig()
    funs = _function_table(problem, candidate)
    depth = len(funs) + 1
    if not problem.constraints:
        return None
    for env in _assignments(problem, search):
        for c in problem.constraints:
            try:
                v = _eval(c, env, funs, depth)
            except EvalError as exc:
                raise EvalError(f"{exc} under {format_assignment(env)}", env) from None
            if v is not True:
                if not isinstance(v, bool):
                    raise EvalError(f"constraint {c} is not boolean", env)
                return env
    return None


def format_assignment(env: dict) -> str:
    return ", ".join(f"{k} = {format_value(v)}" for k, v in env.items())


# --------------------------------------------------------------------------
# SMT query and external solver

def emit_smt_query(problem: SygusProblem, candidate: CandidateDefs) -> str:
    """SMT-LIB v2 text that is unsat exactly when the candidate meets every constraint."""
    lines = [
        "; unsat means every constraint holds for the candidate below",
        "; the internal evaluator fixes (div x 0) = 0 and (mod x 0) = x; SMT-LIB leaves them open",
        f"(set-logic {problem.logic})",
    ]
    lines += [str(d) for d in problem.definitions]
    lines += [str(d) for d in candidate.defs]
    lines += [f"(declare-const {n} {s})" for n, s in problem.declared_vars]
    cs = [str(c) for c in problem.constraints]
    if not cs:
        body = "true"
    elif len(cs) == 1:
        body = cs[0]
    else:
        body = "(and " + " ".join(cs) + ")"
    lines.append(f"(assert (not {body}))")
    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"


class AdapterError(RuntimeError):
    pass


def run_smt_solver(query: str, argv: list[str], timeout: float) -> str:
    """Feed ``query`` on stdin; returns 'sat', 'unsat', 'unknown' or 'timeout'."""
    try:
        proc = subprocess.run(argv, input=query, capture_output=True, text=True, timeout=timeout)
    except subprocess.TimeoutExpired:
        return "timeout"
    except OSError as exc:
        raise AdapterError(f"cannot run {argv[0]}: {exc}") from exc
    for line in proc.stdout.splitlines():
        line = line.strip()
        if line:
            return line if line in ("sat", "unsat", "unknown") else "unknown"
    return "unknown"


class SygusVerifier:
    """Verifier handle: signature, grammar, then internal search or external solver."""

    domains = ("Sygus",)

    def __init__(self, search: SearchConfig | None = None, solver_argv: list[str] | None = None,
                 relaxed: bool = False):
        self.search = search or SearchConfig()
        self.solver_argv = solver_argv
        self.relaxed = relaxed
        self._problems: dict[str, SygusProblem] = {}

    def problem(self, benchmark) -> SygusProblem:
        if benchmark.id not in self._problems:
            self._problems[benchmark.id] = parse_sygus(benchmark.spec_text)
        return self._problems[benchmark.id]

    def verify(self, benchmark, candidate: str, timeout: float) -> Verdict:
        problem = self.problem(benchmark)
        return check_candidate(problem, candidate, search=self.search, solver_argv=self.solver_argv,
                               timeout=timeout, relaxed=self.relaxed)


def check_candidate(problem: SygusProblem, candidate: str, *, search: SearchConfig | None = None,
                    solver_argv: list[str] | None = None, timeout: float = 600.0,
                    relaxed: bool = False) -> Verdict:
    try:
        defs = parse_candidate(candidate)
    except ParseError as exc:
        return Verdict(VerdictKind.SYNTAX_FAIL, str(exc))
    try:
        check_signature(problem, defs)
    except SignatureMismatch as exc:
        return Verdict(VerdictKind.SYNTAX_FAIL, f"signature mismatch: {exc}")
    if not relaxed:
        try:
            check_grammar(problem, defs)
        except GrammarFail as exc:
            return Verdict(VerdictKind.GRAMMAR_FAIL, str(exc))
    if solver_argv:
        answer = run_smt_solver(emit_smt_query(problem, defs), solver_argv, timeout)
        if answer == "unsat":
            return Verdict(VerdictKind.PASS)
        if answer == "sat":
            return Verdict(VerdictKind.SEMANTIC_FAIL, "external solver found a counterexample (sat)")
        return Verdict(VerdictKind.VERIFY_TIMEOUT, f"external solver answered {answer}")
    try:
        cex = find_counterexample(problem, defs, search)
    except EvalError as exc:
        return Verdict(VerdictKind.SEMANTIC_FAIL, f"evaluation error: {exc}")
    if cex is not None:
        return Verdict(VerdictKind.SEMANTIC_FAIL, f"counterexample: {format_assignment(cex)}")
    return Verdict(VerdictKind.PASS)
