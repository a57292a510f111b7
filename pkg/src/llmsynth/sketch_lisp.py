"""Recursive-function sketches in a Lisp-like language.

Candidates are checked syntactically here: balanced s-expressions, one
definition per required function, known operators with the right arity.
Semantic checking goes to an external counterexample generator, whose pass
is taken as the verdict.  Sketch and grammar conformance is deliberately not
enforced.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

from .adapters import ExternalChecker
from .grammar import Atom, ParseError, SList, Term, parse_sexprs
from .harness import Verdict, VerdictKind, cache_key

DEF_HEADS = ("defun", "definec", "defunc")
BUNDLE_FILES = {
    "signatures": "signatures.lisp",
    "primitives": "primitives.lisp",
    "terminals": "terminals.lisp",
    "properties": "properties.lisp",
    "io": "io.lisp",
    "datatypes": "datatypes.lisp",
    "definitions": "definitions.lisp",
    "sketches": "sketches.lisp",
    "grammar": "grammar.lisp",
}


class SyntaxFail(ValueError):
    pass


@dataclass(frozen=True)
class FunctionSignature:
    name: str
    arity: int
    param_names: tuple[str, ...]

    def __post_init__(self):
        if self.arity != len(self.param_names):
            raise ValueError(f"{self.name}: arity {self.arity} but {len(self.param_names)} parameter names")


@dataclass
class Definition:
    name: str
    params: tuple[str, ...]
    body: Term
    form: Term


@dataclass
class LispBenchmark:
    name: str
    signatures: list[FunctionSignature]
    primitives: dict[str, int]
    terminals: list[str] = field(default_factory=list)
    properties: str = ""
    io: str = ""
    datatypes: str = ""
    definitions: str = ""
    sketches: str = ""
    grammar: str = ""
    signature_text: str = ""

    def __post_init__(self):
        clash = {s.name for s in self.signatures} & set(self.primitives)
        if clash:
            raise ValueError(f"functions under synthesis shadow primitives: {sorted(clash)}")

    @property
    def helper_arities(self) -> dict[str, int]:
        """Functions defined in the context block, callable from candidates."""
        out = {}
        try:
            forms = parse_sexprs(self.definitions) if self.definitions.strip() else []
        except ParseError:
            return out
        for f in forms:
            try:
                d = read_definition(f)
            except SyntaxFail:
                continue
            out[d.name] = len(d.params)
        return out


def _param_names(t: Term, where: str) -> tuple[str, ...]:
    if isinstance(t, Atom):
        if t.text.lower() == "nil":
            return ()
        raise SyntaxFail(f"{where}: parameter list expected, found {t}")
    names = []
    for p in t:
        if isinstance(p, SList):
            # (x :type) style
            if not p.children or not isinstance(p[0], Atom):
                raise SyntaxFail(f"{where}: malformed parameter {p}")
            names.append(p[0].text)
        elif not p.text.startswith(":"):
            names.append(p.text)
    return tuple(names)


def read_definition(form: Term) -> Definition:
    """Accept ``(defun f (x y) body)`` and ``(definec f (x :type ...) :rtype body)``."""
    if not (isinstance(form, SList) and form.head in DEF_HEADS):
        raise SyntaxFail(f"expected a function definition, found {_short(form)}")
    if len(form) < 4 or not isinstance(form[1], Atom):
        raise SyntaxFail(f"malformed {form.head}: {_short(form)}")
    name = form[1].text
    params = _param_names(form[2], name)
    rest = list(form.children[3:])
    if form.head in ("definec", "defunc") and rest and isinstance(rest[0], Atom) and rest[0].text.startswith(":"):
        rest = rest[1:]
    # skip doc strings and (declare ...) forms
    rest = [r for r in rest if not (isinstance(r, Atom) and r.text.startswith('"'))
            and not (isinstance(r, SList) and r.head == "declare")]
    if len(rest) != 1:
        raise SyntaxFail(f"{name}: expected exactly one body form, found {len(rest)}")
    return Definition(name, params, rest[0], form)


def _short(t: Term, width: int = 60) -> str:
    s = str(t)
    return s if len(s) <= width else s[:width - 3] + "..."


_LITERAL = re.compile(r"-?\d+(/\d+)?|t|nil|:[\w-]+|\".*\"|#\\.+", re.I)


def validate_candidate(candidates: list[Term], benchmark: LispBenchmark, *,
                       strict_terminals: bool = False) -> list[Definition]:
    """Check shape, coverage and arities; returns the definitions on success."""
    wanted = {s.name: s for s in benchmark.signatures}
    defs: dict[str, Definition] = {}
    for form in candidates:
        d = read_definition(form)
        if d.name not in wanted:
            raise SyntaxFail(f"definition of {d.name}, which is not a function under synthesis")
        if d.name in defs:
            raise SyntaxFail(f"{d.name} defined more than once")
        if len(d.params) != wanted[d.name].arity:
            raise SyntaxFail(f"{d.name} takes {wanted[d.name].arity} parameters, definition has {len(d.params)}")
        defs[d.name] = d
    missing = [n for n in wanted if n not in defs]
    if missing:
        raise SyntaxFail(f"missing definition for {', '.join(missing)}")
    arities = dict(benchmark.helper_arities)
    arities.update(benchmark.primitives)
    arities.update({n: s.arity for n, s in wanted.items()})
    for d in defs.values():
        leaves = set(d.params) | set(benchmark.terminals)
        _check_body(d.body, d.name, arities, leaves if strict_terminals else None)
    return [defs[n] for n in wanted]


def _check_body(t: Term, fname: str, arities: dict[str, int], leaves: set[str] | None):
    if isinstance(t, Atom):
        if leaves is not None and t.text not in leaves and not _LITERAL.fullmatch(t.text):
            raise SyntaxFail(f"{fname}: {t.text} is not a declared terminal or parameter")
        return
    if not t.children:
        return
    head = t.children[0]
    args = t.children[1:]
    if not isinstance(head, Atom):
        raise SyntaxFail(f"{fname}: cannot apply {_short(head)}; the operator must be a symbol")
    op = head.text
    if op == "quote":
        if len(args) != 1:
            raise SyntaxFail(f"{fname}: quote takes one argument")
        return
    if op == "if":
        if len(args) != 3:
            raise SyntaxFail(f"{fname}: if takes 3 arguments, found {len(args)}")
    elif op in arities:
        if len(args) != arities[op]:
            raise SyntaxFail(f"{fname}: ({op} ...) applied to {len(args)} arguments, {op} takes {arities[op]}")
    else:
        raise SyntaxFail(f"{fname}: {op} is neither a primitive nor a function being defined")
    for a in args:
        _check_body(a, fname, arities, leaves)


def parse_candidates(text: str) -> list[Term]:
    try:
        forms = parse_sexprs(text)
    except ParseError as exc:
        raise SyntaxFail(str(exc)) from None
    if not forms:
        raise SyntaxFail("no definitions in candidate")
    return forms


def cgen_input(defs: list[Definition], benchmark: LispBenchmark) -> str:
    """File handed to the counterexample generator: context, candidate, properties."""
    parts = [benchmark.datatypes, benchmark.definitions,
             "\n".join(str(d.form) for d in defs), benchmark.properties]
    return "\n\n".join(p.strip() for p in parts if p and p.strip()) + "\n"


def verify_with_cgen(candidates: list[Term], benchmark: LispBenchmark, adapter, deadline: float, *,
                     cache: dict | None = None) -> Verdict:
    defs = validate_candidate(candidates, benchmark)
    text = cgen_input(defs, benchmark)
    key = cache_key("\n".join(str(d.form) for d in defs))
    if cache is not None and key in cache:
        return cache[key]
    v = adapter.run(text, deadline)
    if cache is not None and v.kind in (VerdictKind.PASS, VerdictKind.SEMANTIC_FAIL):
        cache[key] = v
    return v


# --------------------------------------------------------------------------
# bundles

def _read_signatures(text: str) -> list[FunctionSignature]:
    sigs = []
    for form in parse_sexprs(text):
        if not (isinstance(form, SList) and form.head in DEF_HEADS and len(form) >= 3):
            raise SyntaxFail(f"signature file: expected (defun name (params) ...), found {_short(form)}")
        params = _param_names(form[2], form[1].text)
        sigs.append(FunctionSignature(form[1].text, len(params), params))
    return sigs


def _read_primitives(text: str) -> dict[str, int]:
    """``(name arity)`` pairs, at top level or inside one enclosing list."""
    out: dict[str, int] = {}

    def take(f):
        if (isinstance(f, SList) and len(f) == 2 and isinstance(f[0], Atom) and isinstance(f[1], Atom)
                and f[1].text.isdigit()):
            out[f[0].text] = int(f[1].text)
            return True
        return False

    for form in parse_sexprs(text):
        if take(form):
            continue
        if isinstance(form, SList) and all(take(x) for x in form):
            continue
        raise SyntaxFail(f"primitives file: expected (name arity), found {_short(form)}")
    return out


def _read_terminals(text: str) -> list[str]:
    out = []
    for form in parse_sexprs(text):
        if isinstance(form, Atom):
            out.append(form.text)
        else:
            out.extend(str(x) for x in form)
    return out


def load_lisp_bundle(directory) -> LispBenchmark:
    d = Path(directory)
    texts = {k: (d / f).read_text() if (d / f).exists() else "" for k, f in BUNDLE_FILES.items()}
    if not texts["signatures"].strip():
        raise FileNotFoundError(f"{d} has no {BUNDLE_FILES['signatures']}")
    return LispBenchmark(
        name=d.name,
        signatures=_read_signatures(texts["signatures"]),
        primitives=_read_primitives(texts["primitives"]) if texts["primitives"].strip() else {},
        terminals=_read_terminals(texts["terminals"]) if texts["terminals"].strip() else [],
        properties=texts["properties"], io=texts["io"], datatypes=texts["datatypes"],
        definitions=texts["definitions"], sketches=texts["sketches"], grammar=texts["grammar"],
        signature_text=texts["signatures"],
    )


def lisp_aux(b: LispBenchmark) -> dict:
    return {
        "lisp": b,
        "sig_block": b.signature_text.strip(),
        "primitives_block": "\n".join(f"({n} {a})" for n, a in b.primitives.items()),
        "terminals_block": " ".join(b.terminals),
        "io_block": b.io.strip(),
        "datatype_block": b.datatypes.strip(),
        "definitions_block": b.definitions.strip(),
        "sketches_block": b.sketches.strip(),
        "grammar_block": b.grammar.strip(),
        "function_list": ", ".join(s.name for s in b.signatures),
    }


class LispSketchVerifier:
    """Parse, validate, then ask the counterexample generator (cached)."""

    domains = ("Acl2sSketch",)

    def __init__(self, checker: ExternalChecker | None = None, *, strict_terminals: bool = False):
        self.checker = checker
        self.strict_terminals = strict_terminals
        self.caches: dict[str, dict] = {}

    def verify(self, benchmark, candidate: str, timeout: float) -> Verdict:
        lb: LispBenchmark = benchmark.aux["lisp"]
        try:
            forms = parse_candidates(candidate)
            validate_candidate(forms, lb, strict_terminals=self.strict_terminals)
        except SyntaxFail as exc:
            return Verdict(VerdictKind.SYNTAX_FAIL, str(exc))
        if self.checker is None:
            return Verdict(VerdictKind.VERIFY_TIMEOUT, "no counterexample generator configured")
        return verify_with_cgen(forms, lb, self.checker, timeout, cache=self.caches.setdefault(benchmark.id, {}))
