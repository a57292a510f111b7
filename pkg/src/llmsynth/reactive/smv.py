"""The boolean SMV subset: parsing, sanity checks, self-composition.

A module in the subset has one IVAR, VAR, ASSIGN and DEFINE section each,
only ``boolean`` variables, exactly one ``init`` and one ``next`` per state
variable, and no INIT/TRANS constraints.  :func:`parse_smv_subset` in strict
mode raises on the first violation; in lenient mode it records violations on
the module so :func:`sanity_check_smv` can report all three check groups.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .boolexpr import BoolExpr, Token, names, parse_expr, to_text, tokenize
from .errors import SyntaxFail
from .tlsf import TlsfInterface

SECTIONS = {"IVAR", "VAR", "ASSIGN", "DEFINE"}
FORBIDDEN = {"TRANS", "INIT", "INVAR", "FAIRNESS", "JUSTICE", "COMPASSION", "FROZENVAR",
             "LTLSPEC", "CTLSPEC", "SPEC", "INVARSPEC", "PSLSPEC", "COMPUTE", "CONSTANTS",
             "ISA", "PRED", "MIRROR"}
SPECS = {"LTLSPEC", "CTLSPEC", "SPEC", "INVARSPEC"}
STRUCTURE, BOOLEAN, OPERATOR = "structure", "boolean", "operator"


@dataclass(frozen=True)
class Issue:
    category: str
    message: str


@dataclass
class Assignment:
    kind: str  # "init" or "next"
    var: str
    expr: BoolExpr


@dataclass
class SmvModule:
    name: str = "main"
    params: list[str] = field(default_factory=list)
    ivars: list[str] = field(default_factory=list)
    vars: list[str] = field(default_factory=list)
    types: dict[str, str] = field(default_factory=dict)
    statements: list[Assignment] = field(default_factory=list)
    defines: dict[str, BoolExpr] = field(default_factory=dict)
    specs: list[tuple[str, str]] = field(default_factory=list)
    sections: list[str] = field(default_factory=list)
    issues: list[Issue] = field(default_factory=list)

    @property
    def assigns(self) -> dict[str, dict[str, BoolExpr]]:
        out: dict[str, dict[str, BoolExpr]] = {}
        for a in self.statements:
            out.setdefault(a.var, {}).setdefault(a.kind, a.expr)
        return out

    def define_order(self) -> list[str]:
        """Defines in dependency order; SyntaxFail on a cycle."""
        order, state = [], {}

        def visit(d, path):
            if state.get(d) == 2:
                return
            if state.get(d) == 1:
                raise SyntaxFail(f"DEFINE cycle through {' -> '.join(path + [d])}")
            state[d] = 1
            for n in names(self.defines[d]):
                if n in self.defines:
                    visit(n, path + [d])
            state[d] = 2
            order.append(d)

        for d in self.defines:
            visit(d, [])
        return order


class _Stream:
    def __init__(self, tokens: list[Token], text: str):
        self.toks = tokens
        self.i = 0
        self.text = text

    def peek(self, k: int = 0) -> str | None:
        j = self.i + k
        return self.toks[j].text if j < len(self.toks) else None

    def take(self) -> str:
        t = self.peek()
        self.i += 1
        return t

    def line(self) -> int:
        pos = self.toks[min(self.i, len(self.toks) - 1)].pos if self.toks else 0
        return self.text.count("\n", 0, pos) + 1

    def expect(self, tok: str):
        if self.peek() != tok:
            raise SyntaxFail(f"line {self.line()}: expected {tok!r}, found {self.peek()!r}")
        self.i += 1

    def until_semicolon(self) -> list[Token]:
        start = self.i
        depth = 0
        while self.peek() is not None:
            t = self.peek()
            if t == "(":
                depth += 1
            elif t == ")":
                depth -= 1
            elif t == ";" and depth <= 0:
                break
            elif depth <= 0 and (t in SECTIONS or t in FORBIDDEN or t == "MODULE"):
                raise SyntaxFail(f"line {self.line()}: missing ';' before {t}")
            self.i += 1
        if self.peek() != ";":
            raise SyntaxFail(f"line {self.line()}: missing ';'")
        out = self.toks[start:self.i]
        self.i += 1
        return out


def _strip_comments(text: str) -> str:
    # blank out comments so token positions still index the original text
    return re.sub(r"--[^\n]*", lambda mm: " " * len(mm.group(0)), text)


def _boundary(t: str | None) -> bool:
    return t is None or t in SECTIONS or t in FORBIDDEN or t == "MODULE"


def _parse_module(s: _Stream, dialect: str) -> SmvModule:
    m = SmvModule()
    s.expect("MODULE")
    m.name = s.take() or ""
    if s.peek() == "(":
        s.take()
        while s.peek() != ")":
            p = s.take()
            if p is None:
                raise SyntaxFail("unterminated module parameter list")
            if p != ",":
                m.params.append(p)
        s.take()
    edialect = "composed" if dialect == "composed" else "smv"

    def issue(cat, msg):
        m.issues.append(Issue(cat, msg))

    while not (s.peek() is None or s.peek() == "MODULE"):
        sec = s.take()
        line = s.line()
        if sec in FORBIDDEN:
            if sec in SPECS and dialect == "composed":
                start = s.i
                while not _boundary(s.peek()):
                    s.take()
                m.specs.append((sec, " ".join(t.text for t in s.toks[start:s.i])))
                continue
            issue(STRUCTURE, f"{sec} section present")
            while not _boundary(s.peek()):
                s.take()
            continue
        if sec not in SECTIONS:
            raise SyntaxFail(f"line {line}: expected a section keyword, found {sec!r}")
        if sec in m.sections:
            issue(STRUCTURE, f"more than one {sec} section")
        m.sections.append(sec)
        while not _boundary(s.peek()):
            if sec in ("IVAR", "VAR"):
                _declaration(s, m, sec, issue, dialect)
            elif sec == "ASSIGN":
                _assignment(s, m, edialect)
            else:
                name = s.take()
                s.expect(":=")
                toks = s.until_semicolon()
                if not re.fullmatch(r"[A-Za-z_][\w$#]*", name or ""):
                    raise SyntaxFail(f"line {line}: bad DEFINE name {name!r}")
                if name in m.defines:
                    issue(STRUCTURE, f"{name} defined twice in DEFINE")
                m.defines[name] = parse_expr(toks, edialect, f"DEFINE {name}")
    _structural_issues(m, issue, dialect)
    return m


def _declaration(s: _Stream, m: SmvModule, sec: str, issue, dialect: str):
    name = s.take()
    if not re.fullmatch(r"[A-Za-z_][\w$#]*", name or ""):
        raise SyntaxFail(f"line {s.line()}: bad variable name {name!r} in {sec}")
    s.expect(":")
    toks = s.until_semicolon()
    if not toks:
        raise SyntaxFail(f"line {s.line()}: {name} has no type")
    typ = s.text[toks[0].pos:toks[-1].pos + len(toks[-1].text)]
    typ = re.sub(r"\s+", " ", typ)
    if name in m.ivars or name in m.vars:
        issue(STRUCTURE, f"{name} declared twice")
    (m.ivars if sec == "IVAR" else m.vars).append(name)
    m.types[name] = typ
    if typ == "boolean":
        return
    if dialect == "composed" and sec == "VAR" and re.fullmatch(r"[A-Za-z_]\w*(\s*\(.*\))?", typ):
        return
    if re.fullmatch(r"-?\d+\s*\.\.\s*-?\d+|integer", typ):
        issue(BOOLEAN, f"integer type: {name} : {typ} (only boolean is allowed)")
    else:
        issue(BOOLEAN, f"non-boolean type: {name} : {typ} (only boolean is allowed)")


def _assignment(s: _Stream, m: SmvModule, dialect: str):
    kind = s.take()
    if kind not in ("init", "next"):
        raise SyntaxFail(f"line {s.line()}: ASSIGN statements must be init(x) := ... or next(x) := ..., "
                         f"found {kind!r}")
    s.expect("(")
    var = s.take()
    s.expect(")")
    s.expect(":=")
    toks = s.until_semicolon()
    m.statements.append(Assignment(kind, var, parse_expr(toks, dialect, f"{kind}({var})")))


def _structural_issues(m: SmvModule, issue, dialect: str):
    if dialect != "composed" and m.name != "main":
        issue(STRUCTURE, f"module is named {m.name}, expected main")
    seen: dict[tuple[str, str], int] = {}
    for a in m.statements:
        if a.var in m.ivars or a.var in m.params:
            issue(STRUCTURE, f"{a.kind}({a.var}) assigns an input variable")
        elif a.var not in m.vars:
            issue(STRUCTURE, f"{a.kind}({a.var}) assigns an undeclared variable")
        key = (a.kind, a.var)
        seen[key] = seen.get(key, 0) + 1
        if seen[key] == 2:
            issue(STRUCTURE, f"more than one {a.kind}({a.var}) statement")
    for v in m.vars:
        if m.types.get(v, "boolean") != "boolean" and dialect == "composed":
            continue
        for kind in ("init", "next"):
            if (kind, v) not in seen:
                issue(STRUCTURE, f"missing {kind}({v}) statement")
    for d in m.defines:
        if d in m.ivars or d in m.vars or d in m.params:
            issue(STRUCTURE, f"{d} is declared in IVAR/VAR and also defined in DEFINE")
    known = set(m.ivars) | set(m.vars) | set(m.params) | set(m.defines)
    for a in m.statements:
        for n in names(a.expr):
            if n not in known and not (dialect == "composed" and "." in n):
                issue(STRUCTURE, f"{a.kind}({a.var}) references unknown name {n}")
    for d, e in m.defines.items():
        for n in names(e):
            if n not in known and not (dialect == "composed" and "." in n):
                issue(STRUCTURE, f"DEFINE {d} references unknown name {n}")
    try:
        m.define_order()
    except SyntaxFail as exc:
        issue(STRUCTURE, str(exc))
    if m.vars and "ASSIGN" not in m.sections:
        issue(STRUCTURE, "VAR declares state variables but there is no ASSIGN section")


def parse_smv_modules(text: str, dialect: str = "smv") -> list[SmvModule]:
    toks = tokenize(_strip_comments(text))
    if not toks:
        raise SyntaxFail("empty SMV text")
    for t in toks:
        if t.text in ("&&", "||", "~"):
            hint = {"&&": "&", "||": "|", "~": "!"}[t.text]
            raise SyntaxFail(f"operator {t.text} invalid, use {hint}")
    s = _Stream(toks, _strip_comments(text))
    mods = []
    while s.peek() is not None:
        if s.peek() != "MODULE":
            raise SyntaxFail(f"line {s.line()}: expected MODULE, found {s.peek()!r}")
        mods.append(_parse_module(s, dialect))
    return mods


def parse_smv_subset(text: str, *, strict: bool = True) -> SmvModule:
    """Parse a single-module candidate; strict mode raises on any recorded issue."""
    mods = parse_smv_modules(text, "smv")
    if len(mods) != 1:
        raise SyntaxFail(f"expected exactly one MODULE, found {len(mods)}")
    m = mods[0]
    if strict and m.issues:
        raise SyntaxFail(m.issues[0].message)
    return m


def parse_composed(text: str) -> tuple[SmvModule, SmvModule]:
    """Read back :func:`self_compose` output as (submodule, main)."""
    mods = parse_smv_modules(text, "composed")
    mains = [m for m in mods if m.name == "main"]
    subs = [m for m in mods if m.name != "main"]
    if len(mains) != 1 or len(subs) != 1:
        raise SyntaxFail("expected one submodule and one main module")
    return subs[0], mains[0]


@dataclass
class SanityReport:
    structure_ok: bool
    boolean_ok: bool
    io_mapping_ok: bool
    diagnostics: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.structure_ok and self.boolean_ok and self.io_mapping_ok


def sanity_check_smv(module: SmvModule, tlsf: TlsfInterface) -> SanityReport:
    diags = [f"{i.category}: {i.message}" for i in module.issues]
    structure = not any(i.category == STRUCTURE for i in module.issues)
    if tlsf.inputs and "IVAR" not in module.sections:
        structure = False
        diags.append("structure: IVAR section missing")
    if tlsf.outputs and "DEFINE" not in module.sections:
        structure = False
        diags.append("structure: DEFINE section missing")
    boolean = not any(i.category == BOOLEAN for i in module.issues)
    io = True
    ins, outs = set(module.ivars), set(module.defines)
    if ins != set(tlsf.inputs):
        io = False
        diags.append(f"io: IVAR names {sorted(ins)} differ from specification inputs {sorted(tlsf.inputs)}")
    if outs != set(tlsf.outputs):
        io = False
        diags.append(f"io: DEFINE names {sorted(outs)} differ from specification outputs {sorted(tlsf.outputs)}")
    return SanityReport(structure, boolean, io, diags)


def module_text(m: SmvModule, *, header: str | None = None, with_ivars: bool = True) -> str:
    """Canonical text: one declaration or statement per line, two-space indent."""
    out = [header or (f"MODULE {m.name}" + (f"({', '.join(m.params)})" if m.params else ""))]
    if with_ivars and m.ivars:
        out.append("IVAR")
        out += [f"  {v} : {m.types.get(v, 'boolean')};" for v in m.ivars]
    if m.vars:
        out.append("VAR")
        out += [f"  {v} : {m.types.get(v, 'boolean')};" for v in m.vars]
    if m.statements:
        out.append("ASSIGN")
        out += [f"  {a.kind}({a.var}) := {to_text(a.expr)};" for a in m.statements]
    if m.defines:
        out.append("DEFINE")
        out += [f"  {d} := {to_text(e)};" for d, e in m.defines.items()]
    return "\n".join(out)


def self_compose(module: SmvModule, submodule_name: str = "testmod") -> str:
    """Two copies of ``module`` under shared inputs, with ``CTLSPEC AG state_eq``."""
    params = ", ".join(module.ivars)
    inst = f"{submodule_name}({params})" if module.ivars else submodule_name
    sub = module_text(module, header=f"MODULE {inst}", with_ivars=False)
    main = ["MODULE main"]
    if module.ivars:
        main.append("IVAR")
        main += [f"  {v} : boolean;" for v in module.ivars]
    main += ["VAR", f"  t1 : {inst};", f"  t2 : {inst};", "DEFINE", "  -- Check internal states match"]
    eq = " & ".join(f"(t1.{v} = t2.{v})" for v in module.vars) or "TRUE"
    main.append(f"  state_eq := {eq};")
    return sub + "\n\n" + "\n".join(main) + "\n\nCTLSPEC AG state_eq\n"


def smv_with_ltlspec(module: SmvModule, ltlspec: str) -> str:
    return module_text(module) + "\n\n" + ltlspec + "\n"


def normalize_tokens(text: str) -> list[str]:
    """Comment-free token list, for whitespace-insensitive comparison."""
    return [t.text for t in tokenize(_strip_comments(text))]
