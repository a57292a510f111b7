"""Interface extraction from TLSF files by block scanning.

Only the INFO header and the signal lists are interpreted.  Assumption and
guarantee bodies are kept as text; :func:`invariant_guarantees` recognises
the purely propositional ``G(...)`` ones.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from ..grammar import ParseError
from .boolexpr import BoolExpr, parse_expr
from .errors import SyntaxFail


@dataclass
class TlsfInterface:
    title: str
    semantics: str
    target: str
    inputs: list[str]
    outputs: list[str]
    guarantees: str = ""
    assumptions: str = ""
    extra_blocks: dict[str, str] = field(default_factory=dict)

    @property
    def signals(self) -> list[str]:
        return self.inputs + self.outputs


def _strip_comments(text: str) -> str:
    text = re.sub(r"/\*.*?\*/", lambda m: " " * len(m.group(0)), text, flags=re.S)
    return re.sub(r"//[^\n]*", "", text)


def _block(text: str, name: str) -> tuple[str, int] | None:
    m = re.search(rf"\b{name}\s*\{{", text)
    if not m:
        return None
    depth, i = 1, m.end()
    while i < len(text) and depth:
        if text[i] == "{":
            depth += 1
        elif text[i] == "}":
            depth -= 1
        i += 1
    if depth:
        raise ParseError(f"unterminated {name} block", m.start(), text)
    return text[m.end():i - 1], m.start()


def _signal_list(body: str, name: str, text: str, pos: int) -> list[str]:
    out = []
    for decl in body.split(";"):
        decl = decl.strip()
        if not decl:
            continue
        if not re.fullmatch(r"[A-Za-z_][\w']*", decl):
            raise ParseError(f"{name}: unsupported declaration {decl!r}", pos, text)
        out.append(decl)
    return out


def parse_tlsf_interface(text: str) -> TlsfInterface:
    src = _strip_comments(text)
    info = _block(src, "INFO")
    fields = {}
    if info:
        for m in re.finditer(r"(\w+)\s*:\s*(\"[^\"]*\"|[^\n]*)", info[0]):
            fields[m.group(1).upper()] = m.group(2).strip().strip('"')
    main = _block(src, "MAIN")
    scope = main[0] if main else src
    blocks = {}
    for name in ("INPUTS", "OUTPUTS", "GUARANTEES", "ASSUMPTIONS", "ASSERT", "INVARIANTS",
                 "ASSUME", "PRESET", "REQUIRE", "INITIALLY"):
        b = _block(scope, name)
        if b is not None:
            blocks[name] = b
    for required in ("INPUTS", "OUTPUTS"):
        if required not in blocks:
            raise ParseError(f"missing {required} block", 0, text)
    ins = _signal_list(blocks["INPUTS"][0], "INPUTS", text, blocks["INPUTS"][1])
    outs = _signal_list(blocks["OUTPUTS"][0], "OUTPUTS", text, blocks["OUTPUTS"][1])
    seen = set()
    for s in ins + outs:
        if s in seen:
            raise ParseError(f"signal {s} declared twice", 0, text)
        seen.add(s)

    def first_word(key):
        v = fields.get(key, "Mealy")
        return v.split(",")[0].strip() or "Mealy"

    extra = {k: v[0].strip() for k, v in blocks.items()
             if k not in ("INPUTS", "OUTPUTS", "GUARANTEES", "ASSUMPTIONS")}
    return TlsfInterface(fields.get("TITLE", ""), first_word("SEMANTICS"), first_word("TARGET"),
                         ins, outs, blocks.get("GUARANTEES", ("",))[0].strip(),
                         blocks.get("ASSUMPTIONS", ("",))[0].strip(), extra)


def split_formulas(body: str) -> list[str]:
    return [f.strip() for f in body.split(";") if f.strip()]


def _unwrap_globally(f: str) -> str | None:
    m = re.match(r"G\s*\(", f)
    if not m:
        m2 = re.match(r"G\s+(.*)$", f, re.S)
        return m2.group(1) if m2 else None
    depth, i = 1, m.end()
    while i < len(f) and depth:
        depth += {"(": 1, ")": -1}.get(f[i], 0)
        i += 1
    if depth or f[i:].strip():
        return None
    return f[m.end():i - 1]


_TEMPORAL = re.compile(r"\b[XFGUWR]\b")


def invariant_guarantees(iface: TlsfInterface) -> list[BoolExpr] | None:
    """Guarantees as propositional invariants, or None when any needs full LTL.

    Assumptions, other requirement blocks, or a guarantee that is not
    ``G(p)`` with propositional ``p`` all return None.
    """
    if iface.assumptions.strip() or iface.extra_blocks:
        return None
    out = []
    for f in split_formulas(iface.guarantees):
        inner = _unwrap_globally(f)
        if inner is None or _TEMPORAL.search(inner):
            return None
        try:
            out.append(parse_expr(inner, "tlsf"))
        except SyntaxFail:
            return None
    return out


_LTL_MAP = {"&&": "&", "||": "|", "true": "TRUE", "false": "FALSE"}


def to_nuxmv_ltl(iface: TlsfInterface) -> str:
    """A single LTLSPEC line equivalent to the TLSF requirements."""
    def conv(s: str) -> str:
        return re.sub(r"&&|\|\||\btrue\b|\bfalse\b", lambda m: _LTL_MAP[m.group(0)], s)

    gs = [f"({conv(f)})" for f in split_formulas(iface.guarantees)] or ["TRUE"]
    body = " & ".join(gs)
    assumptions = split_formulas(iface.assumptions)
    if assumptions:
        body = "(" + " & ".join(f"({conv(a)})" for a in assumptions) + f") -> ({body})"
    return f"LTLSPEC {body}"
