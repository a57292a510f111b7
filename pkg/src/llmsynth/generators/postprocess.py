"""Pull the candidate out of a raw model response.

Extraction only cuts; it never rewrites what the model wrote, so feeding an
extracted candidate back through :func:`postprocess` returns it unchanged.
"""

from __future__ import annotations

import json
import re

from ..grammar import ParseError, parse_sexprs, top_level_spans
from ..harness import CandidateRejected, Domain, VerdictKind

_FENCE = re.compile(r"```[^\n`]*\n(.*?)(?:```|\Z)", re.S)


def first_fenced_block(text: str) -> str | None:
    m = _FENCE.search(text)
    return m.group(1) if m else None


def _syntax_fail(msg: str):
    return CandidateRejected(VerdictKind.SYNTAX_FAIL, msg)


def extract_aiger(raw: str) -> str:
    """Text from the REALIZABLE line through the end of the AIGER body."""
    m = re.search(r"^[ \t]*REALIZABLE[ \t]*\r?$", raw, re.M)
    if not m:
        if re.search(r"^\s*aag\s", raw, re.M):
            raise _syntax_fail("Missing REALIZABLE header")
        raise _syntax_fail("no AIGER circuit in response")
    body = raw[m.start():]
    fence = body.find("```")
    if fence >= 0:
        body = body[:fence]
    return body.strip()


def extract_smv(raw: str) -> str:
    block = first_fenced_block(raw)
    text = (block if block is not None else raw).strip()
    if not text:
        raise _syntax_fail("empty SMV response")
    return text


def _forms(text: str):
    try:
        spans = top_level_spans(text)
    except ParseError as exc:
        raise _syntax_fail(str(exc)) from None
    return [text[a:b] for a, b in spans]


def extract_define_funs(raw: str) -> str:
    """All top-level define-fun forms, from the first code block if any.

    Prose around the forms is tolerated; each form must be balanced.
    """
    block = first_fenced_block(raw)
    text = block if block is not None else raw
    found = []
    for m in re.finditer(r"\(\s*define-fun\b", text):
        start = m.start()
        if any(a <= start < b for a, b in found):
            continue
        depth, i = 0, start
        while i < len(text):
            c = text[i]
            if c == "(":
                depth += 1
            elif c == ")":
                depth -= 1
                if depth == 0:
                    break
            elif c == ";":
                nl = text.find("\n", i)
                i = len(text) if nl < 0 else nl
                continue
            elif c == '"':
                j = text.find('"', i + 1)
                i = len(text) if j < 0 else j
            i += 1
        if depth != 0:
            raise _syntax_fail("unbalanced parentheses in define-fun")
        found.append((start, i + 1))
    if not found:
        raise _syntax_fail("no define-fun form in response")
    return "\n".join(text[a:b] for a, b in found)


def extract_json_object(raw: str) -> str:
    text = raw.strip()
    block = first_fenced_block(text)
    if block is not None and text.startswith("```"):
        text = block.strip()
    try:
        value = json.loads(text)
    except json.JSONDecodeError as exc:
        raise _syntax_fail(f"invalid JSON: {exc}") from None
    if not isinstance(value, dict):
        raise _syntax_fail("JSON response is not an object")
    return text


def extract_sexprs(raw: str) -> str:
    text = raw.strip()
    block = first_fenced_block(text)
    if block is not None and text.startswith("```"):
        text = block.strip()
    forms = _forms(text)
    if not forms:
        raise _syntax_fail("no s-expression in response")
    try:
        parse_sexprs(text)
    except ParseError as exc:
        raise _syntax_fail(str(exc)) from None
    return "\n".join(forms)


def postprocess(raw_response: str, domain, *, output_format: str | None = None) -> str:
    """Return the candidate text, or raise CandidateRejected(SyntaxFail)."""
    domain = Domain(domain)
    if domain is Domain.REACTIVE:
        if (output_format or "smv") == "aiger":
            return extract_aiger(raw_response)
        return extract_smv(raw_response)
    if domain is Domain.SYGUS:
        return extract_define_funs(raw_response)
    if domain is Domain.TLA_SKETCH:
        return extract_json_object(raw_response)
    return extract_sexprs(raw_response)
