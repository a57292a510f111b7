"""TLA+ sketches with holes, JSON hole mappings, and the hole-grammar check.

Hole values are TLA+ expressions, not s-expressions, so they are read with a
permissive infix tokenizer into token trees: bracketed runs ``( )``, ``[ ]``,
``{ }`` and ``<< >>`` become nested groups, everything else is a flat token.
A hole grammar's alternatives are token trees too.  A nonterminal in an
alternative matches any nonempty run of sibling items it derives; terminals
match one identical token; a group matches a group with the same brackets
whose children match.  Parentheses therefore have to appear exactly where
the grammar puts them.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Union

from .adapters import ExternalChecker
from .grammar import _compositions
from .harness import Verdict, VerdictKind, cache_key

MARKER_FORMAT = "<<HOLE:{}>>"


class SketchError(ValueError):
    pass


class SyntaxFail(SketchError):
    pass


class KeyMismatch(SyntaxFail):
    pass


class GrammarFail(SketchError):
    def __init__(self, hole_id: str, message: str | None = None):
        self.hole_id = hole_id
        super().__init__(message or f"value for {hole_id} does not conform to its grammar")


# --------------------------------------------------------------------------
# token trees

@dataclass(frozen=True)
class Group:
    open: str
    items: tuple

    @property
    def close(self) -> str:
        return _BRACKETS[self.open]


Item = Union[str, Group]
_BRACKETS = {"(": ")", "[": "]", "{": "}", "<<": ">>"}
_CLOSERS = {v: k for k, v in _BRACKETS.items()}

_TLA_TOKEN = re.compile(r"""
    \s*(
      "(?:[^"\\]|\\.)*"                    # string
    | \\[A-Za-z]+                          # \in, \A, \union, ...
    | /\\ | \\/                            # conjunction, disjunction
    | <<|>>|<=>|=>|==|/=|\|->|->|<-|:>|@@|\.\.\.?|>=|=<|<=|~>|<>|::=|:=
    | [A-Za-z_][A-Za-z0-9_]*'?             # identifier, possibly primed
    | \d+
    | \S
    )""", re.X)


def tokenize_tla(text: str) -> list[str]:
    toks = []
    i = 0
    while i < len(text):
        m = _TLA_TOKEN.match(text, i)
        if not m:
            break
        toks.append(m.group(1))
        i = m.end()
    return [t for t in toks if t]


def token_tree(text: str) -> tuple[Item, ...]:
    """Nest bracketed runs; SyntaxFail on unbalanced brackets."""
    stack: list[tuple[str, list]] = [("", [])]
    for t in tokenize_tla(text):
        if t in _BRACKETS:
            stack.append((t, []))
        elif t in _CLOSERS:
            opener, items = stack.pop() if len(stack) > 1 else (None, None)
            if opener != _CLOSERS[t]:
                raise SyntaxFail(f"unbalanced {t!r} in {text!r}")
            stack[-1][1].append(Group(opener, tuple(items)))
        else:
            stack[-1][1].append(t)
    if len(stack) != 1:
        raise SyntaxFail(f"unclosed {stack[-1][0]!r} in {text!r}")
    return tuple(stack[0][1])


def token_count(items) -> int:
    return sum(2 + token_count(i.items) if isinstance(i, Group) else 1 for i in items)


def render(items) -> str:
    """Single-spaced text that tokenizes back to the same tree."""
    out: list[str] = []
    for it in items:
        if isinstance(it, Group):
            inner = render(it.items)
            out.append(f"{it.open}{inner}{it.close}" if it.open != "<<" else f"<<{inner}>>")
        else:
            out.append(it)
    text = " ".join(out)
    return re.sub(r" ,", ",", text)


# --------------------------------------------------------------------------
# hole grammars

@dataclass(eq=False)
class HoleGrammar:
    start: str
    rules: dict[str, tuple[tuple[Item, ...], ...]]

    @classmethod
    def from_json(cls, obj: dict) -> "HoleGrammar":
        try:
            start = obj["start"]
            raw = obj["rules"]
        except (KeyError, TypeError):
            raise SketchError("hole grammar needs 'start' and 'rules'") from None
        if start not in raw:
            raise SketchError(f"start symbol {start} has no rules")
        rules = {}
        for nt, alts in raw.items():
            if isinstance(alts, str):
                alts = [alts]
            if not alts:
                raise SketchError(f"nonterminal {nt} has no alternatives")
            rules[nt] = tuple(token_tree(a) for a in alts)
            for alt in rules[nt]:
                if not alt:
                    raise SketchError(f"empty alternative for {nt}")
        return cls(start, rules)

    def to_text(self) -> str:
        return "\n".join(f"{nt} ::= " + " | ".join(render(a) for a in alts) for nt, alts in self.rules.items())

    def _is_nt(self, item) -> bool:
        return isinstance(item, str) and item in self.rules

    @cached_property
    def _unit_closure(self) -> dict[str, tuple[str, ...]]:
        out = {}
        for nt in self.rules:
            seen, todo = [nt], [nt]
            while todo:
                n = todo.pop()
                for alt in self.rules[n]:
                    if len(alt) == 1 and self._is_nt(alt[0]) and alt[0] not in seen:
                        seen.append(alt[0])
                        todo.append(alt[0])
            out[nt] = tuple(seen)
        return out

    def _alts(self, nt: str):
        for n in self._unit_closure[nt]:
            for alt in self.rules[n]:
                if not (len(alt) == 1 and self._is_nt(alt[0])):
                    yield alt

    # membership -------------------------------------------------------------

    def derives(self, items, nt: str | None = None) -> bool:
        memo: dict = {}
        return self._derives(nt or self.start, tuple(items), memo)

    def _derives(self, nt, items, memo) -> bool:
        key = ("nt", nt, items)
        if key not in memo:
            memo[key] = bool(items) and any(self._match(alt, items, memo) for alt in self._alts(nt))
        return memo[key]

    def _match(self, pattern, items, memo) -> bool:
        key = ("pat", pattern, items)
        if key in memo:
            return memo[key]
        if not pattern:
            res = not items
        elif not items or len(items) < len(pattern):
            res = False
        else:
            p, rest = pattern[0], pattern[1:]
            if self._is_nt(p):
                res = any(self._derives(p, items[:k], memo) and self._match(rest, items[k:], memo)
                          for k in range(1, len(items) - len(rest) + 1))
            elif isinstance(p, Group):
                it = items[0]
                res = (isinstance(it, Group) and it.open == p.open and self._match(p.items, it.items, memo)
                       and self._match(rest, items[1:], memo))
            else:
                res = items[0] == p and self._match(rest, items[1:], memo)
        memo[key] = res
        return res

    # generation -------------------------------------------------------------

    @cached_property
    def _gen_memo(self) -> dict:
        return {}

    def _lang(self, nt: str, n: int) -> list[tuple]:
        key = ("nt", nt, n)
        memo = self._gen_memo
        if key not in memo:
            # unit productions are folded into the closure, so every nested call is for fewer tokens
            out, seen = [], set()
            for alt in self._alts(nt):
                for s in self._gen(alt, n):
                    if s not in seen:
                        seen.add(s)
                        out.append(s)
            memo[key] = out
        return memo[key]

    def _gen(self, pattern, n: int) -> list[tuple]:
        if not pattern:
            return [()] if n == 0 else []
        k = len(pattern)
        if n < k:
            return []
        results = []
        for split in _compositions(n, k) if k > 1 else [(n,)]:
            pools = []
            for p, size in zip(pattern, split):
                if self._is_nt(p):
                    pools.append(self._lang(p, size))
                elif isinstance(p, Group):
                    pools.append([(Group(p.open, inner),) for inner in self._gen(p.items, size - 2)]
                                 if size >= 2 else [])
                else:
                    pools.append([(p,)] if size == 1 else [])
                if not pools[-1]:
                    break
            else:
                acc = [()]
                for pool in pools:
                    acc = [a + b for a in acc for b in pool]
                results.extend(acc)
        return results

    def sentences(self, n: int) -> list[str]:
        """Rendered members of the start language with exactly n tokens, brackets included."""
        return [render(s) for s in self._lang(self.start, n)]

    def trees(self, n: int) -> list[tuple]:
        return list(self._lang(self.start, n))

    def max_length(self) -> int | None:
        """Longest member in tokens, or None when the language is infinite."""
        if self._infinite():
            return None
        best: dict[str, int] = {}

        def item_max(item) -> int:
            if isinstance(item, Group):
                return 2 + sum(item_max(i) for i in item.items)
            if self._is_nt(item):
                return nt_max(item)
            return 1

        def nt_max(nt) -> int:
            if nt not in best:
                best[nt] = max(sum(item_max(i) for i in alt) for alt in self._alts(nt))
            return best[nt]

        return nt_max(self.start)

    def _infinite(self) -> bool:
        # any cycle through a non-unit alternative makes the language infinite
        edges: dict[str, set[str]] = {nt: set() for nt in self.rules}

        def nts(items):
            for i in items:
                if isinstance(i, Group):
                    yield from nts(i.items)
                elif self._is_nt(i):
                    yield i

        for nt in self.rules:
            for alt in self._alts(nt):
                edges[nt].update(nts(alt))
        reach = {self.start}
        todo = [self.start]
        while todo:
            n = todo.pop()
            for m in edges[n]:
                if m not in reach:
                    reach.add(m)
                    todo.append(m)
        for nt in reach:
            seen, todo = set(), list(edges[nt])
            while todo:
                m = todo.pop()
                if m == nt:
                    return True
                if m not in seen:
                    seen.add(m)
                    todo.extend(edges[m])
        return False


# --------------------------------------------------------------------------
# sketches and mappings

@dataclass
class Hole:
    hole_id: str
    grammar: HoleGrammar
    action_name: str = ""
    marker: str = ""

    def __post_init__(self):
        if not self.marker:
            self.marker = MARKER_FORMAT.format(self.hole_id)


@dataclass
class Sketch:
    text: str
    holes: list[Hole] = field(default_factory=list)
    properties: str = ""
    name: str = ""

    def __post_init__(self):
        ids = [h.hole_id for h in self.holes]
        if len(set(ids)) != len(ids):
            raise SketchError("hole ids must be unique")
        for h in self.holes:
            n = self.text.count(h.marker)
            if n != 1:
                raise SketchError(f"marker {h.marker} occurs {n} times in the sketch, expected once")

    @property
    def hole_ids(self) -> list[str]:
        return [h.hole_id for h in self.holes]

    def hole(self, hole_id: str) -> Hole:
        for h in self.holes:
            if h.hole_id == hole_id:
                return h
        raise KeyError(hole_id)


@dataclass(frozen=True)
class HoleTerm:
    text: str
    items: tuple

    @classmethod
    def parse(cls, text: str) -> "HoleTerm":
        items = token_tree(text)
        if not items:
            raise SyntaxFail("empty hole value")
        return cls(text.strip(), items)

    def canonical(self) -> str:
        return render(self.items)


@dataclass
class HoleMapping:
    values: dict[str, HoleTerm]

    def canonical(self) -> str:
        return json.dumps({k: v.canonical() for k, v in self.values.items()}, sort_keys=True)

    def key(self) -> str:
        return cache_key(self.canonical())


def parse_mapping(json_text: str, sketch: Sketch) -> HoleMapping:
    try:
        obj = json.loads(json_text)
    except json.JSONDecodeError as exc:
        raise SyntaxFail(f"invalid JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise SyntaxFail("hole mapping must be a JSON object")
    want, got = set(sketch.hole_ids), set(obj)
    if want != got:
        parts = []
        if want - got:
            parts.append("missing " + ", ".join(sorted(want - got)))
        if got - want:
            parts.append("unexpected " + ", ".join(sorted(got - want)))
        raise KeyMismatch("hole mapping keys do not match the sketch: " + "; ".join(parts))
    values = {}
    for hid in sketch.hole_ids:
        v = obj[hid]
        if not isinstance(v, str):
            raise SyntaxFail(f"value for {hid} must be a string")
        values[hid] = HoleTerm.parse(v)
    return HoleMapping(values)


def check_mapping_grammar(mapping: HoleMapping, sketch: Sketch) -> None:
    for h in sketch.holes:
        if not h.grammar.derives(mapping.values[h.hole_id].items):
            raise GrammarFail(h.hole_id, f"value for {h.hole_id} ({mapping.values[h.hole_id].text!r}) "
                                         f"is not derivable from its grammar")


def substitute(sketch: Sketch, mapping: HoleMapping | dict) -> str:
    """Replace every marker with its value; markers are disjoint so order is irrelevant."""
    values = mapping.values if isinstance(mapping, HoleMapping) else mapping
    text = sketch.text
    for h in sketch.holes:
        v = values[h.hole_id]
        text = text.replace(h.marker, v.text if isinstance(v, HoleTerm) else str(v).strip())
    return text


def verify_completed(module_text: str, properties: str, adapter, deadline: float, *,
                     cache: dict | None = None, key: str | None = None, filename: str | None = None,
                     params: dict | None = None) -> Verdict:
    """Run the external checker on a completed module, memoised by ``key``."""
    if cache is not None and key is not None and key in cache:
        return cache[key]
    extra = {"MC.cfg": properties} if properties else {}
    v = adapter.run(module_text, deadline, extra, filename=filename, params=params)
    if cache is not None and key is not None and v.kind in (VerdictKind.PASS, VerdictKind.SEMANTIC_FAIL):
        cache[key] = v
    return v


def module_filename(text: str) -> str | None:
    m = re.search(r"-{4,}\s*MODULE\s+(\w+)", text)
    return f"{m.group(1)}.tla" if m else None


# --------------------------------------------------------------------------
# bundles and verifier

def load_sketch_bundle(path) -> tuple[Sketch, dict]:
    """Read ``<name>.tla`` plus its ``<name>.json`` sidecar.

    The sidecar holds ``holes`` (id, action, grammar, optional marker),
    ``properties`` (prompt text), optional ``cfg`` (checker config file
    text) and optional ``checker`` settings.
    """
    path = Path(path)
    tla = path if path.suffix == ".tla" else path.with_suffix(".tla")
    side = tla.with_suffix(".json")
    meta = json.loads(side.read_text())
    holes = [Hole(h["id"], HoleGrammar.from_json(h["grammar"]), h.get("action", ""), h.get("marker", ""))
             for h in meta.get("holes", [])]
    sketch = Sketch(tla.read_text(), holes, meta.get("properties", ""), tla.stem)
    return sketch, meta


def sketch_aux(sketch: Sketch, meta: dict | None = None, relaxed: bool = False) -> dict:
    """Benchmark payload used by the prompt builder and the verifier."""
    meta = meta or {}
    return {
        "sketch": sketch,
        "holes": [{"id": h.hole_id, "action": h.action_name, "grammar_text": h.grammar.to_text()}
                  for h in sketch.holes],
        "properties": sketch.properties,
        "cfg": meta.get("cfg", ""),
        "relaxed": relaxed,
    }


class TlaSketchVerifier:
    """Mapping parse, grammar gate (unless relaxed), substitution, external check."""

    domains = ("TlaSketch",)

    def __init__(self, checker: ExternalChecker | None = None, *, relaxed: bool = False, workers: int = 8):
        self.checker = checker
        self.relaxed = relaxed
        self.workers = workers
        self.caches: dict[str, dict] = {}
        self.checker_calls = 0

    def verify(self, benchmark, candidate: str, timeout: float) -> Verdict:
        aux = benchmark.aux or {}
        sketch: Sketch = aux["sketch"]
        try:
            mapping = parse_mapping(candidate, sketch)
        except SyntaxFail as exc:
            return Verdict(VerdictKind.SYNTAX_FAIL, str(exc))
        if not (self.relaxed or aux.get("relaxed")):
            try:
                check_mapping_grammar(mapping, sketch)
            except GrammarFail as exc:
                return Verdict(VerdictKind.GRAMMAR_FAIL, str(exc))
        if self.checker is None:
            return Verdict(VerdictKind.VERIFY_TIMEOUT, "no model checker configured")
        text = substitute(sketch, mapping)
        cache = self.caches.setdefault(benchmark.id, {})
        key = mapping.key()
        if key not in cache:
            self.checker_calls += 1
        return verify_completed(text, aux.get("cfg", ""), self.checker, timeout, cache=cache, key=key,
                                filename=module_filename(text), params={"workers": self.workers})
