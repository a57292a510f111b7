"""S-expression terms, production grammars, derivability and enumeration.

Terms are immutable trees of :class:`Atom` and :class:`SList`.  A
:class:`Grammar` maps nonterminal names to right-hand-side *patterns*, which
are ordinary terms whose atoms may name nonterminals.  Any atom that is not a
declared nonterminal is a literal.

Term size is the number of s-expression nodes, counting both atoms and lists,
so ``(f x)`` has size 3.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, Sequence, Union


class ParseError(ValueError):
    """Malformed s-expression text.  ``pos`` is a character offset."""

    def __init__(self, message: str, pos: int | None = None, text: str | None = None):
        self.pos = pos
        self.line = self.col = None
        if pos is not None and text is not None:
            self.line = text.count("\n", 0, pos) + 1
            self.col = pos - (text.rfind("\n", 0, pos) + 1) + 1
            message = f"{message} (line {self.line}, column {self.col})"
        super().__init__(message)


class GrammarError(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class Atom:
    text: str

    def __post_init__(self):
        if not self.text:
            raise ValueError("atoms must be nonempty")

    def __str__(self) -> str:
        return self.text


@dataclass(frozen=True, slots=True)
class SList:
    children: tuple = ()

    def __str__(self) -> str:
        return "(" + " ".join(str(c) for c in self.children) + ")"

    def __len__(self) -> int:
        return len(self.children)

    def __iter__(self):
        return iter(self.children)

    def __getitem__(self, i):
        return self.children[i]

    @property
    def head(self) -> str | None:
        if self.children and isinstance(self.children[0], Atom):
            return self.children[0].text
        return None


Term = Union[Atom, SList]


def lst(*children) -> SList:
    """Build a list term; string arguments become atoms."""
    return SList(tuple(Atom(c) if isinstance(c, str) else c for c in children))


def term_size(t: Term) -> int:
    if isinstance(t, Atom):
        return 1
    return 1 + sum(term_size(c) for c in t.children)


def term_depth(t: Term) -> int:
    if isinstance(t, Atom):
        return 1
    return 1 + max((term_depth(c) for c in t.children), default=0)


def atoms(t: Term) -> Iterator[str]:
    if isinstance(t, Atom):
        yield t.text
    else:
        for c in t.children:
            yield from atoms(c)


# --------------------------------------------------------------------------
# parsing

_DELIMS = set("()';\"|") | set(" \t\r\n\f\v")


def _tokenize(text: str):
    """Yield (kind, value, pos); kinds are '(' ')' 'quote' 'atom'."""
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
        elif c == ";":
            j = text.find("\n", i)
            i = n if j < 0 else j + 1
        elif c in "()":
            yield c, c, i
            i += 1
        elif c == "'":
            yield "quote", c, i
            i += 1
        elif c == '"':
            j = i + 1
            while True:
                if j >= n:
                    raise ParseError("unterminated string literal", i, text)
                if text[j] == '"':
                    # SMT-LIB escapes a quote by doubling it
                    if j + 1 < n and text[j + 1] == '"':
                        j += 2
                        continue
                    break
                if text[j] == "\\" and j + 1 < n:
                    j += 2
                    continue
                j += 1
            yield "atom", text[i:j + 1], i
            i = j + 1
        elif c == "|":
            j = text.find("|", i + 1)
            if j < 0:
                raise ParseError("unterminated quoted symbol", i, text)
            yield "atom", text[i:j + 1], i
            i = j + 1
        else:
            j = i
            while j < n and text[j] not in _DELIMS:
                j += 1
            yield "atom", text[i:j], i
            i = j


def parse_sexprs(text: str) -> list[Term]:
    """Parse every top-level s-expression in ``text``.

    Line comments starting with ``;`` are dropped, string literals and
    ``|quoted symbols|`` stay single atoms, and ``'x`` reads as ``(quote x)``.
    """
    stack: list[tuple[list, int]] = []
    out: list[Term] = []
    pending_quotes: list[list[int]] = [[]]

    def emit(term: Term):
        while pending_quotes[-1]:
            pending_quotes[-1].pop()
            term = SList((Atom("quote"), term))
        if stack:
            stack[-1][0].append(term)
        else:
            out.append(term)

    for kind, value, pos in _tokenize(text):
        if kind == "(":
            stack.append(([], pos))
            pending_quotes.append([])
        elif kind == ")":
            if not stack:
                raise ParseError("unexpected ')'", pos, text)
            if pending_quotes[-1]:
                raise ParseError("quote without a datum", pos, text)
            pending_quotes.pop()
            items, _ = stack.pop()
            emit(SList(tuple(items)))
        elif kind == "quote":
            pending_quotes[-1].append(pos)
        else:
            emit(Atom(value))
    if stack:
        raise ParseError("unbalanced parentheses: missing ')' at end of input", len(text), text)
    if pending_quotes[-1]:
        raise ParseError("quote without a datum", pending_quotes[-1][-1], text)
    return out


def parse_sexpr(text: str) -> Term:
    """Parse exactly one s-expression."""
    terms = parse_sexprs(text)
    if not terms:
        raise ParseError("empty input", len(text), text)
    if len(terms) > 1:
        # locate the start of the stray token for the error position
        toks = list(_tokenize(text))
        depth, seen = 0, 0
        for kind, _, pos in toks:
            if depth == 0 and kind in ("(", "atom"):
                seen += 1
                if seen == 2:
                    raise ParseError("stray tokens after expression", pos, text)
            if kind == "(":
                depth += 1
            elif kind == ")":
                depth -= 1
        raise ParseError("stray tokens after expression", None)
    return terms[0]


def top_level_spans(text: str) -> list[tuple[int, int]]:
    """Character spans of the top-level forms in ``text`` (comments skipped)."""
    spans = []
    depth, start = 0, None
    quote_start = None
    for kind, value, pos in _tokenize(text):
        if kind == "quote":
            if depth == 0 and quote_start is None:
                quote_start = pos
            continue
        if kind == "(":
            if depth == 0:
                start = pos if quote_start is None else quote_start
            depth += 1
        elif kind == ")":
            depth -= 1
            if depth < 0:
                raise ParseError("unexpected ')'", pos, text)
            if depth == 0:
                spans.append((start, pos + 1))
                quote_start = None
        elif depth == 0:
            s = pos if quote_start is None else quote_start
            spans.append((s, pos + len(value)))
            quote_start = None
    if depth:
        raise ParseError("unbalanced parentheses: missing ')' at end of input", len(text), text)
    return spans


# --------------------------------------------------------------------------
# grammars

@dataclass(frozen=True, eq=False)
class Grammar:
    """Productions keyed by nonterminal; ``rules`` keeps declaration order."""

    start: str
    rules: dict[str, tuple[Term, ...]]
    sorts: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.start not in self.rules:
            raise GrammarError(f"start symbol {self.start!r} is not declared")
        for nt, prods in self.rules.items():
            if not isinstance(prods, tuple):
                object.__setattr__(self, "rules", {k: tuple(v) for k, v in self.rules.items()})
                break
        for nt in self.sorts:
            if nt not in self.rules:
                raise GrammarError(f"sort given for undeclared nonterminal {nt!r}")

    @property
    def nonterminals(self) -> tuple[str, ...]:
        return tuple(self.rules)

    def is_nonterminal(self, t: Term) -> bool:
        return isinstance(t, Atom) and t.text in self.rules

    def holes(self, pattern: Term) -> list[str]:
        """Nonterminal leaves of ``pattern`` in pre-order."""
        if isinstance(pattern, Atom):
            return [pattern.text] if pattern.text in self.rules else []
        return [h for c in pattern.children for h in self.holes(c)]

    def fixed_size(self, pattern: Term) -> int:
        """Size of ``pattern`` not counting its nonterminal leaves."""
        if isinstance(pattern, Atom):
            return 0 if pattern.text in self.rules else 1
        return 1 + sum(self.fixed_size(c) for c in pattern.children)

    @cached_property
    def _proper_productions(self) -> dict[str, tuple[Term, ...]]:
        """Non-unit productions reachable from each nonterminal through unit steps."""
        out = {}
        for nt in self.rules:
            seen, todo = {nt}, [nt]
            while todo:
                for p in self.rules[todo.pop()]:
                    if self.is_nonterminal(p) and p.text not in seen:
                        seen.add(p.text)
                        todo.append(p.text)
            out[nt] = tuple(p for a in self.rules if a in seen for p in self.rules[a]
                            if not self.is_nonterminal(p))
        return out

    @cached_property
    def _table(self) -> "_TermTable":
        return _TermTable(self)

    def __str__(self) -> str:
        lines = []
        for nt, prods in self.rules.items():
            lines.append(f"{nt} ::= " + " | ".join(str(p) for p in prods))
        return "\n".join(lines)


def parse_grammar(text: str | Sequence[Term], start: str | None = None) -> Grammar:
    """Read a grammar written as grouped rules.

    Accepts the SyGuS-IF shapes ``((S Int (p1 p2 ...)) (I Int (...)))`` and
    the sort-free ``((S (p1 p2 ...)) ...)``.  The first rule is the start
    symbol unless ``start`` is given.  ``(Constant s)`` and ``(Variable s)``
    productions are rejected.
    """
    groups = parse_sexpr(text) if isinstance(text, str) else SList(tuple(text))
    if not isinstance(groups, SList) or not groups.children:
        raise GrammarError("grammar must be a nonempty list of rule groups")
    rules: dict[str, tuple[Term, ...]] = {}
    sorts: dict[str, str] = {}
    for g in groups:
        if not isinstance(g, SList) or len(g) not in (2, 3) or not isinstance(g[0], Atom):
            raise GrammarError(f"malformed rule group {g}")
        name = g[0].text
        if name in rules:
            raise GrammarError(f"nonterminal {name!r} declared twice")
        if len(g) == 3:
            sorts[name] = str(g[1])
        prods = g[-1]
        if not isinstance(prods, SList):
            raise GrammarError(f"productions of {name!r} must be a list")
        for p in prods:
            if isinstance(p, SList) and p.head in ("Constant", "Variable") and len(p) == 2:
                raise GrammarError(
                    f"unsupported grammar feature ({p.head} ...) in rules for {name!r}")
        rules[name] = tuple(prods.children)
    return Grammar(start or next(iter(rules)), rules, sorts)


# --------------------------------------------------------------------------
# derivability

def derives(grammar: Grammar, nt: str, term: Term, *, memo: bool = True) -> bool:
    """True iff ``term`` is derivable from nonterminal ``nt``.

    Unit productions (a bare nonterminal on the right) are folded into a
    precomputed closure, so every remaining match step descends into a
    strictly smaller subterm.  That makes the check terminate on cyclic
    grammars and keeps the memo, keyed on (nonterminal, subterm identity),
    sound.
    """
    if nt not in grammar.rules:
        raise GrammarError(f"undeclared nonterminal {nt!r}")
    cache: dict | None = {} if memo else None
    return _derives(grammar, nt, term, cache)


def _derives(g: Grammar, nt: str, term: Term, cache) -> bool:
    key = (nt, id(term))
    if cache is not None and key in cache:
        return cache[key]
    result = any(_matches(g, p, term, cache) for p in g._proper_productions[nt])
    if cache is not None:
        cache[key] = result
    return result


def _matches(g: Grammar, pattern: Term, term: Term, cache) -> bool:
    if isinstance(pattern, Atom):
        if pattern.text in g.rules:
            return _derives(g, pattern.text, term, cache)
        return isinstance(term, Atom) and term.text == pattern.text
    if not isinstance(term, SList) or len(term) != len(pattern):
        return False
    return all(_matches(g, p, t, cache) for p, t in zip(pattern.children, term.children))


# --------------------------------------------------------------------------
# enumeration

def _compositions(total: int, parts: int):
    """Tuples of ``parts`` positive ints summing to ``total``, lexicographic."""
    if parts == 0:
        if total == 0:
            yield ()
        return
    if parts == 1:
        if total >= 1:
            yield (total,)
        return
    for first in range(1, total - parts + 2):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def _instantiate(g: Grammar, pattern: Term, subs: Iterator[Term]) -> Term:
    if isinstance(pattern, Atom):
        return next(subs) if pattern.text in g.rules else pattern
    return SList(tuple(_instantiate(g, c, subs) for c in pattern.children))


class _TermTable:
    """Terms of each nonterminal by exact size, in canonical order.

    Within a size the order follows production index, then the size split
    over the production's nonterminal leaves (lexicographic), then the
    cartesian product of the sub-term lists.
    """

    def __init__(self, grammar: Grammar):
        self.g = grammar
        self.by_size: list[dict[str, list[Term]]] = [{nt: [] for nt in grammar.rules}]
        self._shape = {
            nt: [(p, grammar.fixed_size(p), grammar.holes(p)) for p in prods]
            for nt, prods in grammar.rules.items()
        }
        self._analyse()

    def _analyse(self):
        g = self.g
        productive: set[str] = set()
        changed = True
        while changed:
            changed = False
            for nt, shapes in self._shape.items():
                if nt not in productive and any(all(h in productive for h in hs) for _, _, hs in shapes):
                    productive.add(nt)
                    changed = True
        self.productive = productive
        edges: dict[str, set[tuple[str, bool]]] = {nt: set() for nt in g.rules}
        for nt, shapes in self._shape.items():
            for p, _, hs in shapes:
                if all(h in productive for h in hs):
                    unit = isinstance(p, Atom)
                    for h in hs:
                        edges[nt].add((h, unit))
        self._edges = edges

    def reach(self, src: str) -> set[str]:
        seen, todo = {src}, [src]
        while todo:
            for dst, _ in self._edges[todo.pop()]:
                if dst not in seen:
                    seen.add(dst)
                    todo.append(dst)
        return seen

    def max_size(self, nt: str) -> int | None:
        """Largest term size in the language of ``nt``, or None if infinite."""
        if nt not in self.productive:
            return 0
        live = self.reach(nt)
        for a in live:
            for b, unit in self._edges[a]:
                if not unit and a in self.reach(b):
                    return None
        best = {a: 0 for a in live}
        for _ in range(len(live) + 1):
            for a in live:
                for p, fixed, hs in self._shape[a]:
                    if all(h in self.productive for h in hs):
                        best[a] = max(best[a], fixed + sum(best[h] for h in hs))
        return best[nt]

    def terms(self, nt: str, size: int) -> list[Term]:
        while len(self.by_size) <= size:
            self._grow()
        return self.by_size[size][nt]

    def _grow(self):
        n = len(self.by_size)
        level: dict[str, list[Term]] = {nt: [] for nt in self.g.rules}
        seen: dict[str, set[Term]] = {nt: set() for nt in self.g.rules}
        # unit productions refer to the level under construction, so iterate to a fixpoint
        changed = True
        while changed:
            changed = False
            for nt, shapes in self._shape.items():
                for p, fixed, hs in shapes:
                    for t in self._expand(p, fixed, hs, n, level):
                        if t not in seen[nt]:
                            seen[nt].add(t)
                            level[nt].append(t)
                            changed = True
        self.by_size.append(level)

    def _expand(self, p, fixed, hs, n, level):
        if not hs:
            if fixed == n:
                yield p
            return
        if isinstance(p, Atom):
            yield from list(level[p.text])
            return
        for split in _compositions(n - fixed, len(hs)):
            pools = [self.by_size[s][h] if s < n else level[h] for s, h in zip(split, hs)]
            if any(not pool for pool in pools):
                continue
            for combo in itertools.product(*pools):
                yield _instantiate(self.g, p, iter(combo))


def enumerate_terms(grammar: Grammar, nt: str, max_size: int) -> list[Term]:
    """All terms derivable from ``nt`` with size at most ``max_size``."""
    if max_size < 1:
        raise ValueError("max_size must be at least 1")
    if nt not in grammar.rules:
        raise GrammarError(f"undeclared nonterminal {nt!r}")
    table = grammar._table
    out: list[Term] = []
    for n in range(1, max_size + 1):
        out.extend(table.terms(nt, n))
    return out

