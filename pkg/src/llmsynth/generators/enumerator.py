"""Deterministic candidate streams that never repeat themselves."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Callable, Iterator, Sequence

from ..grammar import Grammar, Term, _compositions
from ..harness import Exhausted


@dataclass(frozen=True)
class EnumeratorState:
    grammar: Grammar
    nt: str
    size: int = 1
    index: int = 0

    @classmethod
    def start(cls, grammar: Grammar, nt: str | None = None) -> "EnumeratorState":
        return cls(grammar, nt or grammar.start)


def enumerate_next(state: EnumeratorState) -> tuple[Term, EnumeratorState]:
    """Next term in size order; raises Exhausted once a finite language is used up."""
    table = state.grammar._table
    bound = table.max_size(state.nt)
    size, index = state.size, state.index
    while True:
        if bound is not None and size > bound:
            raise Exhausted(f"language of {state.nt} has no terms above size {bound}")
        terms = table.terms(state.nt, size)
        if index < len(terms):
            return terms[index], EnumeratorState(state.grammar, state.nt, size, index + 1)
        size, index = size + 1, 0


def iter_terms(grammar: Grammar, nt: str | None = None) -> Iterator[Term]:
    state = EnumeratorState.start(grammar, nt)
    while True:
        try:
            term, state = enumerate_next(state)
        except Exhausted:
            return
        yield term


def product_by_size(sized: Sequence[Callable[[int], list]], bounds: Sequence[int | None]) -> Iterator[tuple]:
    """Tuples drawn from several size-indexed pools, by nondecreasing total size.

    ``sized[i](n)`` lists component i's items of exact size n.  A bound of
    None means the component is unbounded.
    """
    k = len(sized)
    if k == 0:
        yield ()
        return
    limit = None if any(b is None for b in bounds) else sum(bounds)
    total = k
    while limit is None or total <= limit:
        for split in _compositions(total, k):
            if any(b is not None and s > b for s, b in zip(split, bounds)):
                continue
            pools = [sized[i](s) for i, s in enumerate(split)]
            if all(pools):
                yield from itertools.product(*pools)
        total += 1


class EnumerativeGenerator:
    """Generator handle over a fixed candidate stream; ignores the prompt."""

    def __init__(self, candidates: Iterator[str]):
        self._it = iter(candidates)
        self.calls = 0

    def generate(self, prompt: str, timeout: float) -> str:
        self.calls += 1
        try:
            return next(self._it)
        except StopIteration:
            raise Exhausted("candidate stream exhausted") from None


def sygus_stream(problem) -> Iterator[str]:
    """define-fun texts for every synth-fun, jointly enumerated from their grammars."""
    funs = problem.synth_funs
    for f in funs:
        if f.grammar is None:
            raise ValueError(f"synth-fun {f.name} has no grammar to enumerate")
    tables = [f.grammar._table for f in funs]
    sized = [lambda n, t=t, f=f: t.terms(f.grammar.start, n) for t, f in zip(tables, funs)]
    bounds = [t.max_size(f.grammar.start) for t, f in zip(tables, funs)]
    for bodies in product_by_size(sized, bounds):
        yield "\n".join(f.define_fun(body) for f, body in zip(funs, bodies))


def tla_stream(sketch) -> Iterator[str]:
    """JSON hole mappings over the hole grammars, by total token count."""
    sized = [lambda n, h=h: h.grammar.sentences(n) for h in sketch.holes]
    bounds = [h.grammar.max_length() for h in sketch.holes]
    for fills in product_by_size(sized, bounds):
        yield json.dumps({h.hole_id: text for h, text in zip(sketch.holes, fills)})


class ReplayGenerator:
    """Replays canned responses in order, cycling when it runs out.

    Useful for re-running recorded model output and as a test stub.
    """

    def __init__(self, responses: Sequence[str], cycle: bool = True):
        if not responses:
            raise ValueError("need at least one response to replay")
        self.responses = list(responses)
        self.cycle = cycle
        self.calls = 0
        self.prompts: list[str] = []

    def generate(self, prompt: str, timeout: float) -> str:
        self.prompts.append(prompt)
        i = self.calls
        self.calls += 1
        if i >= len(self.responses):
            if not self.cycle:
                raise Exhausted("no more recorded responses")
            i %= len(self.responses)
        return self.responses[i]
