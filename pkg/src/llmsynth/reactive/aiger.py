"""ASCII AIGER (``aag``) circuits: parsing, symbol validation, simulation.

Variable numbering is the compact one: inputs ``1..I``, latches
``I+1..I+L``, AND gates ``I+L+1..M`` with ``M = I+L+A``.  Literal ``2v`` is
variable ``v`` and ``2v+1`` its negation; literals 0 and 1 are the
constants.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import GrammarFail, SyntaxFail
from .tlsf import TlsfInterface


@dataclass
class AigerCircuit:
    M: int
    I: int
    L: int
    O: int
    A: int
    input_literals: list[int]
    latches: list[tuple[int, int]]
    output_literals: list[int]
    and_gates: list[tuple[int, int, int]]
    symbols: dict[str, str] = field(default_factory=dict)
    comments: list[str] = field(default_factory=list)
    realizable: bool = False

    def __post_init__(self):
        self._order = _topological(self)

    @property
    def combinational(self) -> bool:
        return self.L == 0

    def input_names(self) -> list[str]:
        return [self.symbols.get(f"i{k}", f"i{k}") for k in range(self.I)]

    def output_names(self) -> list[str]:
        return [self.symbols.get(f"o{k}", f"o{k}") for k in range(self.O)]

    def latch_names(self) -> list[str]:
        return [self.symbols.get(f"l{k}", f"l{k}") for k in range(self.L)]

    def to_text(self) -> str:
        lines = ["REALIZABLE"] if self.realizable else []
        lines.append(f"aag {self.M} {self.I} {self.L} {self.O} {self.A}")
        lines += [str(x) for x in self.input_literals]
        lines += [f"{a} {b}" for a, b in self.latches]
        lines += [str(x) for x in self.output_literals]
        lines += [f"{a} {b} {c}" for a, b, c in self.and_gates]
        lines += [f"{k} {v}" for k, v in self.symbols.items()]
        if self.comments:
            lines += ["c"] + self.comments
        return "\n".join(lines) + "\n"


def _topological(c: AigerCircuit) -> list[tuple[int, int, int]]:
    by_var = {lhs >> 1: (lhs, r0, r1) for lhs, r0, r1 in c.and_gates}
    order, state = [], {}

    for root in by_var:
        stack = [(root, False)]
        while stack:
            v, done = stack.pop()
            if done:
                state[v] = 2
                order.append(by_var[v])
                continue
            if state.get(v) == 2:
                continue
            if state.get(v) == 1:
                raise SyntaxFail(f"combinational cycle through AND gate {2 * v}")
            state[v] = 1
            stack.append((v, True))
            for lit in by_var[v][1:]:
                u = lit >> 1
                if u in by_var and state.get(u) != 2:
                    if state.get(u) == 1:
                        raise SyntaxFail(f"combinational cycle through AND gate {2 * u}")
                    stack.append((u, False))
    return order


_NUM = re.compile(r"\d+")


def _nums(line: str) -> list[int] | None:
    parts = line.split()
    if parts and all(_NUM.fullmatch(p) for p in parts):
        return [int(p) for p in parts]
    return None


def parse_aiger(text: str, *, require_realizable: bool = False) -> AigerCircuit:
    """Parse ASCII AIGER text; raise SyntaxFail naming the first broken rule."""
    lines = text.splitlines()
    n = 0
    while n < len(lines) and not lines[n].strip():
        n += 1
    realizable = False
    if n < len(lines) and lines[n].strip() == "REALIZABLE":
        realizable = True
        n += 1
    elif require_realizable:
        raise SyntaxFail("Missing REALIZABLE header: first line must be REALIZABLE")
    if n >= len(lines):
        raise SyntaxFail("Invalid header: no aag line")
    head = lines[n].split()
    if head and head[0] == "aig":
        raise SyntaxFail("Invalid header: binary AIGER is not supported, use aag")
    if len(head) != 6 or head[0] != "aag" or not all(_NUM.fullmatch(h) for h in head[1:]):
        raise SyntaxFail(f"Invalid header: line {n + 1} must read 'aag M I L O A'")
    M, I, L, O, A = (int(h) for h in head[1:])
    if M != I + L + A:
        raise SyntaxFail(f"Wrong header counts: M={M} but I+L+A={I + L + A}")
    n += 1
    maxlit = 2 * M + 1

    def section(count: int, width: int, what: str) -> list[list[int]]:
        nonlocal n
        rows = []
        for k in range(count):
            if n >= len(lines):
                raise SyntaxFail(f"Wrong header counts: header declares {count} {what} lines, "
                                 f"file ends after {k}")
            row = _nums(lines[n])
            if row is None or len(row) != width:
                raise SyntaxFail(f"Wrong header counts: header declares {count} {what} lines, "
                                 f"line {n + 1} ({lines[n].strip()!r}) is not one")
            for lit in row:
                if lit > maxlit:
                    raise SyntaxFail(f"line {n + 1}: literal {lit} exceeds 2M+1={maxlit}")
            rows.append(row)
            n += 1
        return rows

    inputs = [r[0] for r in section(I, 1, "input")]
    for k, lit in enumerate(inputs):
        if lit != 2 * (k + 1):
            raise SyntaxFail(f"input {k} has literal {lit}, expected {2 * (k + 1)}")
    latches = [(r[0], r[1]) for r in section(L, 2, "latch")]
    for k, (cur, _) in enumerate(latches):
        if cur != 2 * (I + k + 1):
            raise SyntaxFail(f"latch {k} has literal {cur}, expected {2 * (I + k + 1)}")
    outputs = [r[0] for r in section(O, 1, "output")]
    gate_start = n
    gates = [tuple(r) for r in section(A, 3, "AND gate")]
    seen = set()
    for k, (lhs, r0, r1) in enumerate(gates):
        if lhs & 1:
            raise SyntaxFail(f"Odd literals for AND outputs: line {gate_start + k + 1} has lhs {lhs}, "
                             f"which must be even")
        v = lhs >> 1
        if not I + L < v <= M:
            raise SyntaxFail(f"AND gate lhs {lhs} is outside the gate range "
                             f"{2 * (I + L + 1)}..{2 * M}")
        if v in seen:
            raise SyntaxFail(f"AND gate {lhs} defined twice")
        seen.add(v)

    symbols: dict[str, str] = {}
    comments: list[str] = []
    counts = {"i": I, "l": L, "o": O}
    while n < len(lines):
        raw = lines[n]
        line = raw.strip()
        n += 1
        if not line:
            continue
        if line == "c":
            comments = lines[n:]
            break
        if _nums(line) is not None:
            raise SyntaxFail(f"Wrong header counts: extra line {n} ({line!r}) after the declared sections")
        m = re.fullmatch(r"([ilo])(\d+)\s+(\S.*)", line)
        if not m:
            raise SyntaxFail(f"line {n}: invalid symbol line {line!r}")
        kind, idx, name = m.group(1), int(m.group(2)), m.group(3).strip()
        if idx >= counts[kind]:
            raise SyntaxFail(f"line {n}: symbol {kind}{idx} refers to a missing "
                             f"{ {'i': 'input', 'l': 'latch', 'o': 'output'}[kind] }")
        key = f"{kind}{idx}"
        if key in symbols:
            raise SyntaxFail(f"line {n}: symbol {key} given twice")
        symbols[key] = name
    return AigerCircuit(M, I, L, O, A, inputs, latches, outputs, gates, symbols, comments, realizable)


def validate_symbols(circuit: AigerCircuit, tlsf: TlsfInterface) -> None:
    """Raise GrammarFail unless inputs and outputs are named exactly as in the TLSF."""
    problems = []
    for kind, count, names, role in (("i", circuit.I, tlsf.inputs, "input"),
                                     ("o", circuit.O, tlsf.outputs, "output")):
        if count != len(names):
            problems.append(f"circuit has {count} {role}s, specification declares {len(names)}")
        for k, want in enumerate(names[:count]):
            got = circuit.symbols.get(f"{kind}{k}")
            if got is None:
                problems.append(f"{role} {kind}{k} has no symbol, expected {want}")
            elif got != want:
                problems.append(f"{role} {kind}{k} is named {got}, expected {want}")
    if problems:
        raise GrammarFail("Wrong symbol names: " + "; ".join(problems))


def _lit(values: list, lit: int):
    v = values[lit >> 1]
    return v ^ 1 if lit & 1 else v


def _settle(c: AigerCircuit, ins: Sequence[int], latch: Sequence[int]) -> list[int]:
    values = [0] * (c.M + 1)
    for k, lit in enumerate(c.input_literals):
        values[lit >> 1] = int(ins[k])
    for k, (cur, _) in enumerate(c.latches):
        values[cur >> 1] = int(latch[k])
    for lhs, r0, r1 in c._order:
        values[lhs >> 1] = _lit(values, r0) & _lit(values, r1)
    return values


def step(c: AigerCircuit, latch: Sequence[int], ins: Sequence[int]) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """One clock tick: (outputs, next latch state)."""
    values = _settle(c, ins, latch)
    outs = tuple(_lit(values, lit) for lit in c.output_literals)
    nxt = tuple(_lit(values, nl) for _, nl in c.latches)
    return outs, nxt


def simulate_aiger(circuit: AigerCircuit, inputs: Sequence[Sequence[int]]) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    """Per step, the outputs and the latch state they were computed from."""
    latch = (0,) * circuit.L
    trace = []
    for vec in inputs:
        if len(vec) != circuit.I:
            raise ValueError(f"input vector has {len(vec)} bits, circuit has {circuit.I} inputs")
        outs, nxt = step(circuit, latch, vec)
        trace.append((outs, latch))
        latch = nxt
    return trace


def truth_table(circuit: AigerCircuit) -> np.ndarray:
    """Outputs for all 2^I input rows of a combinational circuit, bit-parallel.

    Row r assigns input k the bit ``(r >> (I-1-k)) & 1``, so rows run in
    lexicographic order of the input vector.  Shape is ``(2**I, O)``.
    """
    if not circuit.combinational:
        raise ValueError("truth tables need a circuit without latches")
    I = circuit.I
    rows = np.arange(1 << I, dtype=np.int64)
    values = np.zeros((circuit.M + 1, 1 << I), dtype=bool)
    for k, lit in enumerate(circuit.input_literals):
        values[lit >> 1] = (rows >> (I - 1 - k)) & 1

    def lit(l):
        v = values[l >> 1]
        return ~v if l & 1 else v

    for lhs, r0, r1 in circuit._order:
        values[lhs >> 1] = lit(r0) & lit(r1)
    if circuit.O == 0:
        return np.zeros((1 << I, 0), dtype=np.uint8)
    return np.stack([lit(o) for o in circuit.output_literals], axis=1).astype(np.uint8)
