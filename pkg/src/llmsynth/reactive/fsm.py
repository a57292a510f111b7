"""Explicit-state boolean machines and the two checks run on them.

States and input vectors are tuples of bools in declaration order.  A
machine built from SMV or AIGER is functional; hand-built machines may pass
``relation`` to allow several successors, which is what the determinism
check is meant to catch.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

from .aiger import AigerCircuit, step as aiger_step
from .boolexpr import BoolExpr, evaluate, names
from .errors import SemanticFail, StateLimitExceeded
from .smv import SmvModule

State = tuple[bool, ...]
Inputs = tuple[bool, ...]
DEFAULT_STATE_CAP = 1 << 20


@dataclass
class Fsm:
    input_names: tuple[str, ...]
    state_names: tuple[str, ...]
    init_state: State
    next: Callable[[State, Inputs], State]
    outputs: Callable[[State, Inputs], Mapping[str, bool]] = lambda s, i: {}
    relation: Callable[[State, Inputs], Iterable[State]] | None = None
    initial: tuple[State, ...] | None = None

    def successors(self, state: State, inputs: Inputs) -> list[State]:
        if self.relation is not None:
            return list(self.relation(state, inputs))
        return [self.next(state, inputs)]

    def initial_states(self) -> list[State]:
        return list(self.initial) if self.initial is not None else [self.init_state]

    def input_vectors(self) -> Iterable[Inputs]:
        return itertools.product((False, True), repeat=len(self.input_names))

    def env(self, state: State, inputs: Inputs) -> dict[str, bool]:
        e = dict(zip(self.state_names, state))
        e.update(zip(self.input_names, inputs))
        e.update(self.outputs(state, inputs))
        return e


def smv_to_fsm(module: SmvModule) -> Fsm:
    assigns = module.assigns
    svars = tuple(module.vars)
    ivars = tuple(module.ivars)
    init = []
    for v in svars:
        e = assigns[v]["init"]
        free = list(names(e))
        if free:
            raise SemanticFail(f"init({v}) depends on {free[0]}; initial values must be constants")
        init.append(evaluate(e, {}))
    order = module.define_order()
    nexts = [assigns[v]["next"] for v in svars]

    def base(state, inputs):
        env = dict(zip(svars, state))
        env.update(zip(ivars, inputs))
        for d in order:
            env[d] = evaluate(module.defines[d], env)
        return env

    def nxt(state, inputs):
        env = base(state, inputs)
        return tuple(evaluate(e, env) for e in nexts)

    def outs(state, inputs):
        env = base(state, inputs)
        return {d: env[d] for d in module.defines}

    return Fsm(ivars, svars, tuple(init), nxt, outs)


def aiger_to_fsm(circuit: AigerCircuit) -> Fsm:
    onames = circuit.output_names()

    def nxt(state, inputs):
        return tuple(bool(b) for b in aiger_step(circuit, state, inputs)[1])

    def outs(state, inputs):
        return dict(zip(onames, (bool(b) for b in aiger_step(circuit, state, inputs)[0])))

    return Fsm(tuple(circuit.input_names()), tuple(circuit.latch_names()),
               (False,) * circuit.L, nxt, outs)


@dataclass
class Deterministic:
    explored: int = 0

    def __bool__(self):
        return True


@dataclass
class Diverges:
    """Inputs applied step by step and the product states they led to.

    ``states[0]`` is the initial pair; ``states[k+1]`` follows ``inputs[k]``.
    The last pair has unequal components.
    """
    inputs: list[Inputs]
    states: list[tuple[State, State]]

    def __bool__(self):
        return False


@dataclass
class Holds:
    explored: int = 0

    def __bool__(self):
        return True


@dataclass
class Violated:
    """``states[k]`` is visited under ``inputs[k]``; the last pair falsifies the property."""
    inputs: list[Inputs]
    states: list[State]
    env: dict[str, bool] = field(default_factory=dict)

    def __bool__(self):
        return False


def _path(parent: dict, node):
    steps = []
    while parent[node] is not None:
        prev, inp = parent[node]
        steps.append((inp, node))
        node = prev
    steps.reverse()
    return node, steps


def check_determinism(fsm: Fsm, state_cap: int = DEFAULT_STATE_CAP) -> Deterministic | Diverges:
    """BFS over two copies fed identical inputs, looking for unequal states."""
    inits = fsm.initial_states()
    for a in inits:
        for b in inits:
            if a != b:
                return Diverges([], [(a, b)])
    start = (inits[0], inits[0])
    parent: dict = {start: None}
    queue = deque([start])
    while queue:
        pair = queue.popleft()
        s = pair[0]
        for inp in fsm.input_vectors():
            succ = fsm.successors(s, inp)
            if not succ:
                continue
            for a in succ:
                for b in succ:
                    if a != b:
                        _, steps = _path(parent, pair)
                        return Diverges([x for x, _ in steps] + [inp],
                                        [start] + [p for _, p in steps] + [(a, b)])
            nxt = (succ[0], succ[0])
            if nxt not in parent:
                if len(parent) >= state_cap:
                    raise StateLimitExceeded(state_cap)
                parent[nxt] = (pair, inp)
                queue.append(nxt)
    return Deterministic(len(parent))


def replay_divergence(fsm: Fsm, d: Diverges) -> bool:
    """True when the recorded trace is a genuine run of both copies ending apart."""
    if not d.states or d.states[0][0] not in fsm.initial_states() or d.states[0][1] not in fsm.initial_states():
        return False
    for k, inp in enumerate(d.inputs):
        (a, b), (a2, b2) = d.states[k], d.states[k + 1]
        if a != b:
            return False
        succ = fsm.successors(a, inp)
        if a2 not in succ or b2 not in succ:
            return False
    last = d.states[-1]
    return last[0] != last[1]


def check_invariant(fsm: Fsm, prop: BoolExpr, state_cap: int = DEFAULT_STATE_CAP) -> Holds | Violated:
    """AG prop over every reachable (state, input) pair."""
    known = set(fsm.state_names) | set(fsm.input_names)
    parent: dict = {}
    queue: deque = deque()
    for s in fsm.initial_states():
        if s not in parent:
            parent[s] = None
            queue.append(s)
    while queue:
        s = queue.popleft()
        for inp in fsm.input_vectors():
            env = fsm.env(s, inp)
            missing = [n for n in names(prop) if n not in env]
            if missing:
                raise KeyError(f"property mentions unknown signal {missing[0]} "
                               f"(known: {sorted(known | set(env))})")
            if not evaluate(prop, env):
                root, steps = _path(parent, s)
                return Violated([x for x, _ in steps] + [inp], [root] + [p for _, p in steps], env)
            for t in fsm.successors(s, inp):
                if t not in parent:
                    if len(parent) >= state_cap:
                        raise StateLimitExceeded(state_cap)
                    parent[t] = (s, inp)
                    queue.append(t)
    return Holds(len(parent))


def replay_violation(fsm: Fsm, prop: BoolExpr, v: Violated) -> bool:
    if len(v.inputs) != len(v.states) or v.states[0] not in fsm.initial_states():
        return False
    for k in range(len(v.states) - 1):
        if v.states[k + 1] not in fsm.successors(v.states[k], v.inputs[k]):
            return False
    return not evaluate(prop, fsm.env(v.states[-1], v.inputs[-1]))
