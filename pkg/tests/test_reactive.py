import itertools
import random
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from llmsynth.grammar import ParseError
from llmsynth.harness import Benchmark, Domain, VerdictKind
from llmsynth.reactive import (Diverges, Fsm, GrammarFail, Holds, StateLimitExceeded, SyntaxFail, Violated,
                               aiger_to_fsm, check_determinism, check_invariant, invariant_guarantees,
                               normalize_tokens, parse_aiger, parse_composed, parse_expr, parse_smv_subset,
                               parse_tlsf_interface, replay_divergence, replay_violation, sanity_check_smv,
                               self_compose, simulate_aiger, smv_to_fsm, truth_table, validate_symbols)
from llmsynth.reactive import ReactiveVerifier
from llmsynth.reactive.tlsf import TlsfInterface, to_nuxmv_ltl

FIX = Path(__file__).parent / "fixtures"
AND_AAG = (FIX / "trivial_and.aag").read_text()
AND_TLSF = parse_tlsf_interface((FIX / "trivial_and.tlsf").read_text())
FIG4A = (FIX / "fig4a.smv").read_text()
FIG4B = (FIX / "fig4b.smv").read_text()
FIG4A_TLSF = parse_tlsf_interface((FIX / "fig4a.tlsf").read_text())

AND_SMV = """MODULE main
IVAR
  a : boolean;
  b : boolean;
DEFINE
  outp := a & b;
"""


def iface(ins, outs):
    return TlsfInterface("t", "Mealy", "Mealy", list(ins), list(outs))


# --------------------------------------------------------------------------
# TLSF

def test_trivial_and_interface():
    assert (AND_TLSF.inputs, AND_TLSF.outputs, AND_TLSF.semantics) == (["a", "b"], ["outp"], "Mealy")
    assert AND_TLSF.title == "Trivial AND gate"
    assert AND_TLSF.guarantees == "G(outp <-> (a && b));"


def test_duplicate_signal():
    with pytest.raises(ParseError, match="twice"):
        parse_tlsf_interface("MAIN { INPUTS { a; } OUTPUTS { a; } }")


def test_missing_outputs():
    with pytest.raises(ParseError, match="OUTPUTS"):
        parse_tlsf_interface("MAIN { INPUTS { a; } GUARANTEES { G a; } }")


def test_invariant_guarantees():
    [g] = invariant_guarantees(AND_TLSF)
    assert g == parse_expr("outp <-> (a & b)")
    temporal = parse_tlsf_interface("MAIN { INPUTS { a; } OUTPUTS { o; } GUARANTEES { G(a -> X o); } }")
    assert invariant_guarantees(temporal) is None
    assumed = parse_tlsf_interface("MAIN { INPUTS { a; } OUTPUTS { o; } ASSUMPTIONS { G F a; } "
                                   "GUARANTEES { G(o); } }")
    assert invariant_guarantees(assumed) is None
    assert to_nuxmv_ltl(assumed) == "LTLSPEC ((G F a)) -> ((G(o)))"


# --------------------------------------------------------------------------
# AIGER

def test_and_circuit_parses():
    c = parse_aiger(AND_AAG)
    assert c.realizable and (c.M, c.I, c.L, c.O, c.A) == (3, 2, 0, 1, 1)
    assert c.and_gates == [(6, 2, 4)] and c.output_literals == [6]
    assert c.symbols == {"i0": "a", "i1": "b", "o0": "outp"}
    validate_symbols(c, AND_TLSF)


def test_and_simulation():
    c = parse_aiger(AND_AAG)
    trace = simulate_aiger(c, [(1, 1), (1, 0), (0, 1), (0, 0)])
    assert [o for o, _ in trace] == [(1,), (0,), (0,), (0,)]
    assert simulate_aiger(c, []) == []


def test_toggle_latch():
    c = parse_aiger("aag 1 0 1 1 0\n2 3\n2\n")
    assert [o[0] for o, _ in simulate_aiger(c, [()] * 6)] == [0, 1, 0, 1, 0, 1]


def test_round_trip_text():
    c = parse_aiger(AND_AAG)
    assert parse_aiger(c.to_text()) == c


# the four common mistakes, one fixture each
MISTAKES = {
    "header counts": ("REALIZABLE\naag 3 2 0 1 2\n2\n4\n6\n6 2 4\ni0 a\ni1 b\no0 outp\n", SyntaxFail,
                      "Wrong header counts"),
    "odd lhs": ("REALIZABLE\naag 3 2 0 1 1\n2\n4\n7\n7 2 4\ni0 a\ni1 b\no0 outp\n", SyntaxFail,
                "Odd literals for AND outputs"),
    "symbol names": ("REALIZABLE\naag 3 2 0 1 1\n2\n4\n6\n6 2 4\ni0 x\ni1 b\no0 outp\n", GrammarFail,
                     "Wrong symbol names"),
    "realizable": ("aag 3 2 0 1 1\n2\n4\n6\n6 2 4\ni0 a\ni1 b\no0 outp\n", SyntaxFail,
                   "Missing REALIZABLE header"),
}


@pytest.mark.parametrize("name", sorted(MISTAKES))
def test_common_mistake_detected(name):
    text, exc, msg = MISTAKES[name]
    with pytest.raises(exc, match=msg):
        validate_symbols(parse_aiger(text, require_realizable=True), AND_TLSF)
    v = ReactiveVerifier().verify(Benchmark("and", Domain.REACTIVE, (FIX / "trivial_and.tlsf").read_text(),
                                            {"format": "aiger"}), text, 5)
    assert v.kind is (VerdictKind.GRAMMAR_FAIL if exc is GrammarFail else VerdictKind.SYNTAX_FAIL)


def test_symbol_count_mismatch():
    c = parse_aiger("aag 2 1 0 1 1\n2\n4\n4 2 3\ni0 a\no0 outp\n")
    with pytest.raises(GrammarFail, match="1 inputs"):
        validate_symbols(c, AND_TLSF)


@pytest.mark.parametrize("text,msg", [
    ("aig 3 2 0 1 1\n", "binary"),
    ("aag 4 2 0 1 1\n2\n4\n6\n6 2 4\n", "M=4"),
    ("aag 3 2 0 1 1\n2\n4\n6\n6 2 9\n", "exceeds"),
    ("aag 2 1 0 1 1\n2\n4\n4 4 2\n", "cycle"),
    ("aag 3 2 0 1 1\n2\n4\n6\n6 2 4\n8 2 2\n", "extra line"),
    ("aag 3 2 0 1 1\n4\n2\n6\n6 2 4\n", "expected 2"),
])
def test_aiger_errors(text, msg):
    with pytest.raises(SyntaxFail, match=msg):
        parse_aiger(text)


def random_aiger(rng: random.Random) -> str:
    I = rng.randint(0, 6)
    A = rng.randint(0, 12)
    O = rng.randint(1, 4)
    lines = []
    for k in range(A):
        v = I + 1 + k
        lits = list(range(0, 2 * v))
        lines.append(f"{2 * v} {rng.choice(lits)} {rng.choice(lits)}")
    rng.shuffle(lines)  # any line order; evaluation must follow dependencies
    outs = [str(rng.randrange(0, 2 * (I + A) + 2)) for _ in range(O)]
    M = I + A
    return "\n".join([f"aag {M} {I} 0 {O} {A}"] + [str(2 * (k + 1)) for k in range(I)] + outs + lines) + "\n"


def oracle_outputs(text: str, bits: tuple[int, ...]) -> tuple[int, ...]:
    """Recursive evaluation straight from the gate lines."""
    lines = text.splitlines()
    M, I, _, O, A = map(int, lines[0].split()[1:])
    rows = [None] + [list(map(int, line.split())) for line in lines[1:]]
    outs = [r[0] for r in rows[1 + I:1 + I + O]]
    gates = {r[0] // 2: (r[1], r[2]) for r in rows[1 + I + O:]}

    def lit(l):
        v = l // 2
        if v == 0:
            val = 0
        elif v <= I:
            val = bits[v - 1]
        else:
            a, b = gates[v]
            val = lit(a) & lit(b)
        return val ^ (l & 1)

    return tuple(lit(o) for o in outs)


@settings(max_examples=150)
@given(st.integers(0, 10**9))
def test_truth_table_matches_oracle(seed):
    text = random_aiger(random.Random(seed))
    c = parse_aiger(text)
    table = truth_table(c)
    for r, bits in enumerate(itertools.product((0, 1), repeat=c.I)):
        want = oracle_outputs(text, bits)
        assert tuple(table[r]) == want
        assert simulate_aiger(c, [bits])[0][0] == want


def test_truth_table_ten_inputs():
    # 10-input parity chain built from AND gates: x ^ y = !( !(x & !y) & !(!x & y) )
    I = 10
    gates, acc, nxt = [], 2, I + 1
    for k in range(2, I + 1):
        y = 2 * k
        g1, g2, g3 = 2 * nxt, 2 * (nxt + 1), 2 * (nxt + 2)
        gates += [f"{g1} {acc} {y ^ 1}", f"{g2} {acc ^ 1} {y}", f"{g3} {g1 ^ 1} {g2 ^ 1}"]
        acc = g3 ^ 1
        nxt += 3
    text = "\n".join([f"aag {nxt - 1} {I} 0 1 {len(gates)}"] + [str(2 * (k + 1)) for k in range(I)]
                     + [str(acc)] + gates) + "\n"
    table = truth_table(parse_aiger(text))
    want = np.array([bin(r).count("1") & 1 for r in range(1 << I)], dtype=np.uint8)
    assert np.array_equal(table[:, 0], want)


# --------------------------------------------------------------------------
# SMV subset

def test_fig4a_parses():
    m = parse_smv_subset(FIG4A)
    assert m.ivars == ["i", "j"] and m.vars == ["x", "y"] and list(m.defines) == ["out"]
    assert sanity_check_smv(m, FIG4A_TLSF).ok


@pytest.mark.parametrize("text,msg", [
    ("MODULE main\nIVAR\n  i : boolean;\nASSIGN\n  next(i) := !i;\n", "assigns an input"),
    ("MODULE main\nIVAR\n  a : boolean;\nDEFINE\n  o := a && a;\n", "operator && invalid"),
    ("MODULE main\nVAR\n  n : 0..3;\nASSIGN\n  init(n) := FALSE;\n  next(n) := n;\n", "integer type"),
    ("MODULE main\nVAR\n  x : boolean;\nTRANS\n  next(x) = x;\n", "TRANS section present"),
    ("MODULE main\nIVAR\n  a : boolean;\nDEFINE\n  o := case a : TRUE; esac;\n", "case"),
    ("MODULE main\nIVAR\n  a : boolean;\nDEFINE\n  o := ~a;\n", "~"),
    ("MODULE main\nIVAR\n  a : boolean;\nDEFINE\n  o := p;\n  p := o;\n", "cycle"),
])
def test_smv_subset_violations(text, msg):
    with pytest.raises(SyntaxFail, match=msg):
        parse_smv_subset(text)


def test_sanity_report_groups():
    renamed = AND_SMV.replace("outp", "output1")
    r = sanity_check_smv(parse_smv_subset(renamed), AND_TLSF)
    assert (r.structure_ok, r.boolean_ok, r.io_mapping_ok) == (True, True, False)
    no_init = FIG4A.replace("init(y) := FALSE;", "")
    r = sanity_check_smv(parse_smv_subset(no_init, strict=False), FIG4A_TLSF)
    assert (r.structure_ok, r.boolean_ok, r.io_mapping_ok) == (False, True, True)
    ints = FIG4A.replace("y : boolean", "y : 0..1")
    r = sanity_check_smv(parse_smv_subset(ints, strict=False), FIG4A_TLSF)
    assert (r.structure_ok, r.boolean_ok) == (True, False)


def test_self_composition_matches_fig4b():
    assert normalize_tokens(self_compose(parse_smv_subset(FIG4A))) == normalize_tokens(FIG4B)


def test_self_composition_small_cases():
    one = parse_smv_subset("MODULE main\nIVAR\n  a : boolean;\nVAR\n  x : boolean;\n"
                           "ASSIGN\n  init(x) := FALSE;\n  next(x) := a;\n")
    assert "state_eq := (t1.x = t2.x);" in self_compose(one)
    stateless = parse_smv_subset(AND_SMV)
    text = self_compose(stateless)
    assert "state_eq := TRUE;" in text
    assert check_determinism(smv_to_fsm(stateless))


def test_self_composition_reproducible():
    m = parse_smv_subset(FIG4A)
    assert self_compose(m) == self_compose(parse_smv_subset(FIG4A))


def test_fig4a_fsm():
    f = smv_to_fsm(parse_smv_subset(FIG4A))
    assert f.state_names == ("x", "y") and f.init_state == (False, False)
    assert f.next((False, False), (True, True))[0] is False
    assert f.outputs((True, True), (True, True))["out"] is True
    assert check_determinism(f)


def test_init_must_be_closed():
    from llmsynth.reactive import SemanticFail
    m = parse_smv_subset("MODULE main\nVAR\n  x : boolean;\n  y : boolean;\nASSIGN\n"
                         "  init(x) := y;\n  next(x) := x;\n  init(y) := TRUE;\n  next(y) := y;\n")
    with pytest.raises(SemanticFail, match="init"):
        smv_to_fsm(m)


# --------------------------------------------------------------------------
# explicit-state checks

def test_relational_machine_diverges():
    def rel(s, i):
        return [(False,), (True,)] if i[0] else [s]

    f = Fsm(("i",), ("x",), (False,), lambda s, i: s, relation=rel)
    d = check_determinism(f)
    assert isinstance(d, Diverges) and d.inputs == [(True,)]
    assert replay_divergence(f, d)


def test_and_invariant():
    f = smv_to_fsm(parse_smv_subset(AND_SMV))
    assert isinstance(check_invariant(f, parse_expr("outp <-> (a & b)")), Holds)
    v = check_invariant(f, parse_expr("outp"))
    assert isinstance(v, Violated) and v.inputs[-1][0] is False
    assert replay_violation(f, parse_expr("outp"), v)
    assert check_invariant(f, parse_expr("TRUE"))


def test_unknown_property_name():
    f = smv_to_fsm(parse_smv_subset(AND_SMV))
    with pytest.raises(KeyError, match="zz"):
        check_invariant(f, parse_expr("zz"))


def test_state_cap():
    n = 6
    body = "".join(f"  x{k} : boolean;\n" for k in range(n))
    nxt = "".join(f"  init(x{k}) := FALSE;\n  next(x{k}) := x{k} | c{k};\n" for k in range(n))
    ivars = "".join(f"  c{k} : boolean;\n" for k in range(n))
    m = parse_smv_subset(f"MODULE main\nIVAR\n{ivars}VAR\n{body}ASSIGN\n{nxt}")
    f = smv_to_fsm(m)
    assert check_invariant(f, parse_expr("TRUE")).explored == 2 ** n
    with pytest.raises(StateLimitExceeded):
        check_invariant(f, parse_expr("TRUE"), state_cap=10)
    with pytest.raises(StateLimitExceeded):
        check_determinism(f, state_cap=10)


# random modules in the subset, with an independent evaluator

IVARS = ["i", "j"]
VARS = ["x", "y", "z"]


def rand_expr(rng, leaves, depth=3):
    if depth == 0 or rng.random() < 0.3:
        return rng.choice(leaves + [True, False])
    if rng.random() < 0.2:
        return ("!", rand_expr(rng, leaves, depth - 1))
    return (rng.choice(["&", "|", "->", "<->"]), rand_expr(rng, leaves, depth - 1), rand_expr(rng, leaves, depth - 1))


def show(e):
    if e is True or e is False:
        return "TRUE" if e else "FALSE"
    if isinstance(e, str):
        return e
    if e[0] == "!":
        return f"!({show(e[1])})"
    return f"({show(e[1])} {e[0]} {show(e[2])})"


def ev(e, env):
    if e is True or e is False:
        return e
    if isinstance(e, str):
        return env[e]
    if e[0] == "!":
        return not ev(e[1], env)
    a, b = ev(e[1], env), ev(e[2], env)
    return {"&": a and b, "|": a or b, "->": (not a) or b, "<->": a == b}[e[0]]


def random_module(rng):
    ivars = IVARS[:rng.randint(0, 2)]
    svars = VARS[:rng.randint(0, 3)]
    init = {v: rng.choice([True, False]) for v in svars}
    nexts = {v: rand_expr(rng, ivars + svars) for v in svars}
    defines = {}
    for k in range(rng.randint(1, 3)):
        defines[f"o{k}"] = rand_expr(rng, ivars + svars + list(defines))
    lines = ["MODULE main -- random"]
    if ivars:
        lines += ["IVAR"] + [f"  {v} : boolean;" for v in ivars]
    if svars:
        lines += ["VAR"] + [f"  {v} : boolean;" for v in svars]
        lines += ["ASSIGN"]
        for v in svars:
            lines += [f"  init({v}) := {show(init[v])};", f"  next({v}) := {show(nexts[v])};"]
    lines += ["DEFINE"] + [f"  {d} := {show(e)};" for d, e in defines.items()]
    return "\n".join(lines) + "\n", ivars, svars, init, nexts, defines


def reachable_oracle(ivars, svars, init, nexts, defines):
    """Fixed point over (state, input) pairs with all signals evaluated."""
    start = tuple(init[v] for v in svars)
    seen, frontier, pairs = {start}, [start], []
    while frontier:
        s = frontier.pop()
        for inp in itertools.product((False, True), repeat=len(ivars)):
            env = dict(zip(svars, s)) | dict(zip(ivars, inp))
            for d, e in defines.items():
                env[d] = ev(e, env)
            pairs.append(env)
            t = tuple(ev(nexts[v], env) for v in svars)
            if t not in seen:
                seen.add(t)
                frontier.append(t)
    return seen, pairs


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**9))
def test_random_module_pipeline(seed):
    rng = random.Random(seed)
    text, ivars, svars, init, nexts, defines = random_module(rng)
    m = parse_smv_subset(text)
    assert sanity_check_smv(m, iface(ivars, list(defines))).ok
    f = smv_to_fsm(m)
    # determinism of the pipeline
    det = check_determinism(f)
    states, pairs = reachable_oracle(ivars, svars, init, nexts, defines)
    assert det and det.explored == len(states)
    # self-composition fidelity
    sub, main = parse_composed(self_compose(m))
    assert sub.params == ivars and sub.assigns == m.assigns and sub.defines == m.defines
    assert main.specs == [("CTLSPEC", "AG state_eq")]
    # invariant checks agree with the oracle, and violations replay
    prop_e = rand_expr(rng, ivars + svars + list(defines))
    prop = parse_expr(show(prop_e))
    res = check_invariant(f, prop)
    assert bool(res) == all(ev(prop_e, env) for env in pairs)
    if not res:
        assert replay_violation(f, prop, res)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**9))
def test_relational_divergence_replays(seed):
    rng = random.Random(seed)
    n = rng.randint(1, 3)
    table = {}

    def rel(s, i):
        key = (s, i)
        if key not in table:
            k = rng.choice([1, 1, 1, 2])
            opts = list(itertools.product((False, True), repeat=n))
            table[key] = rng.sample(opts, k)
        return table[key]

    f = Fsm(("a",), tuple(f"s{k}" for k in range(n)), (False,) * n, lambda s, i: s, relation=rel)
    d = check_determinism(f)
    if isinstance(d, Diverges):
        assert replay_divergence(f, d)
    else:
        assert all(len(v) == 1 for v in table.values())


def test_aiger_latch_fsm_invariant():
    # output = latch; latch' = input: the output lags the input by one step
    c = parse_aiger("aag 2 1 1 1 0\n2\n4 2\n4\ni0 a\nl0 m\no0 o\n")
    f = aiger_to_fsm(c)
    v = check_invariant(f, parse_expr("!o"))
    assert isinstance(v, Violated) and len(v.inputs) == 2 and v.inputs[0] == (True,)
    assert replay_violation(f, parse_expr("!o"), v)


# --------------------------------------------------------------------------
# verifier

def _bench(fmt, tlsf="trivial_and.tlsf"):
    return Benchmark("and", Domain.REACTIVE, (FIX / tlsf).read_text(), {"format": fmt})


def test_verifier_aiger_pass_and_fail():
    ver = ReactiveVerifier()
    assert ver.verify(_bench("aiger"), AND_AAG, 5).passed
    wrong = AND_AAG.replace("6 2 4", "6 2 5")
    v = ver.verify(_bench("aiger"), wrong, 5)
    assert v.kind is VerdictKind.SEMANTIC_FAIL and v.detail.endswith("step 0: a=1, b=0")  # outp = a & !b


def test_verifier_smv():
    ver = ReactiveVerifier()
    assert ver.verify(_bench("smv"), AND_SMV, 5).passed
    assert ver.verify(_bench("smv"), AND_SMV.replace("a & b", "a | b"), 5).kind is VerdictKind.SEMANTIC_FAIL
    assert ver.verify(_bench("smv"), AND_SMV.replace("&", "&&"), 5).kind is VerdictKind.SYNTAX_FAIL
    renamed = AND_SMV.replace("outp", "output1")
    assert ver.verify(_bench("smv"), renamed, 5).kind is VerdictKind.GRAMMAR_FAIL
    lenient = ReactiveVerifier(accept_io_mismatch=True).verify(_bench("smv"), renamed, 5)
    assert lenient.kind is VerdictKind.VERIFY_TIMEOUT and "outp" in lenient.detail


def test_verifier_fig4a_guarantee():
    # G(out -> (i && j)) holds for Fig. 4a since out = x & y & i & j
    assert ReactiveVerifier().verify(_bench("smv", "fig4a.tlsf"), FIG4A, 5).passed


def test_temporal_without_checker_is_undecided():
    tlsf = "MAIN { INPUTS { a; } OUTPUTS { o; } GUARANTEES { G(a -> X o); } }"
    smv = "MODULE main\nIVAR\n  a : boolean;\nDEFINE\n  o := a;\n"
    v = ReactiveVerifier().verify(Benchmark("t", Domain.REACTIVE, tlsf), smv, 5)
    assert v.kind is VerdictKind.VERIFY_TIMEOUT
