import itertools
import shutil
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from llmsynth.generators.enumerator import sygus_stream
from llmsynth.grammar import Atom, enumerate_terms, lst, parse_sexpr
from llmsynth.harness import Benchmark, Domain, VerdictKind
from llmsynth.sygus import (BitVec, EvalError, GrammarFail, SearchConfig, SignatureMismatch,
                            SygusParseError, SygusVerifier, check_candidate, check_grammar, check_signature,
                            emit_smt_query, eval_term, find_counterexample, format_value, parse_candidate,
                            parse_sygus, run_smt_solver)

FIX = Path(__file__).parent / "fixtures"
MI = (FIX / "mi.sl").read_text()
MAXMIN = (FIX / "maxmin.sl").read_text()
Z3 = shutil.which("z3")

GOOD_MI = "(define-fun mi ((x Int) (y Int)) Int (ite (<= x y) x y))"
SWAPPED_MI = "(define-fun mi ((x Int) (y Int)) Int (ite (<= x y) y x))"


def ev(text, **env):
    return eval_term(parse_sexpr(text), env)


# --------------------------------------------------------------------------
# parsing

def test_mi_problem_shape():
    p = parse_sygus(MI)
    assert p.logic == "LIA"
    assert len(p.synth_funs) == 1 and p.synth_funs[0].name == "mi"
    assert p.synth_funs[0].params == (("x", "Int"), ("y", "Int")) and p.synth_funs[0].return_sort == "Int"
    assert list(p.synth_funs[0].grammar.rules) == ["S", "I"]
    assert p.declared_vars == [("x", "Int"), ("y", "Int")]
    assert len(p.constraints) == 2


def test_inv_constraint_unsupported():
    with pytest.raises(SygusParseError, match="unsupported feature") as exc:
        parse_sygus("(set-logic LIA)\n(synth-inv inv ((x Int)))\n(inv-constraint inv pre trans post)")
    assert exc.value.command == "synth-inv"


def test_empty_file():
    with pytest.raises(SygusParseError):
        parse_sygus("; only a comment\n")


def test_unknown_command_named():
    with pytest.raises(SygusParseError, match="frobnicate") as exc:
        parse_sygus("(set-logic LIA)\n(frobnicate x)")
    assert exc.value.command == "frobnicate" and exc.value.pos is not None


def test_two_logics_rejected():
    with pytest.raises(SygusParseError, match="set-logic"):
        parse_sygus("(set-logic LIA)\n(set-logic BV)")


def test_undeclared_constraint_symbol():
    with pytest.raises(SygusParseError, match="undeclared"):
        parse_sygus("(synth-fun f ((x Int)) Int)\n(constraint (= (f z) 0))")


def test_grammarless_synth_fun():
    p = parse_sygus(MAXMIN)
    assert p.synth_fun("min").grammar is None and p.synth_fun("max").grammar is not None


# --------------------------------------------------------------------------
# signature and grammar

def test_signature_ok():
    check_signature(parse_sygus(MI), parse_candidate(GOOD_MI))


@pytest.mark.parametrize("cand,msg", [
    ("(define-fun mi ((x Int) (y Int) (S Int)) Int (ite (<= x y) x y))", "nonterminal"),
    ("(define-fun mi ((x Int)) Int x)", "arity"),
    ("(define-fun mi ((x Int) (y Bool)) Int x)", "sort"),
    ("(define-fun mi ((a Int) (b Int)) Int a)", "named"),
    ("(define-fun mi ((x Int) (y Int)) Bool true)", "return sort"),
    (GOOD_MI + "\n(define-fun helper ((x Int)) Int x)", "helper"),
    (GOOD_MI + "\n" + GOOD_MI, "twice"),
])
def test_signature_mismatches(cand, msg):
    with pytest.raises(SignatureMismatch, match=msg):
        check_signature(parse_sygus(MI), parse_candidate(cand))


def test_missing_one_of_two_defs():
    with pytest.raises(SignatureMismatch, match="missing define-fun for synth-fun min"):
        check_signature(parse_sygus(MAXMIN), parse_candidate("(define-fun max ((x Int) (y Int)) Int x)"))


def test_grammar_conformance():
    p = parse_sygus(MI)
    check_grammar(p, parse_candidate(GOOD_MI))
    bad = "(define-fun mi ((x Int) (y Int)) Int (- x y))"
    with pytest.raises(GrammarFail) as exc:
        check_grammar(p, parse_candidate(bad))
    assert exc.value.function == "mi"
    # cross-check against the enumeration oracle
    assert lst("-", "x", "y") not in enumerate_terms(p.synth_funs[0].grammar, "S", 7)


def test_grammar_free_function_passes():
    p = parse_sygus(MAXMIN)
    check_grammar(p, parse_candidate("(define-fun max ((x Int) (y Int)) Int (ite (<= x y) y x))\n"
                                     "(define-fun min ((x Int) (y Int)) Int (* 3 (- x y)))"))


# --------------------------------------------------------------------------
# evaluation

def test_eval_examples():
    assert ev("(ite (<= x y) x y)", x=3, y=5) == 3
    assert ev("(div 7 2)") == 3 and ev("(mod 7 2)") == 1
    assert ev("(bvadd (_ bv255 8) (_ bv1 8))") == BitVec(8, 0)


def test_euclidean_negative_cases():
    assert ev("(div (- 7) 2)") == -4 and ev("(mod (- 7) 2)") == 1
    assert ev("(div 7 (- 2))") == -3 and ev("(mod 7 (- 2))") == 1


def test_division_by_zero_is_total():
    assert ev("(div x 0)", x=5) == 0 and ev("(mod x 0)", x=5) == 5


@given(st.integers(-10**6, 10**6), st.integers(-1000, 1000).filter(bool))
def test_euclid_law(a, b):
    q = eval_term(lst("div", "a", "b"), {"a": a, "b": b})
    r = eval_term(lst("mod", "a", "b"), {"a": a, "b": b})
    assert a == b * q + r and 0 <= r < abs(b)


def test_eval_errors():
    with pytest.raises(EvalError, match="unbound"):
        ev("(+ x z)", x=1)
    with pytest.raises(EvalError, match="sort"):
        ev("(+ x true)", x=1)
    with pytest.raises(EvalError, match="external solver"):
        ev('(str.len "ab")')


def test_candidate_functions_applied():
    defs = parse_candidate("(define-fun f ((a Int)) Int (+ a 1))")
    assert eval_term(parse_sexpr("(f (f x))"), {"x": 1}, defs) == 3


def test_recursion_rejected_by_depth_cap():
    defs = parse_candidate("(define-fun f ((a Int)) Int (f a))")
    with pytest.raises(EvalError, match="depth"):
        eval_term(parse_sexpr("(f 1)"), {}, defs)


def test_format_value():
    assert format_value(-3) == "(- 3)" and format_value(True) == "true" and format_value(BitVec(4, 5)) == "(_ bv5 4)"


# independent evaluator for random integer/boolean terms

def _py(t, env):
    if isinstance(t, Atom):
        return env[t.text] if t.text in env else int(t.text)
    op, *args = t.children
    v = [_py(a, env) for a in args]
    op = op.text
    if op == "+":
        return v[0] + v[1]
    if op == "-":
        return v[0] - v[1]
    if op == "*":
        return v[0] * v[1]
    if op == "ite":
        return v[1] if v[0] else v[2]
    if op == "<=":
        return v[0] <= v[1]
    if op == "<":
        return v[0] < v[1]
    if op == "=":
        return v[0] == v[1]
    if op == "and":
        return v[0] and v[1]
    if op == "not":
        return not v[0]
    if op == "div":
        if v[1] == 0:
            return 0
        # Euclidean: remainder in [0, |b|)
        return (v[0] - v[0] % abs(v[1])) // v[1]
    raise AssertionError(op)


def int_terms():
    leaves = st.one_of(st.sampled_from(["x", "y"]).map(Atom), st.integers(0, 9).map(lambda n: Atom(str(n))))

    def extend(inner):
        bools = st.one_of(
            st.tuples(st.sampled_from(["<=", "<", "="]), inner, inner).map(lambda a: lst(*a)),
        )
        return st.one_of(
            st.tuples(st.sampled_from(["+", "-", "*", "div"]), inner, inner).map(lambda a: lst(*a)),
            st.tuples(bools, inner, inner).map(lambda a: lst("ite", *a)),
        )
    return st.recursive(leaves, extend, max_leaves=12)


@settings(max_examples=200)
@given(int_terms(), st.integers(-50, 50), st.integers(-50, 50))
def test_eval_matches_reference(t, x, y):
    assert eval_term(t, {"x": x, "y": y}) == _py(t, {"x": x, "y": y})


def _twos(v, w):
    return v - (1 << w) if v >= 1 << (w - 1) else v


@given(st.integers(1, 16).flatmap(lambda w: st.tuples(st.just(w), st.integers(0, (1 << w) - 1),
                                                      st.integers(0, (1 << w) - 1))))
def test_bitvector_ops_modular(args):
    w, a, b = args
    env = {"a": BitVec(w, a), "b": BitVec(w, b)}
    m = 1 << w
    assert eval_term(parse_sexpr("(bvadd a b)"), env).value == (a + b) % m
    assert eval_term(parse_sexpr("(bvsub a b)"), env).value == (a - b) % m
    assert eval_term(parse_sexpr("(bvmul a b)"), env).value == (a * b) % m
    assert eval_term(parse_sexpr("(bvneg a)"), env).value == (-a) % m
    assert eval_term(parse_sexpr("(bvslt a b)"), env) == (_twos(a, w) < _twos(b, w))
    assert eval_term(parse_sexpr("(bvult a b)"), env) == (a < b)
    assert eval_term(parse_sexpr("(bvudiv a b)"), env).value == (m - 1 if b == 0 else a // b)


def test_bitvector_indexed_ops():
    env = {"a": BitVec(8, 0b10110100)}
    assert eval_term(parse_sexpr("((_ extract 5 2) a)"), env) == BitVec(4, 0b1101)
    assert eval_term(parse_sexpr("((_ sign_extend 4) a)"), env) == BitVec(12, 0xFB4)
    assert eval_term(parse_sexpr("((_ zero_extend 4) a)"), env) == BitVec(12, 0x0B4)
    assert eval_term(parse_sexpr("(concat #x1 #b01)"), {}) == BitVec(6, 0b000101)


# --------------------------------------------------------------------------
# counterexample search against a brute-force oracle

def _mi_oracle(f):
    """Every (x, y) in [-32, 32]^2 where a Python model of the mi constraints fails, in scan order."""
    scan = [0] + [s * k for k in range(1, 33) for s in (1, -1)]
    bad = []
    for x, y in itertools.product(scan, scan):
        v = f(x, y)
        if not ((x < y or v == y) and (y < x or v == x)):
            bad.append((x, y))
    return bad, len(scan) ** 2


def test_correct_mi_has_no_counterexample():
    bad, n = _mi_oracle(lambda x, y: x if x <= y else y)
    assert bad == [] and n == 65 * 65
    p = parse_sygus(MI)
    assert find_counterexample(p, parse_candidate(GOOD_MI), SearchConfig(exhaustive_bound=32)) is None


def test_swapped_mi_counterexample():
    bad, _ = _mi_oracle(lambda x, y: y if x <= y else x)
    assert bad[0] == (0, 1)
    p = parse_sygus(MI)
    cand = parse_candidate(SWAPPED_MI)
    cex = find_counterexample(p, cand)
    assert cex == {"x": 0, "y": 1}
    # negation duality
    assert any(eval_term(c, cex, cand) is False for c in p.constraints)


def test_zero_constraints_no_counterexample():
    p = parse_sygus("(synth-fun f ((x Int)) Int)\n(declare-var x Int)")
    assert find_counterexample(p, parse_candidate("(define-fun f ((x Int)) Int 7)")) is None


def test_sampling_is_seeded():
    p = parse_sygus("(set-logic BV)\n(synth-fun f ((x (_ BitVec 32))) (_ BitVec 32))\n"
                    "(declare-var x (_ BitVec 32))\n(constraint (bvult (f x) #x80000000))")
    cand = parse_candidate("(define-fun f ((x (_ BitVec 32))) (_ BitVec 32) x)")
    cfg = SearchConfig(seed=7, random_samples=200)
    a = find_counterexample(p, cand, cfg)
    assert a is not None and a == find_counterexample(p, cand, SearchConfig(seed=7, random_samples=200))
    assert a["x"].value >= 0x80000000


def test_small_bitvector_exhaustive():
    p = parse_sygus("(set-logic BV)\n(synth-fun f ((x (_ BitVec 8))) (_ BitVec 8))\n"
                    "(declare-var x (_ BitVec 8))\n(constraint (= (f x) (bvadd x x)))")
    assert find_counterexample(p, parse_candidate("(define-fun f ((x (_ BitVec 8))) (_ BitVec 8) (bvshl x #x01))")) is None
    cex = find_counterexample(p, parse_candidate("(define-fun f ((x (_ BitVec 8))) (_ BitVec 8) (bvmul x #x02))"))
    assert cex is None
    cex = find_counterexample(p, parse_candidate("(define-fun f ((x (_ BitVec 8))) (_ BitVec 8) x)"))
    assert cex == {"x": BitVec(8, 1)}


# --------------------------------------------------------------------------
# queries and verdicts

def test_query_negates_conjunction():
    p = parse_sygus(MI)
    q = emit_smt_query(p, parse_candidate(GOOD_MI))
    c1, c2 = (str(c) for c in p.constraints)
    assert f"(assert (not (and {c1} {c2})))" in q
    assert q.index(GOOD_MI) < q.index("(declare-const x Int)") < q.index("(assert")
    assert q.rstrip().endswith("(check-sat)") and "(set-logic LIA)" in q


def test_query_zero_constraints():
    p = parse_sygus("(synth-fun f ((x Int)) Int)\n(declare-var x Int)")
    assert "(assert (not true))" in emit_smt_query(p, parse_candidate("(define-fun f ((x Int)) Int x)"))


def test_query_two_functions_before_assert():
    p = parse_sygus(MAXMIN)
    cand = parse_candidate("(define-fun max ((x Int) (y Int)) Int (ite (<= x y) y x))\n"
                           "(define-fun min ((x Int) (y Int)) Int (ite (<= x y) x y))")
    q = emit_smt_query(p, cand)
    assert q.index("(define-fun max") < q.index("(assert") and q.index("(define-fun min") < q.index("(assert")


@pytest.mark.parametrize("cand,kind,detail", [
    (GOOD_MI, VerdictKind.PASS, None),
    (SWAPPED_MI, VerdictKind.SEMANTIC_FAIL, "counterexample: x = 0, y = 1"),
    ("(define-fun mi ((x Int) (y Int)) Int (- x y))", VerdictKind.GRAMMAR_FAIL, None),
    ("(define-fun mi ((x Int) (y Int) (S Int)) Int x)", VerdictKind.SYNTAX_FAIL, "signature mismatch"),
    ("(define-fun mi ((x Int) (y Int)) Int (ite", VerdictKind.SYNTAX_FAIL, None),
])
def test_check_candidate_verdicts(cand, kind, detail):
    v = check_candidate(parse_sygus(MI), cand)
    assert v.kind is kind
    if detail:
        assert detail in v.detail


def test_relaxed_skips_grammar():
    v = check_candidate(parse_sygus(MI), "(define-fun mi ((x Int) (y Int)) Int (ite (< x y) x y))", relaxed=True)
    assert v.kind is VerdictKind.PASS


def test_verifier_handle():
    ver = SygusVerifier()
    b = Benchmark("mi", Domain.SYGUS, MI)
    assert ver.verify(b, GOOD_MI, 10).passed
    assert Domain.SYGUS in ver.domains


# --------------------------------------------------------------------------
# agreement with an external solver

def _candidates():
    p = parse_sygus(MI)
    yield p, list(sygus_stream(p))
    p2 = parse_sygus(MAXMIN)
    bodies = ["(ite (<= x y) y x)", "(ite (<= x y) x y)", "x", "(+ x y)", "(- (+ x y) (ite (<= x y) x y))"]
    yield p2, [f"(define-fun max ((x Int) (y Int)) Int {a})\n(define-fun min ((x Int) (y Int)) Int {b})"
               for a in bodies for b in bodies]


@pytest.mark.skipif(Z3 is None, reason="z3 not installed")
def test_internal_search_agrees_with_z3():
    checked = 0
    for problem, cands in _candidates():
        for text in cands:
            cand = parse_candidate(text)
            internal = find_counterexample(problem, cand) is None
            answer = run_smt_solver(emit_smt_query(problem, cand), [Z3, "-in"], 10)
            assert answer in ("sat", "unsat")
            assert internal == (answer == "unsat"), text
            checked += 1
    assert checked == 16 + 25
