"""The generate/verify loop on a SyGuS problem, with the grammar enumerator as generator.

Run with ``python3 demos/sygus_loop.py``.  No network or solver needed.
"""

from llmsynth.generators.enumerator import EnumerativeGenerator, sygus_stream
from llmsynth.generators.prompts import build_prompt
from llmsynth.harness import Benchmark, Budget, Domain, run_ilst
from llmsynth.sygus import SearchConfig, SygusVerifier, check_candidate, emit_smt_query, parse_candidate, \
    parse_sygus

MAX2 = """
(set-logic LIA)
(synth-fun max2 ((x Int) (y Int)) Int
  ((S Int) (B Bool))
  ((S Int (x y 0 1 (ite B S S)))
   (B Bool ((<= S S) (>= S S)))))
(declare-var x Int)
(declare-var y Int)
(constraint (>= (max2 x y) x))
(constraint (>= (max2 x y) y))
(constraint (or (= x (max2 x y)) (= y (max2 x y))))
(check-synth)
"""

problem = parse_sygus(MAX2)
print("synth-fun:", problem.synth_funs[0].name, "with", len(problem.constraints), "constraints")

# Hand-written candidates first.
for body in ["x", "(ite (<= x y) y x)", "(+ x y)"]:
    cand = f"(define-fun max2 ((x Int) (y Int)) Int {body})"
    print(f"{body:24s} ->", check_candidate(problem, cand, search=SearchConfig(exhaustive_bound=8)))

# The SMT-LIB query an external solver would receive for the right answer.
print(emit_smt_query(problem, parse_candidate("(define-fun max2 ((x Int) (y Int)) Int (ite (<= x y) y x))")))

# Now the loop: the enumerator proposes terms by size, the verifier rejects until one passes.
bench = Benchmark("max2", Domain.SYGUS, MAX2)
print(build_prompt(bench)[:300], "...")
gen = EnumerativeGenerator(sygus_stream(problem))
rec = run_ilst(bench, gen, SygusVerifier(SearchConfig(exhaustive_bound=8)), Budget(60), method="enumerate")
print(f"solved={rec.solved} after {rec.iterations_total} candidates in {rec.total_secs:.2f}s")
print("answer:", rec.verdicts[-1][0].extracted)
