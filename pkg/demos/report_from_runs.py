"""A batch run plus report, end to end, with a canned generator.

Writes into ./demo_out (or the directory given as the first argument) and
prints the summary lines.  The "generator" replays fixed answers, so the
numbers depend only on the enumerated SyGuS problems, not on a model.
"""

import json
import sys
import tempfile
from pathlib import Path

from llmsynth.cli import RunConfig, cmd_report, cmd_run

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out")
work = Path(tempfile.mkdtemp(prefix="llmsynth-demo-"))

PROBLEM = """(set-logic LIA)
(synth-fun {name} ((x Int) (y Int)) Int
  ((S Int) (B Bool))
  ((S Int (x y 0 1 (+ S S) (ite B S S)))
   (B Bool ((<= S S)))))
(declare-var x Int)
(declare-var y Int)
(constraint {constraint})
(check-synth)
"""
TASKS = {
    "max2": "(and (>= (max2 x y) x) (>= (max2 x y) y) (or (= x (max2 x y)) (= y (max2 x y))))",
    "min2": "(and (<= (min2 x y) x) (<= (min2 x y) y) (or (= x (min2 x y)) (= y (min2 x y))))",
    "dbl": "(= (dbl x y) (+ x x))",
}
# What a model might have said, one list per task, in order.
ANSWERS = {
    "max2": ["x", "(ite (<= x y) y x)"],
    "min2": ["(ite (<= x y) y x)", "y", "(ite (<= x y) x y)"],
    "dbl": ["(+ x y)", "(+ x y)", "(+ x x)"],
}

bench = work / "bench"
replay = work / "replay"
bench.mkdir()
replay.mkdir()
for name, constraint in TASKS.items():
    (bench / f"{name}.sl").write_text(PROBLEM.format(name=name, constraint=constraint))
    defs = [f"(define-fun {name} ((x Int) (y Int)) Int {body})" for body in ANSWERS[name]]
    (replay / f"{name}.json").write_text(json.dumps(defs))

for mode in ("ilst", "single"):
    cfg = RunConfig(domain="sygus", benchmarks=str(bench / "*.sl"), generator="replay", replay_dir=str(replay),
                    mode=mode, budget_secs=30, method=f"replay-{mode}", out=work / mode)
    cmd_run(cfg)

print("\ncombined report in", out)
cmd_report([str(work / "ilst"), str(work / "single")], out, budget_secs=30)
print((out / "summary.csv").read_text())
