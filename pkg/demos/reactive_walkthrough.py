"""Reactive synthesis artefacts, checked without any external model checker.

Run with ``python3 demos/reactive_walkthrough.py``.
"""

from llmsynth.reactive import (check_determinism, parse_aiger, parse_smv_subset, parse_tlsf_interface,
                               sanity_check_smv, self_compose, smv_to_fsm, truth_table, validate_symbols)
from llmsynth.reactive import ReactiveVerifier
from llmsynth.harness import Benchmark, Domain

TLSF = """
INFO { TITLE: "and" SEMANTICS: Mealy TARGET: Mealy }
MAIN {
  INPUTS { a; b; }
  OUTPUTS { outp; }
  GUARANTEES { G(outp <-> (a && b)); }
}
"""

AAG = "REALIZABLE\naag 3 2 0 1 1\n2\n4\n6\n6 2 4\ni0 a\ni1 b\no0 outp\n"

iface = parse_tlsf_interface(TLSF)
print("inputs", iface.inputs, "outputs", iface.outputs)

# A two-input AND gate as an and-inverter graph.
circuit = parse_aiger(AAG, require_realizable=True)
validate_symbols(circuit, iface)
print("truth table (rows a b = 00, 01, 10, 11):")
print(truth_table(circuit))

# Swap the gate for an OR (negate both inputs and the output) and let the verifier find the trace.
bench = Benchmark("and", Domain.REACTIVE, TLSF, {"format": "aiger"})
or_gate = AAG.replace("\n6\n6 2 4", "\n7\n6 3 5")
print("OR gate verdict:", ReactiveVerifier().verify(bench, or_gate, 10))

# The same function as an SMV module with one latch that remembers the last output.
SMV = """MODULE main
IVAR
  a : boolean;
  b : boolean;
VAR
  last : boolean;
DEFINE
  outp := a & b;
ASSIGN
  init(last) := FALSE;
  next(last) := outp;
"""
module = parse_smv_subset(SMV)
print("sanity:", sanity_check_smv(module, iface))
print("deterministic:", bool(check_determinism(smv_to_fsm(module))))
print("self-composition used by an external checker:")
print(self_compose(module))

smv_bench = Benchmark("and", Domain.REACTIVE, TLSF, {"format": "smv"})
print("SMV verdict:", ReactiveVerifier().verify(smv_bench, SMV, 10))
