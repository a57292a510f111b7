"""Verifier-in-the-loop program synthesis harness.

Candidate generators (an LLM client or a grammar enumerator) are paired with
domain verifiers for reactive synthesis (AIGER / SMV), SyGuS, TLA+ sketches
and ACL2s sketches, and run under wall-clock budgets.
"""

from .harness import (Benchmark, Budget, CandidateRecord, Domain, FinalStatus, Mode, RunRecord,
                      Verdict, VerdictKind, cache_key, run_ilst, run_single_pass, split_budget)

__version__ = "0.1.0"

__all__ = [
    "Benchmark", "Budget", "CandidateRecord", "Domain", "FinalStatus", "Mode", "RunRecord",
    "Verdict", "VerdictKind", "cache_key", "run_ilst", "run_single_pass", "split_budget",
]
