from .aiger import AigerCircuit, parse_aiger, simulate_aiger, truth_table, validate_symbols
from .boolexpr import BoolExpr, parse_expr
from .errors import GrammarFail, SemanticFail, StateLimitExceeded, SyntaxFail
from .fsm import (Deterministic, Diverges, Fsm, Holds, Violated, aiger_to_fsm, check_determinism,
                  check_invariant, replay_divergence, replay_violation, smv_to_fsm)
from .smv import (SanityReport, SmvModule, normalize_tokens, parse_composed, parse_smv_subset,
                  sanity_check_smv, self_compose)
from .tlsf import TlsfInterface, invariant_guarantees, parse_tlsf_interface
from .verifier import ReactiveVerifier

__all__ = [
    "AigerCircuit", "parse_aiger", "simulate_aiger", "truth_table", "validate_symbols",
    "BoolExpr", "parse_expr", "GrammarFail", "SemanticFail", "StateLimitExceeded", "SyntaxFail",
    "Deterministic", "Diverges", "Fsm", "Holds", "Violated", "aiger_to_fsm", "check_determinism",
    "check_invariant", "replay_divergence", "replay_violation", "smv_to_fsm", "SanityReport",
    "SmvModule", "normalize_tokens", "parse_composed", "parse_smv_subset", "sanity_check_smv",
    "self_compose", "TlsfInterface", "invariant_guarantees", "parse_tlsf_interface", "ReactiveVerifier",
]
