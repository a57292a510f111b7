"""Reactive-domain verifier: AIGER or SMV candidate against a TLSF benchmark."""

from __future__ import annotations

from ..adapters import ExternalChecker
from ..grammar import ParseError
from ..harness import Verdict, VerdictKind
from .aiger import parse_aiger, validate_symbols
from .errors import GrammarFail, SemanticFail, StateLimitExceeded, SyntaxFail
from .fsm import DEFAULT_STATE_CAP, Fsm, aiger_to_fsm, check_determinism, check_invariant, smv_to_fsm
from .smv import parse_smv_subset, sanity_check_smv, smv_with_ltlspec
from .tlsf import TlsfInterface, invariant_guarantees, parse_tlsf_interface, to_nuxmv_ltl


def _trace_text(inputs, names) -> str:
    steps = []
    for k, vec in enumerate(inputs):
        bits = ", ".join(f"{n}={int(b)}" for n, b in zip(names, vec))
        steps.append(f"step {k}: {bits}" if bits else f"step {k}")
    return "; ".join(steps)


class ReactiveVerifier:
    """Checks a candidate circuit or module.

    Order: parse, interface check, determinism (SMV only), then the
    guarantees.  Guarantees of the form ``G(p)`` with propositional ``p`` and
    no assumptions are decided by the internal explicit-state search; other
    specifications need ``model_checker`` (run on the SMV text plus an
    LTLSPEC line, or on the AIGER file with the TLSF as ``{spec}``).
    """

    domains = ("Reactive",)

    def __init__(self, model_checker: ExternalChecker | None = None, *, accept_io_mismatch: bool = False,
                 state_cap: int = DEFAULT_STATE_CAP, default_format: str = "smv"):
        self.model_checker = model_checker
        self.accept_io_mismatch = accept_io_mismatch
        self.state_cap = state_cap
        self.default_format = default_format
        self._tlsf: dict[str, TlsfInterface] = {}

    def interface(self, benchmark) -> TlsfInterface:
        if benchmark.id not in self._tlsf:
            self._tlsf[benchmark.id] = parse_tlsf_interface(benchmark.spec_text)
        return self._tlsf[benchmark.id]

    def verify(self, benchmark, candidate: str, timeout: float) -> Verdict:
        try:
            tlsf = self.interface(benchmark)
        except ParseError as exc:
            raise ValueError(f"benchmark {benchmark.id}: bad TLSF: {exc}") from exc
        fmt = (benchmark.aux or {}).get("format", self.default_format)
        try:
            if fmt == "aiger":
                return self._verify_aiger(benchmark, tlsf, candidate, timeout)
            return self._verify_smv(benchmark, tlsf, candidate, timeout)
        except SyntaxFail as exc:
            return Verdict(VerdictKind.SYNTAX_FAIL, str(exc))
        except GrammarFail as exc:
            return Verdict(VerdictKind.GRAMMAR_FAIL, str(exc))
        except SemanticFail as exc:
            return Verdict(VerdictKind.SEMANTIC_FAIL, str(exc))
        except StateLimitExceeded as exc:
            return Verdict(VerdictKind.VERIFY_TIMEOUT, str(exc))

    def _verify_aiger(self, benchmark, tlsf, candidate, timeout) -> Verdict:
        circuit = parse_aiger(candidate, require_realizable=True)
        validate_symbols(circuit, tlsf)
        return self._guarantees(aiger_to_fsm(circuit), tlsf, candidate, benchmark, timeout, ".aag")

    def _verify_smv(self, benchmark, tlsf, candidate, timeout) -> Verdict:
        module = parse_smv_subset(candidate, strict=False)
        report = sanity_check_smv(module, tlsf)
        if not (report.structure_ok and report.boolean_ok):
            bad = [d for d in report.diagnostics if not d.startswith("io:")]
            raise SyntaxFail("; ".join(bad))
        if not report.io_mapping_ok and not self.accept_io_mismatch:
            raise GrammarFail("; ".join(d for d in report.diagnostics if d.startswith("io:")))
        fsm = smv_to_fsm(module)
        det = check_determinism(fsm, self.state_cap)
        if not det:
            raise SemanticFail("module is not deterministic: " + _trace_text(det.inputs, fsm.input_names))
        text = smv_with_ltlspec(module, to_nuxmv_ltl(tlsf))
        return self._guarantees(fsm, tlsf, text, benchmark, timeout, ".smv")

    def _guarantees(self, fsm: Fsm, tlsf, text, benchmark, timeout, suffix) -> Verdict:
        props = invariant_guarantees(tlsf)
        if props is not None:
            for p in props:
                try:
                    res = check_invariant(fsm, p, self.state_cap)
                except KeyError as exc:
                    # only reachable with accept_io_mismatch: the guarantee names a signal the candidate lacks
                    return Verdict(VerdictKind.VERIFY_TIMEOUT, f"cannot decide internally: {exc.args[0]}")
                if not res:
                    raise SemanticFail("guarantee violated after inputs " + _trace_text(res.inputs, fsm.input_names))
            return Verdict(VerdictKind.PASS)
        if self.model_checker is None:
            return Verdict(VerdictKind.VERIFY_TIMEOUT,
                           "guarantees need a model checker and none is configured")
        checker = self.model_checker
        if checker.suffix != suffix:
            checker = ExternalChecker(checker.argv, checker.pass_patterns, checker.fail_patterns,
                                      checker.cwd, suffix, checker.nonzero_is_fail)
        return checker.run(text, timeout, {"spec.tlsf": benchmark.spec_text})
