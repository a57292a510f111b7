"""Generate/verify loop with wall-clock budgets, verdict caching and run logs.

Two modes are supported:

* ILST: keep asking the generator (always with the same prompt) and checking
  each candidate until one passes or the budget runs out.
* single pass: ask once and give whatever budget is left to the verifier.

Generators and verifiers are duck-typed handles::

    generator.generate(prompt: str, timeout: float) -> str
    verifier.verify(benchmark, candidate: str, timeout: float) -> Verdict

``generate`` may raise :class:`TokenBudgetExceeded`, :class:`DeadlineExceeded`
or :class:`GeneratorError`.  Every call is bounded by a watchdog thread, so a
handle that ignores its timeout cannot hold a run past the grace interval.
"""

from __future__ import annotations

import enum
import json
import logging
import re
import threading
import time
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Iterable

log = logging.getLogger(__name__)

GRACE_SECS = 2.0
DEFAULT_BUDGET_SECS = 600.0
RECURSIVE_BUDGET_SECS = 900.0


class Domain(str, enum.Enum):
    REACTIVE = "Reactive"
    SYGUS = "Sygus"
    TLA_SKETCH = "TlaSketch"
    ACL2S_SKETCH = "Acl2sSketch"

    @classmethod
    def parse(cls, text: str) -> "Domain":
        key = text.strip().lower().replace("_", "").replace("-", "")
        for d in cls:
            if d.value.lower() == key:
                return d
        aliases = {"tla": cls.TLA_SKETCH, "acl2s": cls.ACL2S_SKETCH, "lisp": cls.ACL2S_SKETCH,
                   "ltl": cls.REACTIVE}
        if key in aliases:
            return aliases[key]
        raise ValueError(f"unknown domain {text!r}")


class VerdictKind(str, enum.Enum):
    PASS = "Pass"
    SYNTAX_FAIL = "SyntaxFail"
    GRAMMAR_FAIL = "GrammarFail"
    SEMANTIC_FAIL = "SemanticFail"
    VERIFY_TIMEOUT = "VerifyTimeout"
    TOKEN_BUDGET_EXCEEDED = "TokenBudgetExceeded"


class Mode(str, enum.Enum):
    ILST = "Ilst"
    SINGLE_PASS = "SinglePass"


class FinalStatus(str, enum.Enum):
    SOLVED = "Solved"
    TIMEOUT = "Timeout"
    GENERATOR_ERROR = "GeneratorError"
    # single pass ended on a failing verdict, or a finite enumerator ran dry
    UNSOLVED = "Unsolved"


# caching is on by default only where the candidate space repeats a lot
CACHE_DEFAULT = {
    Domain.REACTIVE: False,
    Domain.SYGUS: False,
    Domain.TLA_SKETCH: True,
    Domain.ACL2S_SKETCH: True,
}


class GeneratorError(RuntimeError):
    """The generator cannot continue (transport failure, bad config, ...)."""


class TransportError(GeneratorError):
    pass


class DeadlineExceeded(GeneratorError):
    pass


class TokenBudgetExceeded(Exception):
    """The response was cut off by the output-token limit."""

    def __init__(self, message: str = "output token budget exceeded", partial: str = ""):
        super().__init__(message)
        self.partial = partial


class Exhausted(Exception):
    """A finite candidate stream has nothing left to offer."""


class CandidateRejected(Exception):
    """Raised by post-processors when a raw response holds no candidate."""

    def __init__(self, kind: VerdictKind, detail: str):
        super().__init__(detail)
        self.kind = kind
        self.detail = detail


@dataclass
class Benchmark:
    id: str
    domain: Domain
    spec_text: str
    aux: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if not self.id:
            raise ValueError("benchmark id must be nonempty")
        self.domain = Domain(self.domain)


@dataclass
class Budget:
    total_secs: float = DEFAULT_BUDGET_SECS
    consumed_secs: float = 0.0

    def __post_init__(self):
        if self.total_secs <= 0:
            raise ValueError("budget must be positive")
        if not 0 <= self.consumed_secs <= self.total_secs:
            raise ValueError("consumed time must lie within the budget")

    @classmethod
    def for_domain(cls, domain: Domain) -> "Budget":
        if Domain(domain) is Domain.ACL2S_SKETCH:
            return cls(RECURSIVE_BUDGET_SECS)
        return cls(DEFAULT_BUDGET_SECS)


@dataclass
class CandidateRecord:
    iteration: int
    raw_response: str
    extracted: str | None
    gen_secs: float
    cache_hit: bool = False


@dataclass
class Verdict:
    kind: VerdictKind
    detail: str | None = None
    verify_secs: float = 0.0

    def __post_init__(self):
        self.kind = VerdictKind(self.kind)
        if self.kind is VerdictKind.SEMANTIC_FAIL and not self.detail:
            raise ValueError("a semantic failure needs a counterexample or explanation")
        if self.verify_secs < 0:
            raise ValueError("verify_secs must be nonnegative")

    @property
    def passed(self) -> bool:
        return self.kind is VerdictKind.PASS


@dataclass
class RunRecord:
    benchmark_id: str
    mode: Mode
    solved: bool
    total_secs: float
    iterations_total: int
    iterations_distinct: int
    verdicts: list[tuple[CandidateRecord, Verdict]]
    final_status: FinalStatus
    method: str = ""
    domain: str = ""

    def to_json(self) -> str:
        return json.dumps(_record_to_dict(self), sort_keys=False)

    @classmethod
    def from_json(cls, text: str) -> "RunRecord":
        d = json.loads(text)
        verdicts = [
            (CandidateRecord(**c), Verdict(kind=VerdictKind(v["kind"]), detail=v.get("detail"),
                                           verify_secs=v.get("verify_secs", 0.0)))
            for c, v in ((p["candidate"], p["verdict"]) for p in d["verdicts"])
        ]
        return cls(
            benchmark_id=d["benchmark_id"],
            mode=Mode(d["mode"]),
            solved=bool(d["solved"]),
            total_secs=float(d["total_secs"]),
            iterations_total=int(d["iterations_total"]),
            iterations_distinct=int(d["iterations_distinct"]),
            verdicts=verdicts,
            final_status=FinalStatus(d["final_status"]),
            method=d.get("method", ""),
            domain=d.get("domain", ""),
        )


def _ms(x: float) -> float:
    return round(float(x), 3)


def _record_to_dict(r: RunRecord) -> dict:
    pairs = []
    for c, v in r.verdicts:
        cd = asdict(c)
        cd["gen_secs"] = _ms(cd["gen_secs"])
        pairs.append({
            "candidate": cd,
            "verdict": {"kind": v.kind.value, "detail": v.detail, "verify_secs": _ms(v.verify_secs)},
        })
    return {
        "benchmark_id": r.benchmark_id,
        "method": r.method,
        "domain": r.domain,
        "mode": r.mode.value,
        "solved": r.solved,
        "total_secs": _ms(r.total_secs),
        "iterations_total": r.iterations_total,
        "iterations_distinct": r.iterations_distinct,
        "verdicts": pairs,
        "final_status": r.final_status.value,
    }


def write_run_log(records: Iterable[RunRecord], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(r.to_json() + "\n")


def read_run_log(path) -> list[RunRecord]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                out.append(RunRecord.from_json(line))
            except (KeyError, ValueError, TypeError) as exc:
                raise ValueError(f"{path}:{lineno}: malformed run record: {exc}") from exc
    return out


# --------------------------------------------------------------------------
# budget and cache helpers

def split_budget(budget: Budget, elapsed: float) -> float:
    """Seconds left for the next stage once ``elapsed`` has been spent."""
    if elapsed < 0:
        raise ValueError("elapsed must be nonnegative")
    return max(0.0, budget.total_secs - budget.consumed_secs - elapsed)


_STRING_OR_SPACE = re.compile(r'"(?:[^"\\]|\\.|"")*"|\|[^|]*\||\s+')


def cache_key(extracted_candidate: str) -> str:
    """Whitespace-normalized candidate text.

    Runs of whitespace collapse to one space, except inside string literals
    and ``|quoted symbols|``.  Whitespace next to a parenthesis is dropped so
    ``( f x )`` and ``(f x)`` share a key.
    """
    text = extracted_candidate.strip()
    out, pos = [], 0
    for m in _STRING_OR_SPACE.finditer(text):
        out.append(text[pos:m.start()])
        tok = m.group(0)
        if not tok.isspace():
            out.append(tok)
        elif text[m.start() - 1] != "(" and text[m.end()] != ")":
            out.append(" ")
        pos = m.end()
    out.append(text[pos:])
    return "".join(out)


# --------------------------------------------------------------------------
# bounded calls

def _bounded(fn: Callable[[], Any], timeout: float):
    """Run ``fn`` on a watchdog thread; returns (finished, value, exc)."""
    box: dict[str, Any] = {}

    def target():
        try:
            box["value"] = fn()
        except BaseException as exc:  # handed back to the caller
            box["exc"] = exc

    t = threading.Thread(target=target, daemon=True)
    t.start()
    t.join(max(0.0, timeout) + GRACE_SECS / 2)
    if t.is_alive():
        return False, None, None
    return True, box.get("value"), box.get("exc")


def _check_domain(handle, domain: Domain, what: str):
    supported = getattr(handle, "domains", None)
    if supported is not None and domain not in supported:
        raise ValueError(f"{what} is not registered for domain {domain.value}")


def _default_prompt(benchmark: Benchmark) -> str:
    from .generators.prompts import build_prompt
    return build_prompt(benchmark)


def _default_postprocess(benchmark: Benchmark) -> Callable[[str], str]:
    from .generators.postprocess import postprocess
    fmt = benchmark.aux.get("format")
    return lambda raw: postprocess(raw, benchmark.domain, output_format=fmt)


class _Loop:
    """State shared by both modes for one benchmark."""

    def __init__(self, benchmark, generator, verifier, budget, *, cache, prompt,
                 postprocess, clock, method):
        if budget.total_secs <= 0:
            raise ValueError("budget must be positive")
        _check_domain(generator, benchmark.domain, "generator")
        _check_domain(verifier, benchmark.domain, "verifier")
        self.benchmark = benchmark
        self.generator = generator
        self.verifier = verifier
        self.budget = budget
        self.clock = clock or time.monotonic
        self.cache_enabled = CACHE_DEFAULT[benchmark.domain] if cache is None else cache
        self.cache: dict[str, Verdict] = {}
        self.keys: set[str] = set()
        self.prompt = prompt if prompt is not None else _default_prompt(benchmark)
        self.postprocess = postprocess or _default_postprocess(benchmark)
        self.method = method
        self.start = self.clock()
        self.deadline = self.start + budget.total_secs - budget.consumed_secs
        self.verdicts: list[tuple[CandidateRecord, Verdict]] = []

    def remaining(self) -> float:
        return self.deadline - self.clock()

    def generate(self, iteration: int):
        """One generation plus post-processing.

        Returns (status, record, verdict); status is 'ok', 'rejected',
        'timeout' or 'error'.  Post-processing time counts as generation time.
        """
        t0 = self.clock()
        timeout = self.deadline - t0
        finished, raw, exc = _bounded(lambda: self.generator.generate(self.prompt, timeout), timeout)
        if not finished:
            return "timeout", None, None
        if isinstance(exc, TokenBudgetExceeded):
            t1 = self.clock()
            if t1 >= self.deadline:
                return "timeout", None, None
            rec = CandidateRecord(iteration, exc.partial, None, t1 - t0)
            return "rejected", rec, Verdict(VerdictKind.TOKEN_BUDGET_EXCEEDED, str(exc))
        if isinstance(exc, (DeadlineExceeded, Exhausted)):
            return ("timeout" if isinstance(exc, DeadlineExceeded) else "exhausted"), None, None
        if exc is not None:
            if isinstance(exc, GeneratorError):
                log.warning("%s: generator failed: %s", self.benchmark.id, exc)
                return "error", None, None
            raise exc
        raw = "" if raw is None else str(raw)
        try:
            extracted = self.postprocess(raw)
            verdict = None
        except CandidateRejected as rej:
            extracted, verdict = None, Verdict(rej.kind, rej.detail)
        t1 = self.clock()
        if t1 >= self.deadline:
            return "timeout", None, None
        rec = CandidateRecord(iteration, raw, extracted, t1 - t0)
        self.keys.add(cache_key(extracted if extracted is not None else raw))
        if verdict is not None:
            return "rejected", rec, verdict
        return "ok", rec, None

    def verify(self, rec: CandidateRecord) -> Verdict:
        key = cache_key(rec.extracted)
        if self.cache_enabled and key in self.cache:
            rec.cache_hit = True
            cached = self.cache[key]
            return Verdict(cached.kind, cached.detail, 0.0)
        t0 = self.clock()
        timeout = self.deadline - t0
        if timeout <= 0:
            return Verdict(VerdictKind.VERIFY_TIMEOUT, "no time left to verify", 0.0)
        finished, verdict, exc = _bounded(
            lambda: self.verifier.verify(self.benchmark, rec.extracted, timeout), timeout)
        t1 = self.clock()
        if exc is not None:
            raise exc
        if not finished:
            return Verdict(VerdictKind.VERIFY_TIMEOUT, "verifier cut off at deadline", max(0.0, t1 - t0))
        verdict = Verdict(verdict.kind, verdict.detail, max(0.0, t1 - t0))
        if t1 > self.deadline and verdict.kind is not VerdictKind.VERIFY_TIMEOUT:
            # verified too late: never counts as solved
            verdict = Verdict(VerdictKind.VERIFY_TIMEOUT,
                              f"verifier finished after the deadline with {verdict.kind.value}",
                              verdict.verify_secs)
        if self.cache_enabled and verdict.kind in (
                VerdictKind.SYNTAX_FAIL, VerdictKind.GRAMMAR_FAIL, VerdictKind.SEMANTIC_FAIL):
            self.cache[key] = verdict
        return verdict

    def finish(self, mode: Mode, status: FinalStatus) -> RunRecord:
        solved = status is FinalStatus.SOLVED
        return RunRecord(
            benchmark_id=self.benchmark.id,
            mode=mode,
            solved=solved,
            total_secs=self.clock() - self.start,
            iterations_total=len(self.verdicts),
            iterations_distinct=len(self.keys),
            verdicts=self.verdicts,
            final_status=status,
            method=self.method,
            domain=self.benchmark.domain.value,
        )


_STATUS = {"timeout": FinalStatus.TIMEOUT, "error": FinalStatus.GENERATOR_ERROR,
           "exhausted": FinalStatus.UNSOLVED}


def run_ilst(benchmark: Benchmark, generator, verifier, budget: Budget, *,
             cache: bool | None = None, prompt: str | None = None,
             postprocess: Callable[[str], str] | None = None,
             clock: Callable[[], float] | None = None, method: str = "") -> RunRecord:
    """Iterate generate -> post-process -> verify until a pass or the deadline.

    The prompt is computed once and reused verbatim on every iteration.  With
    caching on, a candidate whose cache key already failed is not re-verified.
    """
    loop = _Loop(benchmark, generator, verifier, budget, cache=cache, prompt=prompt,
                 postprocess=postprocess, clock=clock, method=method)
    iteration = 0
    while loop.remaining() > 0:
        iteration += 1
        status, rec, verdict = loop.generate(iteration)
        if status in _STATUS:
            return loop.finish(Mode.ILST, _STATUS[status])
        if status == "ok":
            verdict = loop.verify(rec)
        loop.verdicts.append((rec, verdict))
        if verdict.kind is VerdictKind.PASS:
            return loop.finish(Mode.ILST, FinalStatus.SOLVED)
        if verdict.kind is VerdictKind.VERIFY_TIMEOUT:
            return loop.finish(Mode.ILST, FinalStatus.TIMEOUT)
    return loop.finish(Mode.ILST, FinalStatus.TIMEOUT)


def run_single_pass(benchmark: Benchmark, generator, verifier, budget: Budget, *,
                    prompt: str | None = None,
                    postprocess: Callable[[str], str] | None = None,
                    clock: Callable[[], float] | None = None, method: str = "") -> RunRecord:
    """Generate once; the verifier gets whatever budget generation left over."""
    loop = _Loop(benchmark, generator, verifier, budget, cache=False, prompt=prompt,
                 postprocess=postprocess, clock=clock, method=method)
    status, rec, verdict = loop.generate(1)
    if status in _STATUS:
        return loop.finish(Mode.SINGLE_PASS, _STATUS[status])
    if status == "ok":
        verdict = loop.verify(rec)
    loop.verdicts.append((rec, verdict))
    if verdict.kind is VerdictKind.PASS:
        return loop.finish(Mode.SINGLE_PASS, FinalStatus.SOLVED)
    if verdict.kind is VerdictKind.VERIFY_TIMEOUT:
        return loop.finish(Mode.SINGLE_PASS, FinalStatus.TIMEOUT)
    return loop.finish(Mode.SINGLE_PASS, FinalStatus.UNSOLVED)
