"""Per-domain benchmark loading and default generator/verifier construction."""

from __future__ import annotations

import glob
import importlib
import json
import os
import shlex
from pathlib import Path
from typing import Any, Callable

from .adapters import NUXMV_PATTERNS, ExternalChecker
from .generators.enumerator import EnumerativeGenerator, ReplayGenerator, sygus_stream, tla_stream
from .generators.llm import LlmConfig, LlmGenerator
from .harness import Benchmark, Domain
from .reactive import ReactiveVerifier
from .sketch_lisp import LispSketchVerifier, lisp_aux, load_lisp_bundle
from .sygus import SearchConfig, SygusVerifier, parse_sygus
from .tla_sketch import TlaSketchVerifier, load_sketch_bundle, sketch_aux

CHECKER_ENV = "LLMSYNTH_CHECKER_CMD"
SOLVER_ENV = "LLMSYNTH_SMT_SOLVER"


class ConfigError(ValueError):
    pass


def load_benchmark(path, domain: Domain, *, output_format: str = "smv", relaxed: bool = False) -> Benchmark:
    p = Path(path)
    if domain is Domain.REACTIVE:
        return Benchmark(p.stem, domain, p.read_text(), {"format": output_format})
    if domain is Domain.SYGUS:
        return Benchmark(p.stem, domain, p.read_text())
    if domain is Domain.TLA_SKETCH:
        sketch, meta = load_sketch_bundle(p)
        return Benchmark(sketch.name, domain, sketch.text, sketch_aux(sketch, meta, relaxed))
    lb = load_lisp_bundle(p)
    return Benchmark(lb.name, domain, lb.properties, lisp_aux(lb))


def load_benchmarks(pattern: str, domain: Domain, **kw) -> list[Benchmark]:
    """Benchmarks matched by a glob, sorted by path; ids must be unique."""
    paths = sorted(glob.glob(pattern, recursive=True))
    if domain is Domain.TLA_SKETCH:
        paths = [p for p in paths if p.endswith(".tla")]
    elif domain is Domain.ACL2S_SKETCH:
        paths = [p for p in paths if Path(p).is_dir()]
    if not paths:
        raise ConfigError(f"no benchmarks match {pattern!r}")
    out = [load_benchmark(p, domain, **kw) for p in paths]
    ids = [b.id for b in out]
    dup = {i for i in ids if ids.count(i) > 1}
    if dup:
        raise ConfigError(f"duplicate benchmark ids: {sorted(dup)}")
    return out


def resolve(spec: str) -> Callable:
    """``package.module:attr`` to the named object."""
    mod, _, attr = spec.partition(":")
    if not mod or not attr:
        raise ConfigError(f"expected module:attribute, got {spec!r}")
    try:
        return getattr(importlib.import_module(mod), attr)
    except (ImportError, AttributeError) as exc:
        raise ConfigError(f"cannot load {spec}: {exc}") from exc


def _lines(v: str | None) -> list[str]:
    return [x.strip() for x in (v or "").splitlines() if x.strip()]


def make_checker(adapter: dict[str, str], default_patterns: dict | None = None) -> ExternalChecker | None:
    command = os.environ.get(CHECKER_ENV) or adapter.get("command")
    if not command:
        return None
    patterns = dict(default_patterns or {})
    if adapter.get("pass_patterns"):
        patterns["pass_patterns"] = _lines(adapter["pass_patterns"])
    if adapter.get("fail_patterns"):
        patterns["fail_patterns"] = _lines(adapter["fail_patterns"])
    return ExternalChecker(shlex.split(command), cwd=adapter.get("cwd") or None, **patterns)


def make_verifier(config, benchmark: Benchmark):
    spec = config.verifier
    if callable(spec):
        return spec(config, benchmark)
    if spec != "internal":
        return resolve(spec)(config, benchmark)
    adapter = config.adapter
    d = benchmark.domain
    if d is Domain.REACTIVE:
        return ReactiveVerifier(make_checker(adapter, NUXMV_PATTERNS),
                                accept_io_mismatch=config.accept_io_mismatch)
    if d is Domain.SYGUS:
        solver = os.environ.get(SOLVER_ENV) or adapter.get("smt_command")
        return SygusVerifier(SearchConfig(seed=config.seed), shlex.split(solver) if solver else None,
                             relaxed=config.relaxed)
    if d is Domain.TLA_SKETCH:
        return TlaSketchVerifier(make_checker(adapter), relaxed=config.relaxed,
                                 workers=int(adapter.get("workers", 8)))
    return LispSketchVerifier(make_checker(adapter))


def llm_config(section: dict[str, str]) -> LlmConfig:
    try:
        endpoint, model = section["endpoint"], section["model"]
    except KeyError as exc:
        raise ConfigError(f"[llm] needs {exc.args[0]}") from None

    def num(key, cast, default):
        return cast(section[key]) if section.get(key) not in (None, "") else default

    return LlmConfig(endpoint, model, temperature=num("temperature", float, 0.8), top_p=num("top_p", float, 0.95),
                     top_k=num("top_k", int, 50), max_output_tokens=num("max_output_tokens", int, None),
                     reasoning_effort=section.get("reasoning_effort") or None,
                     api_key_env=section.get("api_key_env") or None)


def _replay(config, benchmark: Benchmark) -> ReplayGenerator:
    base = Path(config.replay_dir or ".")
    for name in (f"{benchmark.id}.json", f"{benchmark.id}.txt"):
        p = base / name
        if p.exists():
            if p.suffix == ".json":
                responses = json.loads(p.read_text())
                if not isinstance(responses, list) or not all(isinstance(r, str) for r in responses):
                    raise ConfigError(f"{p} must hold a JSON list of strings")
            else:
                responses = [p.read_text()]
            return ReplayGenerator(responses, cycle=True)
    raise ConfigError(f"no recorded responses for {benchmark.id} in {base}")


def make_generator(config, benchmark: Benchmark) -> Any:
    spec = config.generator
    if callable(spec):
        return spec(config, benchmark)
    if spec == "llm":
        return LlmGenerator(llm_config(config.llm))
    if spec == "replay":
        return _replay(config, benchmark)
    if spec == "enumerate":
        if benchmark.domain is Domain.SYGUS:
            return EnumerativeGenerator(sygus_stream(parse_sygus(benchmark.spec_text)))
        if benchmark.domain is Domain.TLA_SKETCH:
            return EnumerativeGenerator(tla_stream(benchmark.aux["sketch"]))
        raise ConfigError(f"the enumerator has no grammar to draw from in domain {benchmark.domain.value}")
    return resolve(spec)(config, benchmark)
