"""Command-line entry point: batch runs, standalone checks and reports.

Exit status is 0 exactly when the command succeeded.  Diagnostics go to
standard error; data goes to files or standard output.
"""

from __future__ import annotations

import argparse
import configparser
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

from . import domains as dom
from .harness import Benchmark, Budget, Domain, Mode, RunRecord, VerdictKind, read_run_log, run_ilst, \
    run_single_pass, write_run_log
from .report import format_row, write_report

log = logging.getLogger("llmsynth")

DOMAIN_ALIASES = {
    "reactive": Domain.REACTIVE, "sygus": Domain.SYGUS, "tlasketch": Domain.TLA_SKETCH, "tla": Domain.TLA_SKETCH,
    "acl2ssketch": Domain.ACL2S_SKETCH, "acl2s": Domain.ACL2S_SKETCH, "lisp": Domain.ACL2S_SKETCH,
}
MODE_ALIASES = {"ilst": Mode.ILST, "single": Mode.SINGLE_PASS, "single-pass": Mode.SINGLE_PASS,
                "single_pass": Mode.SINGLE_PASS}
SECRET_WORDS = ("apikey", "token", "secret", "password")


def _looks_secret(key: str) -> bool:
    # whole underscore-separated words, so max_output_tokens is not a secret but auth_token is
    words = key.lower().split("_")
    if words[-1] == "env":
        return False
    return any(w in SECRET_WORDS for w in words) or "api_key" in "_".join(words)


class ConfigError(dom.ConfigError):
    pass


def parse_domain(text) -> Domain:
    if isinstance(text, Domain):
        return text
    key = str(text).lower().replace("-", "").replace("_", "")
    if key not in DOMAIN_ALIASES:
        raise ConfigError(f"unknown domain {text!r}; expected one of reactive, sygus, tla, acl2s")
    return DOMAIN_ALIASES[key]


def parse_mode(text) -> Mode:
    if isinstance(text, Mode):
        return text
    try:
        return MODE_ALIASES[str(text).lower()]
    except KeyError:
        raise ConfigError(f"unknown mode {text!r}; expected ilst or single") from None


@dataclass
class RunConfig:
    """Everything a batch run needs.

    ``generator`` is ``llm``, ``enumerate``, ``replay``, ``module:factory``
    or a callable ``(config, benchmark) -> handle``; ``verifier`` likewise is
    ``internal``, ``module:factory`` or a callable.  A ``budget_secs`` of
    None means the domain default.
    """

    domain: Domain
    benchmarks: str
    generator: str | Callable = "llm"
    verifier: str | Callable = "internal"
    mode: Mode = Mode.ILST
    budget_secs: float | None = None
    cache: bool | None = None
    relaxed: bool = False
    workers: int = 1
    seed: int = 0
    out: Path = Path("results")
    method: str = ""
    output_format: str = "smv"
    replay_dir: str | None = None
    accept_io_mismatch: bool = False
    llm: dict[str, str] = field(default_factory=dict)
    adapter: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        self.domain = parse_domain(self.domain)
        self.mode = parse_mode(self.mode)
        self.out = Path(self.out)
        if self.budget_secs is not None and not self.budget_secs > 0:
            raise ConfigError("budget must be positive")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        if self.output_format not in ("smv", "aiger"):
            raise ConfigError(f"output format must be smv or aiger, not {self.output_format!r}")
        if not self.method:
            g = self.generator if isinstance(self.generator, str) else getattr(self.generator, "__name__", "custom")
            self.method = g if self.mode is Mode.ILST else f"{g}-single"

    def budget(self) -> Budget:
        if self.budget_secs is None:
            return Budget.for_domain(self.domain)
        return Budget(self.budget_secs)


def _bool(text: str) -> bool:
    v = text.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


_RUN_KEYS: dict[str, Callable[[str], Any]] = {
    "domain": str, "benchmarks": str, "generator": str, "verifier": str, "mode": str,
    "budget_secs": float, "cache": _bool, "relaxed": _bool, "workers": int, "seed": int, "out": str,
    "method": str, "output_format": str, "replay_dir": str, "accept_io_mismatch": _bool,
}


def read_manifest(path) -> dict[str, Any]:
    """Keyword arguments for :class:`RunConfig` from an INI manifest."""
    cp = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for section in cp.sections():
        for key in cp[section]:
            if _looks_secret(key):
                raise ConfigError(f"[{section}] {key}: secrets are read from the environment only; "
                                  f"name the variable with api_key_env instead")
    unknown = set(cp.sections()) - {"run", "llm", "adapter"}
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    kw: dict[str, Any] = {}
    if cp.has_section("run"):
        for key, raw in cp["run"].items():
            if key not in _RUN_KEYS:
                raise ConfigError(f"[run] unknown key {key}")
            try:
                kw[key] = _RUN_KEYS[key](raw)
            except ValueError as exc:
                raise ConfigError(f"[run] {key}: {exc}") from None
    for section in ("llm", "adapter"):
        if cp.has_section(section):
            kw[section] = dict(cp[section])
    return kw


# --------------------------------------------------------------------------
# run

def _run_one(config: RunConfig, benchmark: Benchmark) -> RunRecord:
    generator = dom.make_generator(config, benchmark)
    verifier = dom.make_verifier(config, benchmark)
    clock = getattr(generator, "clock", None)
    kw = dict(clock=clock, method=config.method)
    if config.mode is Mode.ILST:
        return run_ilst(benchmark, generator, verifier, config.budget(), cache=config.cache, **kw)
    return run_single_pass(benchmark, generator, verifier, config.budget(), **kw)


def cmd_run(config: RunConfig) -> int:
    try:
        benchmarks = dom.load_benchmarks(config.benchmarks, config.domain, output_format=config.output_format,
                                         relaxed=config.relaxed)
    except (dom.ConfigError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    runs_dir = config.out / "runs"
    try:
        runs_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"error: cannot create {runs_dir}: {exc}", file=sys.stderr)
        return 2

    def work(b: Benchmark):
        try:
            rec = _run_one(config, b)
        except Exception as exc:  # a crash in one benchmark must not lose the others
            log.debug("benchmark %s crashed", b.id, exc_info=True)
            return b, None, exc
        write_run_log([rec], runs_dir / f"{b.id}.json")
        return b, rec, None

    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        results = list(pool.map(work, benchmarks))

    records, crashed = [], 0
    for b, rec, exc in results:
        if exc is not None:
            crashed += 1
            print(f"error: {b.id}: {type(exc).__name__}: {exc}", file=sys.stderr)
        else:
            records.append(rec)
    write_run_log(records, config.out / "runs.jsonl")
    # report from the logged (millisecond) values so a later `report` over the same logs agrees
    records = read_run_log(config.out / "runs.jsonl")
    rows = write_report(records, config.out, config.budget_secs)
    for row in rows:
        print(format_row(row))
    return 1 if crashed else 0


def config_from_args(args) -> RunConfig:
    kw = read_manifest(args.config) if args.config else {}
    overrides = {
        "domain": args.domain, "benchmarks": args.benchmarks, "generator": args.generator,
        "verifier": args.verifier, "mode": args.mode, "budget_secs": args.budget_secs, "cache": args.cache,
        "relaxed": args.relaxed, "workers": args.workers, "seed": args.seed, "out": args.out,
        "method": args.method, "output_format": args.output_format, "replay_dir": args.replay_dir,
        "accept_io_mismatch": args.accept_io_mismatch,
    }
    kw.update({k: v for k, v in overrides.items() if v is not None})
    for need in ("domain", "benchmarks"):
        if need not in kw:
            raise ConfigError(f"missing {need} (flag --{need} or [run] {need})")
    return RunConfig(**kw)


# --------------------------------------------------------------------------
# check

def _read(path) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc


def _verdict_status(v) -> int:
    if v.kind is VerdictKind.PASS:
        print("PASS")
        return 0
    print(f"{v.kind.value}: {v.detail or ''}".rstrip(), file=sys.stderr)
    return 1


def _check_aiger(paths, opts) -> int:
    from .reactive import parse_aiger, truth_table, ReactiveVerifier
    aag, tlsf = paths
    text = _read(aag)
    bench = Benchmark(Path(tlsf).stem, Domain.REACTIVE, _read(tlsf), {"format": "aiger"})
    status = _verdict_status(ReactiveVerifier(dom.make_checker({}, dom.NUXMV_PATTERNS)).verify(bench, text, opts.timeout))
    if status == 0:
        c = parse_aiger(text)
        if c.L == 0 and c.I <= 8:
            table = truth_table(c)
            print(" ".join(c.input_names()) + " | " + " ".join(c.output_names()))
            for row_index, row in enumerate(table):
                bits = format(row_index, f"0{c.I}b") if c.I else ""
                print(" ".join(bits) + " | " + " ".join(str(int(x)) for x in row))
    return status


def _check_smv(paths, opts) -> int:
    from .reactive import parse_tlsf_interface, sanity_check_smv
    from .reactive.smv import parse_smv_subset
    smv, tlsf = paths
    module = parse_smv_subset(_read(smv), strict=False)
    report = sanity_check_smv(module, parse_tlsf_interface(_read(tlsf)))
    for label, ok in (("structure", report.structure_ok), ("boolean", report.boolean_ok),
                      ("io mapping", report.io_mapping_ok)):
        print(f"{label}: {'ok' if ok else 'FAIL'}")
    for d in report.diagnostics:
        print(d, file=sys.stderr)
    io_ok = report.io_mapping_ok or opts.accept_io_mismatch
    return 0 if report.structure_ok and report.boolean_ok and io_ok else 1


def _check_determinism(paths, opts) -> int:
    from .reactive import check_determinism, replay_divergence, self_compose, smv_to_fsm
    from .reactive.smv import parse_smv_subset
    (smv,) = paths
    module = parse_smv_subset(_read(smv), strict=True)
    composed = self_compose(module)
    target = Path(opts.out) if opts.out else Path(smv).with_suffix(".selfcomp.smv")
    target.write_text(composed)
    print(target)
    fsm = smv_to_fsm(module)
    res = check_determinism(fsm)
    if res:
        print(f"deterministic ({res.explored} states explored)")
        return 0
    steps = "; ".join(" ".join(f"{n}={int(b)}" for n, b in zip(fsm.input_names, vec)) for vec in res.inputs)
    replayed = "replayed" if replay_divergence(fsm, res) else "NOT replayable"
    print(f"not deterministic after inputs [{steps}] ({replayed})", file=sys.stderr)
    return 1


def _check_sygus(paths, opts) -> int:
    from .sygus import SearchConfig, check_candidate, emit_smt_query, parse_candidate, parse_sygus
    problem_path, candidate_path = paths
    problem = parse_sygus(_read(problem_path))
    candidate = _read(candidate_path)
    if opts.smt_query:
        Path(opts.smt_query).write_text(emit_smt_query(problem, parse_candidate(candidate)))
    solver = opts.solver.split() if opts.solver else None
    v = check_candidate(problem, candidate, search=SearchConfig(exhaustive_bound=opts.bound, seed=opts.seed),
                        solver_argv=solver, timeout=opts.timeout, relaxed=opts.relaxed)
    return _verdict_status(v)


def _check_mapping(paths, opts) -> int:
    from .tla_sketch import GrammarFail, SyntaxFail, check_mapping_grammar, load_sketch_bundle, parse_mapping, \
        substitute
    sketch_path, mapping_path = paths
    sketch, _ = load_sketch_bundle(sketch_path)
    try:
        mapping = parse_mapping(_read(mapping_path), sketch)
        if not opts.relaxed:
            check_mapping_grammar(mapping, sketch)
    except (SyntaxFail, GrammarFail) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    completed = substitute(sketch, mapping)
    if opts.out:
        Path(opts.out).write_text(completed)
        print(opts.out)
    else:
        sys.stdout.write(completed)
    return 0


def _check_sexpr(paths, opts) -> int:
    from .sketch_lisp import SyntaxFail, load_lisp_bundle, parse_candidates, validate_candidate
    (path,) = paths
    try:
        forms = parse_candidates(_read(path))
        if opts.bundle:
            defs = validate_candidate(forms, load_lisp_bundle(opts.bundle))
            print("defines " + ", ".join(d.name for d in defs))
        else:
            print(f"{len(forms)} well-formed top-level forms")
    except SyntaxFail as exc:
        print(f"SyntaxFail: {exc}", file=sys.stderr)
        return 1
    return 0


CHECKS = {
    "aiger": (_check_aiger, 2, "CIRCUIT.aag SPEC.tlsf"),
    "smv": (_check_smv, 2, "MODULE.smv SPEC.tlsf"),
    "determinism": (_check_determinism, 1, "MODULE.smv"),
    "sygus": (_check_sygus, 2, "PROBLEM.sl CANDIDATE"),
    "mapping": (_check_mapping, 2, "SKETCH.tla MAPPING.json"),
    "sexpr": (_check_sexpr, 1, "CANDIDATE.lisp"),
}


def cmd_check(kind: str, paths: Sequence[str], opts=None) -> int:
    opts = opts or build_parser().parse_args(["check", kind, *paths])
    fn, arity, usage = CHECKS[kind]
    if len(paths) != arity:
        print(f"error: check {kind} expects {usage}", file=sys.stderr)
        return 2
    for p in paths:
        if not Path(p).exists():
            print(f"error: no such file: {p}", file=sys.stderr)
            return 2
    try:
        return fn(list(paths), opts)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError, OSError) as exc:
        # parse errors from any of the checkers
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


# --------------------------------------------------------------------------
# report

def _log_files(path: Path) -> list[Path]:
    if path.is_dir():
        if (path / "runs.jsonl").exists():
            return [path / "runs.jsonl"]
        return sorted((path / "runs").glob("*.json")) if (path / "runs").is_dir() else sorted(path.glob("*.json*"))
    return [path]


def cmd_report(paths: Sequence[str], out, budget_secs: float | None = None) -> int:
    records: list[RunRecord] = []
    try:
        for p in paths:
            for f in _log_files(Path(p)):
                records.extend(read_run_log(f))
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        rows = write_report(records, out, budget_secs)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for row in rows:
        print(format_row(row))
    return 0


# --------------------------------------------------------------------------
# argument parsing

def _positive(cast):
    def conv(text):
        v = cast(text)
        if v <= 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return v
    return conv


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="llmsynth", description="Generate-and-verify synthesis runs and checks.")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the loop over a benchmark set")
    run.add_argument("--config", help="INI manifest with [run], [llm] and [adapter] sections")
    run.add_argument("--domain")
    run.add_argument("--benchmarks", help="glob of benchmark files (bundle directories for acl2s)")
    run.add_argument("--generator", help="llm, enumerate, replay or module:factory")
    run.add_argument("--verifier", help="internal or module:factory")
    run.add_argument("--mode", choices=["ilst", "single"])
    run.add_argument("--budget-secs", type=_positive(float))
    run.add_argument("--cache", action=argparse.BooleanOptionalAction, default=None)
    run.add_argument("--relaxed", action=argparse.BooleanOptionalAction, default=None)
    run.add_argument("--workers", type=_positive(int))
    run.add_argument("--seed", type=int)
    run.add_argument("--out")
    run.add_argument("--method", help="label for the summary rows")
    run.add_argument("--output-format", choices=["smv", "aiger"], help="reactive candidate format")
    run.add_argument("--replay-dir", help="recorded responses for --generator replay")
    run.add_argument("--accept-io-mismatch", action=argparse.BooleanOptionalAction, default=None)

    check = sub.add_parser("check", help="run one validator on files")
    check.add_argument("kind", choices=sorted(CHECKS))
    check.add_argument("paths", nargs="+")
    check.add_argument("--out", help="where to write derived files")
    check.add_argument("--timeout", type=_positive(float), default=600.0)
    check.add_argument("--relaxed", action="store_true", help="skip grammar checks")
    check.add_argument("--accept-io-mismatch", action="store_true")
    check.add_argument("--bound", type=_positive(int), default=32, help="integer search bound for sygus")
    check.add_argument("--seed", type=int, default=0)
    check.add_argument("--solver", help="SMT solver command line, e.g. 'z3 -in'")
    check.add_argument("--smt-query", help="also write the SMT query to this file")
    check.add_argument("--bundle", help="sketch bundle directory for sexpr checks")

    rep = sub.add_parser("report", help="summary and cactus CSVs from run logs")
    rep.add_argument("logs", nargs="*", help="log files or run output directories")
    rep.add_argument("--out", default=".")
    rep.add_argument("--budget-secs", type=_positive(float))
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "run":
        try:
            config = config_from_args(args)
        except (ConfigError, dom.ConfigError, TypeError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        return cmd_run(config)
    if args.command == "check":
        return cmd_check(args.kind, args.paths, args)
    return cmd_report(args.logs, args.out, args.budget_secs)


if __name__ == "__main__":
    sys.exit(main())
