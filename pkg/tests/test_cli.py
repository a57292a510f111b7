import csv
import json
import shutil
from pathlib import Path

import pytest

from llmsynth.cli import ConfigError, RunConfig, cmd_check, cmd_report, cmd_run, main, read_manifest
from llmsynth.harness import Mode, read_run_log

from stubs import ScriptedSuite, sygus_answer

FIX = Path(__file__).parent / "fixtures"

PLAN = {"a": (1.0, 0.5, 0), "b": (1.0, 0.5, 2), "c": (1.0, 0.5, 1)}


def sygus_dir(tmp_path, names=PLAN):
    d = tmp_path / "bench"
    d.mkdir()
    for n in names:
        shutil.copy(FIX / "mi.sl", d / f"{n}.sl")
    return d


def suite_config(tmp_path, suite, **kw):
    d = sygus_dir(tmp_path)
    return RunConfig(domain="sygus", benchmarks=str(d / "*.sl"), generator=suite.generator,
                     verifier=suite.verifier, out=tmp_path / "out", budget_secs=600, method="stub", **kw)


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


# module-level factories so `module:factory` strings resolve
_SUITE = ScriptedSuite(PLAN)
factory = _SUITE.generator
verifier_factory = _SUITE.verifier


# --------------------------------------------------------------------------
# run

def test_run_ilst(tmp_path, capsys):
    suite = ScriptedSuite(PLAN)
    assert cmd_run(suite_config(tmp_path, suite)) == 0
    out = tmp_path / "out"
    rows = read_csv(out / "summary.csv")
    assert len(rows) == 1 and rows[0]["solved"] == "3" and rows[0]["mode"] == "Ilst"
    records = read_run_log(out / "runs.jsonl")
    assert {r.benchmark_id: r.iterations_total for r in records} == {"a": 1, "b": 3, "c": 2}
    # each iteration costs 1.0 generation plus 0.5 verification
    assert {r.benchmark_id: r.total_secs for r in records} == {"a": 1.5, "b": 4.5, "c": 3.0}
    assert sorted(p.name for p in (out / "runs").iterdir()) == ["a.json", "b.json", "c.json"]
    assert (out / "cactus.csv").exists() and (out / "report.json").exists()
    assert "stub" in capsys.readouterr().out


def test_run_single_pass(tmp_path):
    suite = ScriptedSuite(PLAN)
    assert cmd_run(suite_config(tmp_path, suite, mode=Mode.SINGLE_PASS)) == 0
    assert sum(g.calls for g in suite.generators.values()) == 3
    rows = read_csv(tmp_path / "out" / "summary.csv")
    assert rows[0]["solved"] == "1" and rows[0]["mode"] == "SinglePass"
    assert rows[0]["success_iters_mean"] == "" and rows[0]["fail_iters_median"] == ""


def test_run_bad_glob(tmp_path, capsys):
    cfg = RunConfig(domain="sygus", benchmarks=str(tmp_path / "nothing" / "*.sl"), out=tmp_path / "out")
    assert cmd_run(cfg) == 2
    assert "no benchmarks match" in capsys.readouterr().err


def test_run_crash_is_reported(tmp_path, capsys):
    suite = ScriptedSuite({"a": (1.0, 0.5, 0), "b": (1.0, 0.5, 0)})

    def picky(config, benchmark):
        if benchmark.id == "b":
            raise RuntimeError("boom")
        return suite.generator(config, benchmark)

    d = sygus_dir(tmp_path, ["a", "b"])
    cfg = RunConfig(domain="sygus", benchmarks=str(d / "*.sl"), generator=picky, verifier=suite.verifier,
                    out=tmp_path / "out")
    assert cmd_run(cfg) == 1
    assert "b: RuntimeError: boom" in capsys.readouterr().err
    assert [r.benchmark_id for r in read_run_log(tmp_path / "out" / "runs.jsonl")] == ["a"]


def test_run_reproducible(tmp_path):
    logs = []
    for k in range(2):
        sub = tmp_path / str(k)
        sub.mkdir()
        suite = ScriptedSuite(PLAN)
        assert cmd_run(suite_config(sub, suite, workers=3)) == 0
        logs.append((sub / "out" / "runs.jsonl").read_bytes())
    assert logs[0] == logs[1]


def test_run_enumerator_real_clock(tmp_path):
    d = sygus_dir(tmp_path, ["a"])
    cfg = RunConfig(domain="sygus", benchmarks=str(d / "*.sl"), generator="enumerate", out=tmp_path / "out",
                    budget_secs=60)
    assert cmd_run(cfg) == 0
    (rec,) = read_run_log(tmp_path / "out" / "runs.jsonl")
    assert rec.solved and rec.method == "enumerate"


def test_run_replay(tmp_path):
    d = sygus_dir(tmp_path, ["a"])
    replay = tmp_path / "replay"
    replay.mkdir()
    (replay / "a.json").write_text(json.dumps([sygus_answer(3), sygus_answer(None)]))
    cfg = RunConfig(domain="sygus", benchmarks=str(d / "*.sl"), generator="replay", replay_dir=str(replay),
                    out=tmp_path / "out", budget_secs=60)
    assert cmd_run(cfg) == 0
    (rec,) = read_run_log(tmp_path / "out" / "runs.jsonl")
    assert rec.solved and rec.iterations_total == 2


def test_config_validation():
    with pytest.raises(ConfigError):
        RunConfig(domain="haskell", benchmarks="x")
    with pytest.raises(ConfigError):
        RunConfig(domain="sygus", benchmarks="x", mode="twice")
    with pytest.raises(ConfigError):
        RunConfig(domain="sygus", benchmarks="x", budget_secs=0)
    assert RunConfig(domain="acl2s", benchmarks="x").budget().total_secs == 900
    assert RunConfig(domain="sygus", benchmarks="x", generator="llm", mode="single").method == "llm-single"


# --------------------------------------------------------------------------
# manifests

def test_manifest_reads_sections(tmp_path):
    p = tmp_path / "run.ini"
    p.write_text("[run]\ndomain = sygus\nbenchmarks = b/*.sl\nbudget_secs = 30\ncache = no\n"
                 "[llm]\nmodel = m\napi_key_env = MY_KEY\nmax_output_tokens = 100\n")
    kw = read_manifest(p)
    assert kw["budget_secs"] == 30.0 and kw["cache"] is False and kw["llm"]["api_key_env"] == "MY_KEY"
    assert kw["llm"]["max_output_tokens"] == "100"


@pytest.mark.parametrize("text,msg", [
    ("[llm]\napi_key = sk-123\n", "environment"),
    ("[adapter]\ntoken = abc\n", "environment"),
    ("[llm]\nauth_token = abc\n", "environment"),
    ("[llm]\nopenai_api_key = abc\n", "environment"),
    ("[run]\ncolour = red\n", "unknown key"),
    ("[extra]\nx = 1\n", "unknown config sections"),
    ("[run]\nworkers = many\n", "workers"),
])
def test_manifest_rejections(tmp_path, text, msg):
    p = tmp_path / "run.ini"
    p.write_text(text)
    with pytest.raises(ConfigError, match=msg):
        read_manifest(p)


def test_flags_override_manifest(tmp_path):
    d = sygus_dir(tmp_path)
    ini = tmp_path / "run.ini"
    ini.write_text(f"[run]\ndomain = sygus\nbenchmarks = {d}/*.sl\nmode = single\nout = {tmp_path / 'ignored'}\n")
    out = tmp_path / "flagged"
    rc = main(["run", "--config", str(ini), "--mode", "ilst", "--out", str(out),
               "--generator", "test_cli:factory", "--verifier", "test_cli:verifier_factory", "--method", "x"])
    assert rc == 0
    assert read_csv(out / "summary.csv")[0]["mode"] == "Ilst"
    assert not (tmp_path / "ignored").exists()


def test_main_missing_domain(capsys):
    assert main(["run", "--benchmarks", "x"]) == 2
    assert "missing domain" in capsys.readouterr().err


# --------------------------------------------------------------------------
# check

def test_check_aiger_pass(capsys):
    assert cmd_check("aiger", [str(FIX / "trivial_and.aag"), str(FIX / "trivial_and.tlsf")]) == 0
    out = capsys.readouterr().out
    assert "PASS" in out and "a b | outp" in out and "1 1 | 1" in out


def test_check_aiger_fail(tmp_path, capsys):
    bad = tmp_path / "or.aag"
    bad.write_text((FIX / "trivial_and.aag").read_text().replace("6 2 4", "6 3 5"))
    assert cmd_check("aiger", [str(bad), str(FIX / "trivial_and.tlsf")]) == 1
    assert "SemanticFail" in capsys.readouterr().err


def test_check_smv(capsys):
    assert cmd_check("smv", [str(FIX / "fig4a.smv"), str(FIX / "fig4a.tlsf")]) == 0
    assert "io mapping: ok" in capsys.readouterr().out


def test_check_determinism_writes_self_composition(tmp_path, capsys):
    target = tmp_path / "sc.smv"
    assert main(["check", "determinism", str(FIX / "fig4a.smv"), "--out", str(target)]) == 0
    out = capsys.readouterr().out
    assert str(target) in out and "deterministic" in out
    assert "MODULE main" in target.read_text()


def test_check_sygus_counterexample(tmp_path, capsys):
    cand = tmp_path / "cand.sl"
    cand.write_text("(define-fun mi ((x Int) (y Int)) Int (ite (<= x y) y x))")
    assert cmd_check("sygus", [str(FIX / "mi.sl"), str(cand)]) == 1
    assert "counterexample: x = 0, y = 1" in capsys.readouterr().err
    cand.write_text(sygus_answer(None))
    query = tmp_path / "q.smt2"
    assert main(["check", "sygus", str(FIX / "mi.sl"), str(cand), "--smt-query", str(query)]) == 0
    assert "(check-sat)" in query.read_text()


def test_check_arity_and_missing(tmp_path, capsys):
    assert cmd_check("sygus", [str(FIX / "mi.sl")]) == 2
    assert cmd_check("determinism", [str(tmp_path / "missing.smv")]) == 2
    err = capsys.readouterr().err
    assert "expects PROBLEM.sl CANDIDATE" in err and "no such file" in err


def test_check_mapping(tmp_path, capsys):
    (tmp_path / "counter.tla").write_text("---- MODULE counter ----\nNext == <<HOLE:H1>>\n====")
    (tmp_path / "counter.json").write_text(json.dumps({
        "holes": [{"id": "H1", "action": "Next", "grammar": {"start": "A", "rules": {"A": ["x' = E"],
                                                                                     "E": ["x + 1", "x"]}}}]}))
    good = tmp_path / "good.json"
    good.write_text(json.dumps({"H1": "x' = x + 1"}))
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"H1": "x' = (x + 1)"}))
    assert cmd_check("mapping", [str(tmp_path / "counter.tla"), str(good)]) == 0
    assert "Next == x' = x + 1" in capsys.readouterr().out
    assert cmd_check("mapping", [str(tmp_path / "counter.tla"), str(bad)]) == 1
    assert "GrammarFail" in capsys.readouterr().err


def test_check_sexpr(tmp_path, capsys):
    good = tmp_path / "c.lisp"
    good.write_text("(defun len2 (x) (if (endp x) 0 (+ 1 (len2 (cdr x)))))")
    assert cmd_check("sexpr", [str(good)]) == 0
    bundle = tmp_path / "bundle"
    bundle.mkdir()
    (bundle / "signatures.lisp").write_text("(defun len2 (x) ...)\n")
    (bundle / "primitives.lisp").write_text("((cdr 1) (endp 1) (+ 2))\n")
    assert main(["check", "sexpr", str(good), "--bundle", str(bundle)]) == 0
    assert "defines len2" in capsys.readouterr().out
    good.write_text("(defun len2 (x) (cons x))")
    assert main(["check", "sexpr", str(good), "--bundle", str(bundle)]) == 1
    good.write_text("(defun len2 (x)")
    assert cmd_check("sexpr", [str(good)]) == 1


# --------------------------------------------------------------------------
# report

def test_report_from_run_dirs(tmp_path):
    for mode in (Mode.ILST, Mode.SINGLE_PASS):
        sub = tmp_path / mode.value
        sub.mkdir()
        assert cmd_run(suite_config(sub, ScriptedSuite(PLAN), mode=mode)) == 0
    out = tmp_path / "rep"
    assert cmd_report([str(tmp_path / "Ilst" / "out"), str(tmp_path / "SinglePass" / "out")], out) == 0
    rows = read_csv(out / "summary.csv")
    assert [(r["mode"], r["solved"]) for r in rows] == [("Ilst", "3"), ("SinglePass", "1")]


def test_report_empty(tmp_path):
    assert cmd_report([], tmp_path) == 0
    assert (tmp_path / "summary.csv").read_text().count("\n") == 1
    assert (tmp_path / "cactus.csv").read_text().strip() == "method,domain,mode,t,c"


def test_report_mixed_domains(tmp_path):
    assert cmd_run(suite_config(tmp_path, ScriptedSuite(PLAN))) == 0
    lines = (tmp_path / "out" / "runs.jsonl").read_text().splitlines()
    moved = json.loads(lines[0])
    moved["domain"] = "Reactive"
    mixed = tmp_path / "mixed.jsonl"
    mixed.write_text("\n".join([json.dumps(moved)] + lines[1:]) + "\n")
    assert cmd_report([str(mixed)], tmp_path / "rep") == 0
    rows = read_csv(tmp_path / "rep" / "summary.csv")
    assert sorted((r["domain"], r["benchmarks"]) for r in rows) == [("Reactive", "1"), ("Sygus", "2")]


def test_report_malformed(tmp_path, capsys):
    bad = tmp_path / "bad.jsonl"
    bad.write_text("{not json\n")
    assert cmd_report([str(bad)], tmp_path / "rep") == 1
    assert "error" in capsys.readouterr().err


def test_run_and_report_agree(tmp_path):
    # real-clock times are not round, so this catches any drift between in-memory and logged values
    d = sygus_dir(tmp_path)
    cfg = RunConfig(domain="sygus", benchmarks=str(d / "*.sl"), generator="enumerate", out=tmp_path / "out",
                    budget_secs=60)
    assert cmd_run(cfg) == 0
    assert cmd_report([str(tmp_path / "out")], tmp_path / "rep", budget_secs=60) == 0
    for name in ("summary.csv", "cactus.csv", "report.json"):
        assert (tmp_path / "out" / name).read_text() == (tmp_path / "rep" / name).read_text()


def test_readme_manifest_parses(tmp_path):
    import re
    from llmsynth.domains import llm_config
    readme = (Path(__file__).parent.parent / "README.md").read_text()
    ini = tmp_path / "run.ini"
    ini.write_text(re.search(r"```ini\n(.*?)```", readme, re.S).group(1))
    kw = read_manifest(ini)
    assert kw["domain"] == "tla" and kw["llm"]["api_key_env"] == "MY_API_KEY"
    assert llm_config(kw["llm"]).max_output_tokens == 16000
