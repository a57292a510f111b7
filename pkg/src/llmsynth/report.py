"""Summary statistics, cactus data and compute totals over run records."""

from __future__ import annotations

import csv
import json
import statistics
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Iterable, Sequence

from .harness import Budget, Domain, Mode, RunRecord, VerdictKind


@dataclass
class SummaryRow:
    method: str
    domain: str
    mode: str
    benchmarks: int
    solved: int
    success_time_min: float | None = None
    success_time_max: float | None = None
    success_time_mean: float | None = None
    success_iters_min: float | None = None
    success_iters_max: float | None = None
    success_iters_mean: float | None = None
    success_iters_median: float | None = None
    fail_iters_min: float | None = None
    fail_iters_max: float | None = None
    fail_iters_mean: float | None = None
    fail_iters_median: float | None = None
    unverified_solutions: int = 0

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]


@dataclass(frozen=True)
class CactusPoint:
    t: float
    c: int


def _stats(xs: Sequence[float], median: bool):
    if not xs:
        return (None, None, None, None) if median else (None, None, None)
    base = (min(xs), max(xs), statistics.fmean(xs))
    return base + (statistics.median(xs),) if median else base


def _single(values: Iterable[str], what: str) -> str:
    vals = {v for v in values if v}
    if len(vals) > 1:
        raise ValueError(f"records mix several {what}s: {sorted(vals)}")
    return vals.pop() if vals else ""


def summarize(records: Sequence[RunRecord], method_name: str | None = None) -> SummaryRow:
    """Table statistics for one method.

    Success columns use solved records; fail iterations use unsolved ILST
    records.  Iteration columns stay empty in single-pass mode.
    """
    recorded = _single((r.method for r in records), "method")
    if method_name and recorded and recorded != method_name:
        raise ValueError(f"records belong to method {recorded}, not {method_name}")
    method = method_name or recorded
    domain = _single((r.domain for r in records), "domain")
    modes = {Mode(r.mode) for r in records}
    if len(modes) > 1:
        raise ValueError("records mix ILST and single-pass runs")
    mode = modes.pop() if modes else Mode.ILST
    solved = [r for r in records if r.solved]
    failed = [r for r in records if not r.solved]
    row = SummaryRow(method, domain, mode.value, len(records), len(solved))
    row.success_time_min, row.success_time_max, row.success_time_mean = _stats([r.total_secs for r in solved], False)
    if mode is Mode.ILST:
        (row.success_iters_min, row.success_iters_max, row.success_iters_mean,
         row.success_iters_median) = _stats([r.iterations_total for r in solved], True)
        (row.fail_iters_min, row.fail_iters_max, row.fail_iters_mean,
         row.fail_iters_median) = _stats([r.iterations_total for r in failed], True)
    row.unverified_solutions = sum(
        1 for r in failed if r.verdicts and r.verdicts[-1][1].kind is VerdictKind.VERIFY_TIMEOUT)
    return row


def cactus(records: Iterable[RunRecord]) -> list[CactusPoint]:
    """(t_i, i) over solved records by time; ties break on benchmark id."""
    solved = sorted((r for r in records if r.solved), key=lambda r: (r.total_secs, r.benchmark_id))
    return [CactusPoint(r.total_secs, i) for i, r in enumerate(solved, 1)]


def _cap(budget: Budget | float | None, domain: str) -> float:
    if budget is None:
        return Budget.for_domain(Domain(domain) if domain else Domain.SYGUS).total_secs
    return budget.total_secs if isinstance(budget, Budget) else float(budget)


def total_compute(records: Iterable[RunRecord], budget: Budget | float | None) -> float:
    """Seconds spent: success times plus the full budget for every unsolved run.

    With ``budget=None`` each record is charged its domain's default budget.
    """
    return sum(r.total_secs if r.solved else _cap(budget, r.domain) for r in records)


def group_records(records: Iterable[RunRecord]) -> dict[tuple[str, str, str], list[RunRecord]]:
    """Records keyed by (method, domain, mode), in first-seen order."""
    groups: dict[tuple[str, str, str], list[RunRecord]] = {}
    for r in records:
        groups.setdefault((r.method, r.domain, Mode(r.mode).value), []).append(r)
    return groups


def format_row(row: SummaryRow) -> str:
    """One human-readable line, statistics to two decimals."""
    def f(x):
        return "-" if x is None else f"{x:.2f}"

    return (f"{row.method} [{row.domain}/{row.mode}] solved {row.solved}/{row.benchmarks}  "
            f"time {f(row.success_time_min)} {f(row.success_time_max)} {f(row.success_time_mean)}  "
            f"succ-iters {f(row.success_iters_min)} {f(row.success_iters_max)} "
            f"{f(row.success_iters_mean)} {f(row.success_iters_median)}  "
            f"fail-iters {f(row.fail_iters_min)} {f(row.fail_iters_max)} "
            f"{f(row.fail_iters_mean)} {f(row.fail_iters_median)}")


def write_summary_csv(rows: Iterable[SummaryRow], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(SummaryRow.columns())
        for row in rows:
            w.writerow(["" if v is None else repr(v) if isinstance(v, float) else v
                        for v in asdict(row).values()])


def read_summary_csv(path) -> list[SummaryRow]:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for d in csv.DictReader(fh):
            kw = {}
            for f in fields(SummaryRow):
                v = d[f.name]
                if f.name in ("method", "domain", "mode"):
                    kw[f.name] = v
                elif f.name in ("benchmarks", "solved", "unverified_solutions"):
                    kw[f.name] = int(v)
                else:
                    kw[f.name] = None if v == "" else float(v)
            out.append(SummaryRow(**kw))
    return out


CACTUS_COLUMNS = ["method", "domain", "mode", "t", "c"]


def write_cactus_csv(groups: dict[tuple[str, str, str], list[RunRecord]], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(CACTUS_COLUMNS)
        for (method, domain, mode), recs in groups.items():
            for p in cactus(recs):
                w.writerow([method, domain, mode, repr(float(p.t)), p.c])


def build_report(records: Sequence[RunRecord], budget: Budget | float | None) -> dict:
    groups = group_records(records)
    return {
        "groups": [
            {
                "summary": asdict(summarize(recs)),
                "cactus": [[p.t, p.c] for p in cactus(recs)],
                "total_compute_secs": total_compute(recs, budget),
            }
            for recs in groups.values()
        ],
        "budget_secs": None if budget is None else _cap(budget, ""),
    }


def write_report(records: Sequence[RunRecord], out_dir, budget: Budget | float | None) -> list[SummaryRow]:
    """summary.csv, cactus.csv and report.json under ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    groups = group_records(records)
    rows = [summarize(recs) for recs in groups.values()]
    write_summary_csv(rows, out / "summary.csv")
    write_cactus_csv(groups, out / "cactus.csv")
    (out / "report.json").write_text(json.dumps(build_report(records, budget), indent=2) + "\n")
    return rows
