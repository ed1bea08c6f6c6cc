"""Benchmark matrices: strategy × problem grids, %-overrun, CSV output.

Every cell runs once per requested limit kind (a node-limit pass and a
time-limit pass).  %-overrun for a strategy on a problem is
((c - m)/m) * 100 where m is the best node count any tested strategy
achieved on that problem; cells that hit a limit are charged the nominal
limit value, not their actual overshoot.  Problems no strategy solved
are excluded from aggregates.  Overruns are exact rationals end to end
and only rendered to two decimals at the CSV boundary, so goldens never
drift.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Sequence, TextIO

from .domains import Domain, Problem
from .search import EXHAUSTED, SOLVED, SearchConfig, plan_search
from .strategies import Strategy

NODE_KIND = "node"
TIME_KIND = "time"

CSV_COLUMNS = (
    "strategy",
    "problem",
    "rank",
    "limit_kind",
    "limit_value",
    "status",
    "nodes",
    "seconds",
    "seed",
    "reverse",
    "overrun_pct",
)


@dataclass(frozen=True)
class RunRecord:
    strategy: str
    problem: str
    rank_label: str
    limit_kind: str
    limit_value: float
    status: str
    nodes: int
    seconds: float
    seed: int
    reverse: bool
    grounded_variables: int = 0


def pct_overrun(c: int, m: int) -> Fraction:
    """((c - m)/m) * 100 as an exact rational."""
    if m < 1:
        raise ValueError("minimum node count must be at least 1")
    return Fraction(c - m, m) * 100


def format_pct(value: Fraction) -> str:
    """Two-decimal fixed rendering; ties round to even."""
    scaled = round(value * 100)
    sign = "-" if scaled < 0 else ""
    scaled = abs(scaled)
    return f"{sign}{scaled // 100}.{scaled % 100:02d}"


def effective_count(record: RunRecord) -> int:
    """Node count for overrun purposes: failures are charged the
    nominal limit, even when the run overshot it."""
    if record.status in (SOLVED, EXHAUSTED):
        return record.nodes
    if record.limit_kind == NODE_KIND:
        return int(record.limit_value)
    return record.nodes


@dataclass(frozen=True)
class OverrunTable:
    minima: dict[str, int]
    counts: dict[tuple[str, str], int]
    overruns: dict[tuple[str, str], Fraction]
    averages: dict[str, Fraction]
    excluded: tuple[str, ...]


def build_overrun_table(records: Sequence[RunRecord]) -> OverrunTable:
    """Node-count overruns from the node-limit pass of a matrix."""
    node_records = [r for r in records if r.limit_kind == NODE_KIND]
    by_problem: dict[str, list[RunRecord]] = {}
    for r in node_records:
        by_problem.setdefault(r.problem, []).append(r)

    excluded = tuple(
        sorted(p for p, rs in by_problem.items() if not any(r.status == SOLVED for r in rs))
    )
    included = sorted(p for p in by_problem if p not in excluded)

    minima: dict[str, int] = {}
    counts: dict[tuple[str, str], int] = {}
    overruns: dict[tuple[str, str], Fraction] = {}
    for p in included:
        minima[p] = min(effective_count(r) for r in by_problem[p])
    for r in node_records:
        if r.problem in excluded:
            continue
        c = effective_count(r)
        counts[(r.strategy, r.problem)] = c
        overruns[(r.strategy, r.problem)] = pct_overrun(c, minima[r.problem])

    averages: dict[str, Fraction] = {}
    strategies = sorted({r.strategy for r in node_records})
    for s in strategies:
        cells = [overruns[(s, p)] for p in included if (s, p) in overruns]
        if cells:
            averages[s] = sum(cells, Fraction(0)) / len(cells)
    return OverrunTable(minima, counts, overruns, averages, excluded)


def second_worst(records: Sequence[RunRecord], problem: str) -> int:
    """Second-largest effective node count on a problem (failures at
    their nominal limit); the ceiling-effect report uses this."""
    cells = [effective_count(r) for r in records if r.problem == problem and r.limit_kind == NODE_KIND]
    if len(cells) < 2:
        raise ValueError(f"need at least two runs of '{problem}', have {len(cells)}")
    cells.sort(reverse=True)
    return cells[1]


# ---------------------------------------------------------------------------
# matrix execution


def _strategy_label(s: Strategy) -> str:
    return s.name if s.name is not None else str(s)


def _run_cell(task: tuple[Domain, Problem, Strategy, SearchConfig, str]) -> RunRecord:
    domain, problem, strategy, config, kind = task
    out = plan_search(domain, problem, strategy, config)
    limit_value = config.node_limit if kind == NODE_KIND else config.time_limit
    return RunRecord(
        strategy=_strategy_label(strategy),
        problem=problem.name,
        rank_label=config.rank.label,
        limit_kind=kind,
        limit_value=float(limit_value),
        status=out.status,
        nodes=out.stats.nodes_generated,
        seconds=out.stats.wall_seconds,
        seed=config.seed,
        reverse=config.reverse_preconditions,
        grounded_variables=out.stats.grounded_variables,
    )


def run_matrix(
    tasks: Sequence[tuple[Domain, Problem]],
    strategies: Sequence[Strategy],
    config: SearchConfig,
    limit_kinds: Sequence[str] = (NODE_KIND, TIME_KIND),
    jobs: int = 1,
) -> tuple[list[RunRecord], OverrunTable]:
    """Run every (strategy, problem, limit kind) cell and build the
    node-count overrun table.

    `config` supplies rank weights, toggles, the seed, and the limits;
    each pass keeps only its own limit so the other cannot interfere.
    """
    if not tasks or not strategies or not limit_kinds:
        raise ValueError("tasks, strategies, and limit_kinds must be non-empty")
    names = [p.name for _, p in tasks]
    if len(set(names)) != len(names):
        raise ValueError("problem names must be unique across the matrix")
    for kind in limit_kinds:
        if kind == NODE_KIND and config.node_limit is None:
            raise ValueError("node pass requested but config.node_limit is unset")
        if kind == TIME_KIND and config.time_limit is None:
            raise ValueError("time pass requested but config.time_limit is unset")
        if kind not in (NODE_KIND, TIME_KIND):
            raise ValueError(f"unknown limit kind {kind!r}")

    cells = []
    for strategy in strategies:
        for domain, problem in tasks:
            for kind in limit_kinds:
                cell_config = replace(
                    config,
                    node_limit=config.node_limit if kind == NODE_KIND else None,
                    time_limit=config.time_limit if kind == TIME_KIND else None,
                )
                cells.append((domain, problem, strategy, cell_config, kind))

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_run_cell, cells))
    else:
        records = [_run_cell(c) for c in cells]
    records.sort(key=lambda r: (r.strategy, r.problem, r.limit_kind))
    return records, build_overrun_table(records)


# ---------------------------------------------------------------------------
# CSV


def _limit_text(value: float) -> str:
    return str(int(value)) if float(value).is_integer() else f"{value:g}"


def write_csv(records: Sequence[RunRecord], table: OverrunTable, out: TextIO) -> None:
    """RFC-4180 rows sorted by (strategy, problem, limit kind).

    Node-pass rows leave `seconds` empty: they are the byte-reproducible
    surface, and wall time would break that.  Time-pass rows carry the
    measurement and are excluded from determinism goldens instead.
    """
    w = csv.writer(out)
    w.writerow(CSV_COLUMNS)
    for r in sorted(records, key=lambda r: (r.strategy, r.problem, r.limit_kind)):
        if r.limit_kind == NODE_KIND:
            seconds = ""
            pct = table.overruns.get((r.strategy, r.problem))
            overrun = format_pct(pct) if pct is not None else ""
        else:
            seconds = f"{r.seconds:.3f}"
            overrun = ""
        w.writerow(
            [
                r.strategy,
                r.problem,
                r.rank_label,
                r.limit_kind,
                _limit_text(r.limit_value),
                r.status,
                r.nodes,
                seconds,
                r.seed,
                "true" if r.reverse else "false",
                overrun,
            ]
        )


def render_csv(records: Sequence[RunRecord], table: OverrunTable) -> str:
    buf = io.StringIO()
    write_csv(records, table, buf)
    return buf.getvalue()


def read_csv(text: str) -> list[RunRecord]:
    """Records back from CSV (the overrun column is derived, not read)."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != CSV_COLUMNS:
        raise ValueError("missing or unexpected CSV header")
    out = []
    for row in rows[1:]:
        (strategy, problem, rank_label, kind, limit_value, status, nodes, seconds, seed, reverse, _) = row
        out.append(
            RunRecord(
                strategy=strategy,
                problem=problem,
                rank_label=rank_label,
                limit_kind=kind,
                limit_value=float(limit_value),
                status=status,
                nodes=int(nodes),
                seconds=float(seconds) if seconds else 0.0,
                seed=int(seed),
                reverse=reverse == "true",
            )
        )
    return out
