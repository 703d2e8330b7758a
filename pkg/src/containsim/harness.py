"""Multi-seed sweeps, aggregation, and table output."""

from __future__ import annotations

import csv
import io
import json
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .config import FIELD_NAMES, MASK_POLICIES, SimConfig
from .orchestrator import run_scenario

SUMMARY_METRICS = ("exposed_to_confirmed", "exposed_to_symptomatic", "infected_total")
SUMMARY_HEADER = ("population", "scenario", "metric", "mean", "stddev", "min", "max")


@dataclass(frozen=True)
class SweepSpec:
    variable: str = "population"
    values: tuple = (500, 1000, 1500, 2000, 2500)
    seeds: tuple = tuple(range(20))
    scenarios: tuple = MASK_POLICIES

    def __post_init__(self):
        if self.variable not in FIELD_NAMES:
            raise ValueError(f"unknown sweep variable {self.variable!r}")
        if not self.values:
            raise ValueError("sweep values must be nonempty")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ValueError("sweep values must be strictly increasing")
        if not self.seeds:
            raise ValueError("sweep needs at least one seed")
        bad = set(self.scenarios) - set(MASK_POLICIES)
        if not self.scenarios or bad:
            raise ValueError(f"scenarios must be a nonempty subset of {MASK_POLICIES}")


@dataclass(frozen=True)
class RunResult:
    value: float
    scenario: str
    seed: int
    final: dict = field(compare=False)


def _one(args) -> RunResult:
    config, variable, value, scenario, seed = args
    cfg = config.replace(**{variable: value, "mask_policy": scenario, "rng_seed": seed})
    _, metrics = run_scenario(cfg)
    return RunResult(value, scenario, seed, metrics.final())


def run_sweep(base: SimConfig, spec: SweepSpec, jobs: int = 1) -> list[RunResult]:
    """Every (value, scenario, seed) replication, sorted by that triple."""
    tasks = [(base, spec.variable, v, sc, s)
             for v in spec.values for sc in spec.scenarios for s in spec.seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_one, tasks, chunksize=1))
    else:
        results = [_one(t) for t in tasks]
    return sorted(results, key=lambda r: (r.value, r.scenario, r.seed))


@dataclass(frozen=True)
class SummaryRow:
    population: float
    scenario: str
    metric: str
    mean: float
    stddev: float
    min: float
    max: float


def sig6(x: float) -> float:
    return float(f"{x:.6g}")


def aggregate(results: Iterable[RunResult],
              metrics: Sequence[str] = SUMMARY_METRICS) -> list[SummaryRow]:
    """Mean, sample standard deviation (0 for one seed), min, max per point."""
    groups: dict[tuple, list[RunResult]] = {}
    for r in results:
        groups.setdefault((r.value, r.scenario), []).append(r)
    rows = []
    for (value, scenario) in sorted(groups):
        runs = groups[(value, scenario)]
        for m in metrics:
            xs = [float(r.final[m]) for r in runs]
            sd = statistics.stdev(xs) if len(xs) > 1 else 0.0
            rows.append(SummaryRow(value, scenario, m, sig6(statistics.fmean(xs)), sig6(sd),
                                   sig6(min(xs)), sig6(max(xs))))
    return rows


def _num(x: float) -> str:
    return f"{x:.6g}"


def summary_to_csv(rows: Sequence[SummaryRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_HEADER)
    for r in rows:
        w.writerow([_num(r.population), r.scenario, r.metric, _num(r.mean), _num(r.stddev),
                    _num(r.min), _num(r.max)])
    return buf.getvalue()


def summary_to_json(rows: Sequence[SummaryRow]) -> str:
    payload = {"columns": list(SUMMARY_HEADER),
               "rows": [[sig6(r.population), r.scenario, r.metric, r.mean, r.stddev, r.min, r.max]
                        for r in rows]}
    return json.dumps(payload, indent=1) + "\n"


def summary_from_json(text: str) -> list[SummaryRow]:
    payload = json.loads(text)
    if payload.get("columns") != list(SUMMARY_HEADER):
        raise ValueError("unexpected summary columns")
    return [SummaryRow(*row) for row in payload["rows"]]


def emit_outputs(rows: Sequence[SummaryRow], fmt: str = "csv") -> str:
    """Render the summary; ``fmt`` is ``csv`` or ``json``."""
    if fmt == "csv":
        return summary_to_csv(rows)
    if fmt == "json":
        return summary_to_json(rows)
    raise ValueError(f"unknown output format {fmt!r}")


def runs_to_csv(results: Sequence[RunResult], metrics: Sequence[str] = SUMMARY_METRICS) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("population", "scenario", "seed") + tuple(metrics))
    for r in results:
        w.writerow([_num(r.value), r.scenario, r.seed] + [int(r.final[m]) for m in metrics])
    return buf.getvalue()
