"""Monte-Carlo driver, run reports and their persistence."""

from __future__ import annotations

import csv
import json
import math
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from ..metrics import METRICS, QUANTITIES, ScenarioStats, TrialErrors, confidence_halfwidth
from .pipeline import run_trial, run_trial_family
from .scenarios import ScenarioConfig


def software_version() -> str:
    from importlib.metadata import PackageNotFoundError, version

    try:
        return version("artifact")
    except PackageNotFoundError:  # running from a source tree
        from .. import __version__

        return __version__


@dataclass
class RunReport:
    scenario_id: str
    stats: ScenarioStats
    provenance: dict
    trials: list[TrialErrors] = field(default_factory=list)
    artifacts: dict = field(default_factory=dict)

    def value(self, quantity: str, metric: str = "avg", stat: str = "avg") -> float:
        return getattr(self.stats.cell(quantity, metric), stat)


def provenance(cfg: ScenarioConfig, n_trials: int, **extra) -> dict:
    out = {
        "scenario_id": cfg.id,
        "seed": cfg.seed,
        "dt": cfg.dt,
        "fs": cfg.fs,
        "trials": n_trials,
        "noise_mode": cfg.noise_mode,
        "paper_scenario": cfg.paper,
        "version": software_version(),
    }
    if cfg.confidence is not None:
        out["confidence_target"] = {"level": cfg.confidence, "relative_halfwidth": CONFIDENCE_TOL,
                                    "max_trials": cfg.trials, "min_trials": cfg.min_trials}
    out.update(extra)
    return out


CONFIDENCE_TOL = 0.01


def _converged(trials: list[TrialErrors], confidence: float, tol: float) -> bool:
    by_q: dict[str, list[float]] = defaultdict(list)
    for t in trials:
        for q, e in t.errors.items():
            if not e.low_signal and math.isfinite(e.avg):
                by_q[q].append(e.avg)
    for vals in by_q.values():
        mean = float(np.mean(vals))
        hw = confidence_halfwidth(vals, confidence)
        if hw > tol * abs(mean) and hw > 0.0:
            return False
    return True


def run_until_confident(
    trial_fn: Callable[[int], TrialErrors],
    min_trials: int,
    max_trials: int,
    confidence: float = 0.99,
    tol: float = CONFIDENCE_TOL,
) -> list[TrialErrors]:
    """Run trials until every avg-error mean has a relative half-width ``<= tol``."""
    out = []
    for k in range(max_trials):
        out.append(trial_fn(k))
        if len(out) >= min_trials and _converged(out, confidence, tol):
            break
    return out


def _map(fn, items, workers: int):
    if workers <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))


class _TrialTask:
    def __init__(self, cfg):
        self.cfg = cfg

    def __call__(self, k):
        return run_trial(self.cfg, k)


class _FamilyTask:
    def __init__(self, cfgs):
        self.cfgs = cfgs

    def __call__(self, k):
        return run_trial_family(self.cfgs, k)


def _report(cfg, trials, keep, **extra) -> RunReport:
    stats = ScenarioStats()
    for t in trials:  # trial-index order
        stats.add(t)
    stats.meta = {"confidence": cfg.confidence}
    return RunReport(cfg.id, stats, provenance(cfg, len(trials), **extra),
                     trials if keep else [])


def run_scenario(cfg: ScenarioConfig, trials: int | None = None, workers: int = 1,
                 keep_trials: bool = False) -> RunReport:
    """Run one scenario (fixed count, or confidence stopping when configured)."""
    n = cfg.trials if trials is None else trials
    if cfg.confidence is not None:
        results = run_until_confident(_TrialTask(cfg), min(cfg.min_trials, n), n, cfg.confidence)
        return _report(cfg, results, keep_trials, stopping="confidence")
    results = _map(_TrialTask(cfg), list(range(n)), workers)
    return _report(cfg, results, keep_trials)


def run_family(cfgs: list[ScenarioConfig], trials: int | None = None, workers: int = 1,
               keep_trials: bool = False) -> list[RunReport]:
    """Run configs that differ only in ``fs`` off shared simulations."""
    n = cfgs[0].trials if trials is None else trials
    per_trial = _map(_FamilyTask(cfgs), list(range(n)), workers)
    return [_report(c, [row[j] for row in per_trial], keep_trials, shared_simulation=True)
            for j, c in enumerate(cfgs)]


def run_many(cfgs: list[ScenarioConfig], trials: int | None = None, workers: int = 1,
             progress: Callable[[RunReport], None] | None = None) -> list[RunReport]:
    """Run a catalogue, grouping sampling-rate variants into families."""
    groups: dict[str, list[ScenarioConfig]] = {}
    for c in cfgs:
        key = c.family if c.confidence is None else c.id
        groups.setdefault(key, []).append(c)
    done: dict[str, RunReport] = {}
    for members in groups.values():
        if len(members) == 1:
            reps = [run_scenario(members[0], trials, workers)]
        else:
            reps = run_family(members, trials, workers)
        for r in reps:
            done[r.scenario_id] = r
            if progress:
                progress(r)
    return [done[c.id] for c in cfgs]


# -- persistence and rendering ---------------------------------------------

REPORT_COLUMNS = ("scenario", "quantity", "metric", "statistic", "value")


def report_rows(report: RunReport):
    for q, metric, stat, val in report.stats.rows():
        yield report.scenario_id, q, metric, stat, val


def write_reports(reports: list[RunReport], out_dir, name: str = "report") -> tuple[Path, Path]:
    """Write ``<name>.csv`` (one row per quantity/metric/statistic) and a JSON sidecar."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{name}.csv"
    with open(csv_path, "w", newline="") as fh:
        for r in reports:
            pv = r.provenance
            fh.write(f"# {r.scenario_id}: seed={pv.get('seed')} dt={pv.get('dt')} "
                     f"trials={pv.get('trials')} version={pv.get('version')}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_COLUMNS)
        for r in reports:
            for row in report_rows(r):
                w.writerow([*row[:4], repr(float(row[4]))])
    side = out / f"{name}.provenance.json"
    side.write_text(json.dumps({r.scenario_id: r.provenance for r in reports},
                               indent=2, sort_keys=True) + "\n")
    return csv_path, side


def _fmt(x: float) -> str:
    if math.isnan(x):
        return "n/a"
    pct = 100.0 * x
    if pct > 100.0:
        return ">100"
    return f"{pct:.3g}"


def render_table(reports: list[RunReport], metric: str = "avg",
                 quantities=None) -> str:
    """Text table in %: one block per scenario, Avg/Max/Min per quantity.

    Without ``quantities`` every quantity present is shown, headline ones first.
    """
    if metric not in METRICS:
        raise ValueError(f"metric must be one of {METRICS}")
    if quantities is None:
        seen = {q for r in reports for q, _ in r.stats.cells}
        quantities = [q for q in QUANTITIES if q in seen] + sorted(seen - set(QUANTITIES))
    lines = [f"{'scenario':<22}{'qty':<8}{'Avg':>10}{'Max':>10}{'Min':>10}{'flag':>6}"]
    for r in reports:
        for q in quantities:
            cell = r.stats.cells.get((q, metric))
            if cell is None:
                continue
            lines.append(f"{r.scenario_id:<22}{q:<8}{_fmt(cell.avg):>10}{_fmt(cell.max):>10}"
                         f"{_fmt(cell.min):>10}{cell.flagged:>6d}")
    return "\n".join(lines)
