"""Experiment driver: synthetic sanity checks, benchmark grids and their metrics,
and ingestion of real cumulative case counts."""
from __future__ import annotations

import csv
import datetime as dt
import json
import logging
import os
import time
from dataclasses import dataclass, field, asdict
from typing import Sequence

import numpy as np

from .abm import SimulationConfig, simulate
from .framework import FrameworkConfig, RunResult, run
from .ks import to_cdf
from .params import default_space, sample_uniform, standardized_l2
from .strategies import RANDOM_BASELINE, kind_name, BASELINES
from .surrogate import family_name

log = logging.getLogger(__name__)


class DegenerateTarget(ValueError):
    """The synthetic truth produces no spread beyond the seeded cases."""


def is_degenerate(series, initial_infected: int) -> bool:
    """No transmission at all after the seeding day."""
    return int(np.sum(series[1:])) == 0


def draw_theta_star(rng: np.random.Generator, sim: SimulationConfig, seed: int = 0,
                    min_spread: float = 1.0, max_tries: int = 10_000) -> np.ndarray:
    """Uniform truth whose target epidemic at least ``min_spread``-folds the seeded cases."""
    space = default_space()
    for _ in range(max_tries):
        theta = sample_uniform(space, rng)
        series = simulate(theta, sim, seed)
        if series[1:].sum() >= min_spread * sim.initial_infected:
            return theta
    raise DegenerateTarget(f"no spreading truth found in {max_tries} draws")


@dataclass
class SanityReport:
    result: RunResult
    l2: float
    ksts: float
    theta_star: np.ndarray
    target: np.ndarray

    def to_dict(self):
        return {"theta_star": [float(x) for x in self.theta_star], "standardized_l2": self.l2,
                "ksts": self.ksts, "result": self.result.to_dict(),
                "target": [int(x) for x in self.target]}


def sanity_check(theta_star, config: FrameworkConfig) -> SanityReport:
    """Calibrate against the ABM's own output at ``theta_star`` and report how close we get.

    Parameters outside ``config.calibrate`` are pinned to ``theta_star``.
    """
    theta_star = np.asarray(theta_star, dtype=float)
    space = default_space()
    if not space.contains(theta_star):
        raise ValueError("theta_star lies outside the parameter box")
    target = simulate(theta_star, config.simulation, config.simulation_seed)
    if is_degenerate(target, config.simulation.initial_infected):
        raise DegenerateTarget(
            f"theta_star={theta_star.tolist()} gives no infections after day 0; "
            "pick parameters with a positive transmission probability and radius")
    if config.calibrate is not None:
        config = FrameworkConfig.from_dict({**config.to_dict(), "fixed_values": theta_star.tolist()})
    result = run(config, target)
    return SanityReport(result, standardized_l2(space, result.optimal, theta_star),
                        result.optimal_ksts, theta_star, target)


def success_at(results: Sequence[RunResult], level: float) -> float:
    """Fraction of runs whose best KSTS is within ``1 - level``."""
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    if not results:
        raise ValueError("no runs to score")
    thr = 1.0 - level
    return float(np.mean([r.optimal_ksts <= thr for r in results]))


def mean_evaluations_to(results: Sequence[RunResult], level: float) -> float | None:
    counts = [r.evaluations_to(1.0 - level) for r in results]
    counts = [c for c in counts if c is not None]
    return float(np.mean(counts)) if counts else None


def speedup(strategy: Sequence[RunResult], baseline: Sequence[RunResult], level: float) -> float | None:
    """Baseline over strategy mean evaluations-to-success (successful runs only).

    0.0 when the strategy never succeeds; None when the baseline never does.
    """
    if not strategy or not baseline:
        raise ValueError("speedup needs runs on both sides")
    base = mean_evaluations_to(baseline, level)
    if base is None:
        return None
    mine = mean_evaluations_to(strategy, level)
    if mine is None:
        return 0.0
    return base / mine


@dataclass
class ExperimentSpec:
    n_repeats: int = 20
    # each entry is one column of the report: a list of parameter names or a
    # count k meaning the first k parameters in model order
    dims: list = field(default_factory=lambda: [1, 2, 3, 4, 5, 6, 7])
    grid: list = field(default_factory=lambda: [["RandomBaseline", None]])
    template: dict = field(default_factory=dict)
    success_levels: list = field(default_factory=lambda: [0.98, 0.99])
    seed: int = 0
    baseline: str = RANDOM_BASELINE

    def __post_init__(self):
        if self.n_repeats < 1:
            raise ValueError("n_repeats must be >= 1")
        if not self.grid:
            raise ValueError("the strategy x surrogate grid is empty")
        self.grid = [[kind_name(k), None if (s is None or kind_name(k) in BASELINES) else family_name(s)]
                     for k, s in self.grid]

    def dim_names(self, entry) -> list[str]:
        names = default_space().names
        if isinstance(entry, int):
            if not 1 <= entry <= len(names):
                raise ValueError(f"dimension count {entry} out of range")
            return names[:entry]
        return list(entry)

    @classmethod
    def from_json(cls, path) -> "ExperimentSpec":
        with open(path) as fh:
            return cls(**json.load(fh))

    def to_dict(self):
        return asdict(self)


def cell_key(kind, surrogate, dims) -> str:
    dims = list(dims)
    # first-k subsets are keyed by k; any other subset by its names
    tag = str(len(dims)) if dims == default_space().names[:len(dims)] else "+".join(dims)
    return f"{kind}|{surrogate or '-'}|{tag}"


@dataclass
class BenchmarkReport:
    spec: ExperimentSpec
    cells: dict = field(default_factory=dict)
    wall_seconds: float = 0.0

    def to_dict(self) -> dict:
        out = {}
        for key, cell in self.cells.items():
            out[key] = {k: v for k, v in cell.items() if k != "results"}
            out[key]["runs"] = [r.to_dict() for r in cell.get("results", [])]
        # wall time stays out so repeated runs write identical bytes
        return {"spec": self.spec.to_dict(), "cells": out}

    def write(self, outdir) -> None:
        os.makedirs(outdir, exist_ok=True)
        with open(os.path.join(outdir, "report.json"), "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
        columns = [len(self.spec.dim_names(d)) for d in self.spec.dims]
        rows = []
        for kind, sur in self.spec.grid:
            rows.append((kind, sur))
        if [self.spec.baseline, None] not in self.spec.grid:
            rows.insert(0, (self.spec.baseline, None))

        def table(name, metric):
            with open(os.path.join(outdir, name), "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["strategy", "surrogate"] + [str(c) for c in columns])
                for kind, sur in rows:
                    vals = []
                    for d in self.spec.dims:
                        cell = self.cells.get(cell_key(kind, sur, self.spec.dim_names(d)), {})
                        v = cell.get(metric)
                        vals.append("" if v is None else f"{v:.4f}")
                    w.writerow([kind, sur or "-"] + vals)

        table("standardized_l2.csv", "mean_l2")
        table("ksts.csv", "mean_ksts")
        with open(os.path.join(outdir, "success_speedup.csv"), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            levels = self.spec.success_levels
            w.writerow(["strategy", "surrogate", "parameters"]
                       + [f"success@{round(100 * l)}" for l in levels]
                       + [f"speedup@{round(100 * l)}" for l in levels])
            for d in self.spec.dims:
                names = self.spec.dim_names(d)
                for kind, sur in rows:
                    cell = self.cells.get(cell_key(kind, sur, names), {})
                    succ = cell.get("success", {})
                    spd = cell.get("speedup", {})
                    w.writerow([kind, sur or "-", len(names)]
                               + [_fmt(succ.get(str(l))) for l in levels]
                               + [_fmt(spd.get(str(l))) for l in levels])


def _fmt(v):
    return "" if v is None else f"{v:.2f}"


def summarise(results, thetas, levels) -> dict:
    space = default_space()
    return {
        "mean_l2": float(np.mean([standardized_l2(space, r.optimal, t) for r, t in zip(results, thetas)])),
        "mean_ksts": float(np.mean([r.optimal_ksts for r in results])),
        "success": {str(l): success_at(results, l) for l in levels},
        "results": list(results),
        "thetas": [[float(x) for x in t] for t in thetas],
    }


def run_benchmark(spec: ExperimentSpec) -> BenchmarkReport:
    """Run every (strategy, surrogate) cell for every dimension set.

    Truths are shared across cells within a repeat, so cells are compared
    on the same targets; each cell gets its own framework seed.
    """
    t0 = time.time()
    report = BenchmarkReport(spec)
    template = FrameworkConfig.from_dict(spec.template) if spec.template else FrameworkConfig()
    grid = [tuple(g) for g in spec.grid]
    if (spec.baseline, None) not in grid:
        grid.insert(0, (spec.baseline, None))
    for di, dims in enumerate(spec.dims):
        names = spec.dim_names(dims)
        thetas = []
        for rep in range(spec.n_repeats):
            rng = np.random.default_rng([spec.seed, di, rep])
            thetas.append(draw_theta_star(rng, template.simulation, template.simulation_seed))
        for ci, (kind, sur) in enumerate(grid):
            key = cell_key(kind, sur, names)
            results = []
            try:
                for rep, theta in enumerate(thetas):
                    d = template.to_dict()
                    d["strategy"] = {**d["strategy"], "kind": kind}
                    d.update(calibrate=names, fixed_values=theta.tolist(),
                             seed=int(np.random.SeedSequence([spec.seed, di, ci, rep]).generate_state(1)[0]))
                    if sur is not None:
                        d["surrogate"] = sur
                    results.append(sanity_check(theta, FrameworkConfig.from_dict(d)).result)
                report.cells[key] = summarise(results, thetas, spec.success_levels)
            except Exception as exc:  # one failing cell must not sink the grid
                log.exception("cell %s failed", key)
                report.cells[key] = {"error": f"{type(exc).__name__}: {exc}"}
            log.info("cell %s done", key)
        base = report.cells.get(cell_key(spec.baseline, None, names), {})
        for kind, sur in grid:
            cell = report.cells.get(cell_key(kind, sur, names), {})
            if "results" in cell and "results" in base:
                cell["speedup"] = {str(l): speedup(cell["results"], base["results"], l)
                                   for l in spec.success_levels}
    report.wall_seconds = time.time() - t0
    return report


# -- real-world targets -------------------------------------------------------

def daily_from_cumulative(cumulative) -> np.ndarray:
    """Next-day minus current-day counts; the last day has no successor and is dropped.

    Decreases in the cumulative record (data corrections) become zero.
    """
    c = np.asarray(cumulative, dtype=float)
    daily = np.diff(c)
    if (daily < 0).any():
        log.warning("cumulative counts decrease on %d day(s); clipping to 0", int((daily < 0).sum()))
        daily = np.maximum(daily, 0.0)
    return daily


def trailing_mean(x, window: int = 7) -> np.ndarray:
    """Mean of each value and up to ``window - 1`` predecessors."""
    if window < 1:
        raise ValueError("window must be >= 1")
    x = np.asarray(x, dtype=float)
    c = np.concatenate(([0.0], np.cumsum(x)))
    idx = np.arange(1, len(x) + 1)
    lo = np.maximum(idx - window, 0)
    return (c[idx] - c[lo]) / (idx - lo)


def _parse_jhu_date(s: str) -> dt.date:
    return dt.datetime.strptime(s.strip(), "%m/%d/%y").date()


def load_cumulative(path, region: str) -> tuple[list[dt.date], np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[:4] != ["Province/State", "Country/Region", "Lat", "Long"]:
            raise ValueError(f"{path}: not in the JHU CSSE confirmed-cases layout")
        dates = [_parse_jhu_date(h) for h in header[4:]]
        total = np.zeros(len(dates))
        found = False
        for row in reader:
            if row[1] == region:
                found = True
                total += np.array([float(x or 0) for x in row[4:]])
    if not found:
        raise ValueError(f"region {region!r} not found in {path}")
    return dates, total


def ingest_cumulative_csv(path, region: str, start_date, end_date, window: int = 7) -> np.ndarray:
    """Daily new infections for ``region`` between two dates (inclusive), smoothed."""
    start = _as_date(start_date)
    end = _as_date(end_date)
    if end < start:
        raise ValueError("end_date precedes start_date")
    dates, cumulative = load_cumulative(path, region)
    daily = trailing_mean(daily_from_cumulative(cumulative), window)
    daily_dates = dates[:-1]
    if start not in daily_dates or end not in daily_dates:
        raise ValueError(f"{start}..{end} not covered by {daily_dates[0]}..{daily_dates[-1]}")
    i, j = daily_dates.index(start), daily_dates.index(end)
    return np.maximum(np.floor(daily[i:j + 1] + 0.5), 0).astype(np.int64)


def _as_date(x) -> dt.date:
    if isinstance(x, dt.date):
        return x
    return dt.date.fromisoformat(str(x))


def write_cdf_csv(path, series) -> None:
    """Two-column ``day,scaled_cumulative`` dump of a series' scaled cumulative curve."""
    cdf = to_cdf(series)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["day", "scaled_cumulative"])
        for day, v in enumerate(cdf.values):
            w.writerow([day, repr(float(v))])
