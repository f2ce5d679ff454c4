"""Iterative calibrate-evaluate loop around the ABM.

Initialisation spends the minimum ABM budget on plain samples. Each main
loop iteration then checks the surrogate against the newest batch (refit
on divergence), lets the strategy assemble a batch, evaluates it through
the ABM and appends it to the ground-truth database. The loop ends once
the best KS statistic reaches the threshold or the maximum budget is spent.
"""
from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict
from typing import Callable, Sequence

import numpy as np

from . import strategies as st
from .abm import SimulationConfig, simulate
from .ks import POSITIVE, NEGATIVE, CumulativeDistribution, critical_value, ks_statistic, label, to_cdf
from .params import ParameterSpace, default_space
from .surrogate import (CLASSIFIER, REGRESSOR, InsufficientData, TrainingSet, family_name,
                        fit, select_classifier)

log = logging.getLogger(__name__)

COMMON = "common"
PER_CANDIDATE = "per_candidate"


class ConfigError(ValueError):
    pass


@dataclass
class FrameworkConfig:
    abm_min_budget: int = 500
    abm_max_budget: int = 2500
    batch_size: int = 250
    ks_threshold: float = 0.005
    f1_threshold: float = 0.90
    rmse_threshold: float = 0.001
    alpha: float = 0.05
    strategy: st.StrategyConfig = field(default_factory=st.StrategyConfig)
    surrogate: str = "GradientBoostedTrees"
    simulation: SimulationConfig = field(default_factory=SimulationConfig)
    seed: int = 0
    # parameter names to calibrate; None calibrates all seven
    calibrate: list[str] | None = None
    # full 7-vector supplying the values of parameters that are not calibrated
    fixed_values: list[float] | None = None
    # "common": every candidate runs the ABM with simulation_seed
    # "per_candidate": seed derived from (seed, row index)
    seed_mode: str = COMMON
    simulation_seed: int = 0
    jobs: int = 1

    def __post_init__(self):
        if isinstance(self.strategy, dict):
            self.strategy = st.StrategyConfig(**self.strategy)
        if isinstance(self.simulation, dict):
            self.simulation = SimulationConfig(**self.simulation)
        self.surrogate = family_name(self.surrogate)
        if not 1 <= self.abm_min_budget <= self.abm_max_budget:
            raise ConfigError("need 1 <= abm_min_budget <= abm_max_budget")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be positive")
        if min(self.ks_threshold, self.f1_threshold, self.rmse_threshold) <= 0:
            raise ConfigError("thresholds must be positive")
        if self.seed_mode not in (COMMON, PER_CANDIDATE):
            raise ConfigError(f"unknown seed_mode {self.seed_mode!r}")
        # the framework owns these two; keep the strategy in step
        self.strategy.batch_size = self.batch_size
        self.strategy.f1_threshold = self.f1_threshold
        space = default_space()
        if self.calibrate is not None:
            unknown = set(self.calibrate) - set(space.names)
            if unknown or not self.calibrate:
                raise ConfigError(f"bad calibrate list: {self.calibrate}")
            if len(self.calibrate) < space.dim and self.fixed_values is None:
                raise ConfigError("fixed_values is required when calibrating a subset")
        if self.fixed_values is not None and len(self.fixed_values) != space.dim:
            raise ConfigError(f"fixed_values needs {space.dim} entries")

    @property
    def free_indices(self) -> list[int]:
        names = default_space().names
        if self.calibrate is None:
            return list(range(len(names)))
        return [i for i, n in enumerate(names) if n in self.calibrate]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["strategy"] = self.strategy.to_dict()
        d["simulation"] = self.simulation.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "FrameworkConfig":
        known = cls.__dataclass_fields__
        extra = set(d) - set(known)
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        return cls(**d)

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, path) -> "FrameworkConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class LabeledSample:
    params: np.ndarray
    ksts: float
    label: str
    seed: int
    iteration: int = 0


class GroundTruthDB:
    """Append-only record of every ABM evaluation."""

    def __init__(self):
        self.rows: list[LabeledSample] = []

    def __len__(self):
        return len(self.rows)

    def append(self, row: LabeledSample) -> None:
        self.rows.append(row)

    def extend(self, rows) -> None:
        self.rows.extend(rows)

    @property
    def inputs(self) -> np.ndarray:
        return np.array([r.params for r in self.rows], dtype=float)

    @property
    def ksts(self) -> np.ndarray:
        return np.array([r.ksts for r in self.rows], dtype=float)

    @property
    def labels(self) -> list[str]:
        return [r.label for r in self.rows]

    def count(self, lab: str) -> int:
        return sum(r.label == lab for r in self.rows)

    def training_set(self, free: Sequence[int], space: ParameterSpace, rows=None) -> TrainingSet:
        rows = self.rows if rows is None else rows
        X = np.array([r.params[list(free)] for r in rows], dtype=float)
        return TrainingSet(X, [r.label for r in rows], [r.ksts for r in rows], space)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iteration", "seed", "ksts", "label"] + [f"p{i + 1}" for i in range(7)])
            for r in self.rows:
                w.writerow([r.iteration, r.seed, repr(float(r.ksts)), r.label]
                           + [repr(float(x)) for x in r.params])

    @classmethod
    def from_csv(cls, path) -> "GroundTruthDB":
        db = cls()
        with open(path, newline="") as fh:
            for rec in csv.DictReader(fh):
                db.append(LabeledSample(
                    np.array([float(rec[f"p{i + 1}"]) for i in range(7)]),
                    float(rec["ksts"]), rec["label"], int(rec["seed"]), int(rec["iteration"])))
        return db


@dataclass
class RunResult:
    optimal: np.ndarray
    optimal_ksts: float
    evaluations_used: int
    best_ksts_trace: list[tuple[int, float]]
    stop_reason: str
    db: GroundTruthDB | None = None
    surrogate_fits: int = 0

    def evaluations_to(self, threshold: float) -> int | None:
        """ABM evaluations spent before the best KSTS first fell to ``threshold``."""
        for evals, ksts in self.best_ksts_trace:
            if ksts <= threshold:
                return evals
        return None

    def to_dict(self) -> dict:
        return {
            "optimal": [float(x) for x in self.optimal],
            "optimal_ksts": float(self.optimal_ksts),
            "evaluations_used": int(self.evaluations_used),
            "stop_reason": self.stop_reason,
            "trace": [[int(e), float(k)] for e, k in self.best_ksts_trace],
        }

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)

    @classmethod
    def from_dict(cls, d) -> "RunResult":
        return cls(np.array(d["optimal"], dtype=float), float(d["optimal_ksts"]),
                   int(d["evaluations_used"]), [(int(e), float(k)) for e, k in d["trace"]],
                   d["stop_reason"])


def candidate_seed(config: FrameworkConfig, row: int) -> int:
    if config.seed_mode == COMMON:
        return int(config.simulation_seed)
    return int(np.random.SeedSequence([config.seed, row]).generate_state(1)[0])


def evaluate_candidate(params, actual: CumulativeDistribution, config: FrameworkConfig,
                       seed: int, iteration: int = 0) -> LabeledSample:
    """Run the ABM once and score the result against the target distribution."""
    params = np.asarray(params, dtype=float)
    series = simulate(params, config.simulation, seed)
    stat = ks_statistic(actual, to_cdf(series))
    crit = critical_value(config.alpha, config.simulation.population)
    return LabeledSample(params, stat, label(stat, crit), seed, iteration)


def _evaluate_job(job):
    return evaluate_candidate(*job)


def select_optimal(db: GroundTruthDB) -> LabeledSample:
    if not len(db):
        raise ValueError("empty ground-truth database")
    # argmin returns the first minimum, i.e. the earliest insertion
    return db.rows[int(np.argmin(db.ksts))]


SurrogateFitter = Callable[[TrainingSet, str, FrameworkConfig], object]


def default_fitter(data: TrainingSet, mode: str, config: FrameworkConfig):
    if mode == CLASSIFIER:
        return select_classifier(data, k=config.strategy.n_folds, seed=config.seed)
    return fit(config.surrogate, REGRESSOR, data, seed=config.seed)


class _Evaluator:
    def __init__(self, actual, config):
        self.actual = actual
        self.config = config
        self.pool = ProcessPoolExecutor(config.jobs) if config.jobs > 1 else None

    def __call__(self, full_params, first_row, iteration):
        jobs = [(p, self.actual, self.config, candidate_seed(self.config, first_row + i), iteration)
                for i, p in enumerate(full_params)]
        if self.pool is None:
            return [_evaluate_job(j) for j in jobs]
        return list(self.pool.map(_evaluate_job, jobs, chunksize=max(1, len(jobs) // (4 * self.config.jobs))))

    def close(self):
        if self.pool is not None:
            self.pool.shutdown()


def run(config: FrameworkConfig, actual_series, fitter: SurrogateFitter | None = None) -> RunResult:
    """Calibrate the ABM against ``actual_series`` (daily new infections)."""
    actual_series = np.asarray(actual_series)
    actual = to_cdf(actual_series)
    if actual.degenerate:
        raise ConfigError("target series has no infections; nothing to calibrate against")
    if len(actual_series) != config.simulation.days:
        raise ConfigError(f"target has {len(actual_series)} days, simulation runs {config.simulation.days}")
    log.info("resolved config: %s", json.dumps(config.to_dict(), sort_keys=True))
    fitter = fitter or default_fitter

    full_space = default_space()
    free = config.free_indices
    space = full_space.subspace(free)
    base = (np.array(config.fixed_values, dtype=float) if config.fixed_values is not None
            else 0.5 * (full_space.lower + full_space.upper))
    scfg = config.strategy
    rng = np.random.default_rng(config.seed)
    state = st.new_state(scfg, space, rng)
    db = GroundTruthDB()
    trace: list[tuple[int, float]] = []
    evaluate = _Evaluator(actual, config)
    n_max = config.abm_max_budget

    def expand(batch):
        full = np.tile(base, (len(batch), 1))
        full[:, free] = batch
        return full

    def add(batch, iteration):
        rows = evaluate(expand(batch), len(db), iteration)
        for r in rows:
            db.append(r)
            if not trace or r.ksts < trace[-1][1]:
                trace.append((len(db), float(r.ksts)))
        return rows

    def best():
        return trace[-1][1] if trace else np.inf

    try:
        # initialisation: spend the minimum budget on plain samples
        target = min(config.abm_min_budget, n_max)
        while len(db) < target and best() > config.ks_threshold:
            add(state.sampler.draw(min(config.batch_size, target - len(db))), 0)

        surrogate = None
        fits = 0
        newest: list[LabeledSample] = []
        iteration = 0
        mode = scfg.surrogate_mode
        while best() > config.ks_threshold and len(db) < n_max:
            iteration += 1
            X = db.inputs[:, free]
            st.observe(state, X, db.ksts)
            ready = True
            if mode == CLASSIFIER:
                need = st.phi(scfg.n_folds, len(free))
                enough = db.count(POSITIVE) >= need and db.count(NEGATIVE) >= need
                if not enough:
                    ready = False
                else:
                    if surrogate is None or _diverged(surrogate, newest, free, space, config):
                        surrogate = _fit(fitter, db, free, space, mode, config)
                        fits += surrogate is not None
                    ready = surrogate is not None and surrogate.validation_score >= config.f1_threshold
            elif mode == REGRESSOR:
                if surrogate is None or _diverged(surrogate, newest, free, space, config):
                    surrogate = _fit(fitter, db, free, space, mode, config)
                    fits += surrogate is not None
            n = min(config.batch_size, n_max - len(db))
            batch, _ = st.propose_batch(scfg, state, surrogate, X, n, n_max, ready)
            newest = add(batch, iteration)
    finally:
        evaluate.close()

    opt = select_optimal(db)
    return RunResult(opt.params.copy(), float(opt.ksts), len(db), trace,
                     "threshold" if opt.ksts <= config.ks_threshold else "budget", db, fits)


def _fit(fitter, db, free, space, mode, config):
    try:
        return fitter(db.training_set(free, space), mode, config)
    except InsufficientData as exc:
        log.info("surrogate not fitted: %s", exc)
        return None


def _diverged(surrogate, newest, free, space, config) -> bool:
    """Check the surrogate against the newest batch; no batch yet means no verdict."""
    if not newest:
        return False
    data = GroundTruthDB().training_set(free, space, newest)
    score = surrogate.score(data.inputs, data.labels, data.targets)
    surrogate.validation_score = score
    if surrogate.mode == CLASSIFIER:
        diverged = score < config.f1_threshold
    else:
        diverged = score > config.rmse_threshold
    log.debug("surrogate check on %d rows: score=%.4g diverged=%s", len(newest), score, diverged)
    return diverged
