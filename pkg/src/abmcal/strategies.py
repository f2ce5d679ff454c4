"""Candidate-generation strategies.

Every strategy answers the same question for the framework: which
``n`` parameter vectors should the ABM evaluate next? All work happens in
the (possibly reduced) search space handed in by the framework.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, asdict
from typing import Sequence

import numpy as np
from scipy.spatial.distance import cdist

from .params import ParameterSpace, clamp, perturb_gaussian, sample_uniform
from .sobol import SobolSequence, sample_sobol

log = logging.getLogger(__name__)

RANDOM_BASELINE = "RandomBaseline"
SOBOL_BASELINE = "SobolBaseline"
SA_RANDOM = "SARandom"
SA_SOBOL = "SASobol"
MSRS = "MSRS"
DYCORS = "DYCORS"
CMAES = "CMAES"
KINDS = (RANDOM_BASELINE, SOBOL_BASELINE, SA_RANDOM, SA_SOBOL, MSRS, DYCORS, CMAES)
BASELINES = (RANDOM_BASELINE, SOBOL_BASELINE)
SAMPLERS = (SA_RANDOM, SA_SOBOL)
OPTIMISERS = (MSRS, DYCORS, CMAES)

_ALIASES = {
    "random": RANDOM_BASELINE, "randombaseline": RANDOM_BASELINE,
    "sobol": SOBOL_BASELINE, "sobolbaseline": SOBOL_BASELINE,
    "sarandom": SA_RANDOM, "sasobol": SA_SOBOL,
    "msrs": MSRS, "dycors": DYCORS, "cmaes": CMAES, "cma-es": CMAES,
}

SIGMA_INIT = 0.2
SIGMA_MIN = 0.005
SIGMA_MAX = 0.2
ADAPT_AFTER = 3


class MissingSurrogate(RuntimeError):
    pass


def kind_name(kind: str) -> str:
    if kind in KINDS:
        return kind
    try:
        return _ALIASES[kind.lower().replace("_", "").replace(" ", "")]
    except KeyError:
        raise ValueError(f"unknown strategy kind {kind!r}") from None


@dataclass
class StrategyConfig:
    kind: str = RANDOM_BASELINE
    batch_size: int = 250
    inner_samples: int = 1000
    inner_iterations: int = 3
    epsilon: float = 0.10
    weight_cycle: Sequence[float] = (0.3, 0.5, 0.7, 0.95)
    f1_threshold: float = 0.90
    n_folds: int = 3
    # plain sampler used for initialisation and batch fill
    sampler: str = "random"

    def __post_init__(self):
        self.kind = kind_name(self.kind)
        self.weight_cycle = tuple(float(w) for w in self.weight_cycle)
        if not 0 <= self.epsilon <= 1:
            raise ValueError("epsilon must lie in [0, 1]")
        if not self.weight_cycle or any(not 0 <= w <= 1 for w in self.weight_cycle):
            raise ValueError("weights must lie in [0, 1]")
        if min(self.batch_size, self.inner_samples, self.inner_iterations, self.n_folds) < 1:
            raise ValueError("counts must be positive")
        if self.kind in (SOBOL_BASELINE, SA_SOBOL):
            self.sampler = "sobol"
        if self.sampler not in ("random", "sobol"):
            raise ValueError(f"unknown sampler {self.sampler!r}")

    @property
    def uses_surrogate(self) -> bool:
        return self.kind not in BASELINES

    @property
    def surrogate_mode(self) -> str | None:
        if self.kind in SAMPLERS:
            return "classifier"
        if self.kind in OPTIMISERS:
            return "regressor"
        return None

    def to_dict(self):
        d = asdict(self)
        d["weight_cycle"] = list(self.weight_cycle)
        return d


class Sampler:
    """Plain candidate source: uniform random or Sobol over the box."""

    def __init__(self, space: ParameterSpace, kind: str, rng: np.random.Generator):
        self.space = space
        self.kind = kind
        self.rng = rng
        self.seq = SobolSequence(space.dim) if kind == "sobol" else None

    def draw(self, n: int) -> np.ndarray:
        if n <= 0:
            return np.empty((0, self.space.dim))
        if self.seq is not None:
            return sample_sobol(self.space, n, self.seq)
        return sample_uniform(self.space, self.rng, size=n)


@dataclass
class CmaState:
    mean: np.ndarray
    sigma: float
    cov: np.ndarray
    pc: np.ndarray
    ps: np.ndarray
    generation: int = 0
    resets: int = 0

    @classmethod
    def initial(cls, d: int, sigma: float = 0.3) -> "CmaState":
        return cls(np.full(d, 0.5), sigma, np.eye(d), np.zeros(d), np.zeros(d))


@dataclass
class StrategyState:
    space: ParameterSpace
    sampler: Sampler
    rng: np.random.Generator
    best_candidate: np.ndarray | None = None
    best_ksts: float = math.inf
    sigma: np.ndarray | None = None
    success_count: int = 0
    failure_count: int = 0
    n: int = 0
    n0: int | None = None
    weight_index: int = 0
    cma: CmaState | None = None

    def __post_init__(self):
        if self.sigma is None:
            self.sigma = SIGMA_INIT * self.space.widths

    @property
    def sigma_min(self):
        return SIGMA_MIN * self.space.widths

    @property
    def sigma_max(self):
        return SIGMA_MAX * self.space.widths


def new_state(config: StrategyConfig, space: ParameterSpace, rng: np.random.Generator) -> StrategyState:
    state = StrategyState(space, Sampler(space, config.sampler, rng), rng)
    if config.kind == CMAES:
        state.cma = CmaState.initial(space.dim)
    return state


def observe(state: StrategyState, evaluated: np.ndarray, ksts: np.ndarray) -> bool:
    """Sync the incumbent with the evaluated history and adapt step sizes.

    Returns whether the newest evaluations improved on the previous best.
    """
    ksts = np.asarray(ksts, dtype=float)
    state.n = len(ksts)
    i = int(np.argmin(ksts))
    improved = ksts[i] < state.best_ksts
    had_best = np.isfinite(state.best_ksts)
    state.best_ksts = float(ksts[i])
    state.best_candidate = np.asarray(evaluated[i], dtype=float).copy()
    if had_best:
        adapt_sigma(state, improved)
    return bool(improved)


def adapt_sigma(state: StrategyState, improved: bool) -> None:
    """Double after three straight improvements, halve after three straight misses."""
    if improved:
        state.success_count += 1
        state.failure_count = 0
    else:
        state.failure_count += 1
        state.success_count = 0
    if state.success_count >= ADAPT_AFTER:
        state.sigma = np.minimum(2.0 * state.sigma, state.sigma_max)
        state.success_count = 0
    elif state.failure_count >= ADAPT_AFTER:
        state.sigma = np.maximum(0.5 * state.sigma, state.sigma_min)
        state.failure_count = 0


def unit_rescale(x: np.ndarray) -> np.ndarray:
    """Min-max map onto [0, 1]; a constant vector maps to zeros."""
    x = np.asarray(x, dtype=float)
    lo, hi = x.min(), x.max()
    if hi - lo <= 0:
        return np.zeros_like(x)
    return (x - lo) / (hi - lo)


def merit(s_scaled, d_scaled, w):
    """Weighted score to minimise; ``w`` trades prediction against remoteness."""
    return w * np.asarray(s_scaled) + (1.0 - w) * (1.0 - np.asarray(d_scaled))


def min_distances(space: ParameterSpace, candidates: np.ndarray, evaluated: np.ndarray) -> np.ndarray:
    if len(evaluated) == 0:
        return np.full(len(candidates), np.inf)
    return cdist(space.to_unit(candidates), space.to_unit(evaluated)).min(axis=1)


def _require(surrogate, kind):
    if surrogate is None:
        raise MissingSurrogate(f"{kind} needs a fitted surrogate")


def msrs_iteration(config: StrategyConfig, state: StrategyState, surrogate,
                   evaluated: np.ndarray) -> np.ndarray:
    """One inner MSRS step: perturb the incumbent, pick the merit minimiser."""
    _require(surrogate, MSRS)
    space = state.space
    mask = np.ones((config.inner_samples, space.dim), dtype=bool)
    cands = perturb_gaussian(space, state.best_candidate, state.sigma, mask, state.rng)
    w = config.weight_cycle[state.weight_index % len(config.weight_cycle)]
    state.weight_index += 1
    s = unit_rescale(surrogate.values(cands))
    d = unit_rescale(min_distances(space, cands, evaluated))
    return cands[int(np.argmin(merit(s, d, w)))]


def dycors_perturbation_probability(n: int, n0: int, n_max: int, d: int) -> float:
    if not n0 <= n < n_max:
        raise ValueError(f"need n0 <= n < n_max, got n0={n0}, n={n}, n_max={n_max}")
    base = min(20.0 / d, 1.0)
    if n_max - n0 <= 1:
        return max(base, 1.0 / d)
    p = base * (1.0 - math.log(n - n0 + 1) / math.log(n_max - n0))
    return float(min(max(p, 1.0 / d), 1.0))


def dycors_masks(p: float, count: int, d: int, rng: np.random.Generator) -> np.ndarray:
    mask = rng.random((count, d)) < p
    empty = np.flatnonzero(~mask.any(axis=1))
    if len(empty):
        mask[empty, rng.integers(0, d, size=len(empty))] = True
    return mask


def dycors_iteration(config: StrategyConfig, state: StrategyState, surrogate,
                     evaluated: np.ndarray, n_max: int) -> np.ndarray:
    """One inner DYCORS step: perturb a random coordinate subset, pick the lowest prediction."""
    _require(surrogate, DYCORS)
    space = state.space
    n0 = state.n0 if state.n0 is not None else state.n
    p = dycors_perturbation_probability(min(state.n, n_max - 1), n0, n_max, space.dim)
    mask = dycors_masks(p, config.inner_samples, space.dim, state.rng)
    cands = perturb_gaussian(space, state.best_candidate, state.sigma, mask, state.rng,
                             require_mask=True)
    return cands[int(np.argmin(surrogate.values(cands)))]


def sa_sampler_batch(config: StrategyConfig, classifier, sampler: Sampler, n: int,
                     rng: np.random.Generator) -> np.ndarray:
    """Epsilon-greedy draw from a classified candidate pool.

    Positives are taken at rate ``1 - epsilon`` and negatives at rate
    ``epsilon``; a class that runs short is topped up from the other.
    """
    pool = sampler.draw(max(config.inner_samples, n))
    positive = np.array([lab == "positive" for lab in classifier.labels(pool)])
    pos, neg = np.flatnonzero(positive), np.flatnonzero(~positive)
    want_pos = int(round((1.0 - config.epsilon) * n))
    take_pos = min(want_pos, len(pos))
    take_neg = min(n - take_pos, len(neg))
    take_pos = min(n - take_neg, len(pos))
    chosen = np.concatenate((rng.choice(pos, take_pos, replace=False),
                             rng.choice(neg, take_neg, replace=False)))
    return pool[chosen.astype(int)]


def phi(n_folds: int, n_parameters: int) -> int:
    """Minimum count of each label before a classifier surrogate is trusted."""
    return (n_folds + n_parameters) + 1


def _cma_constants(d: int, lam: int):
    mu = lam // 2
    w = np.log(mu + 0.5) - np.log(np.arange(1, mu + 1))
    w /= w.sum()
    mueff = 1.0 / np.sum(w**2)
    cc = (4 + mueff / d) / (d + 4 + 2 * mueff / d)
    cs = (mueff + 2) / (d + mueff + 5)
    c1 = 2 / ((d + 1.3) ** 2 + mueff)
    cmu = min(1 - c1, 2 * (mueff - 2 + 1 / mueff) / ((d + 2) ** 2 + mueff))
    damps = 1 + 2 * max(0.0, math.sqrt((mueff - 1) / (d + 1)) - 1) + cs
    chi_n = math.sqrt(d) * (1 - 1 / (4 * d) + 1 / (21 * d**2))
    return mu, w, mueff, cc, cs, c1, cmu, damps, chi_n


def _eig(cov):
    vals, vecs = np.linalg.eigh(cov)
    return vals, vecs


def cmaes_step(config: StrategyConfig, state: StrategyState, surrogate, n: int | None = None):
    """One (mu/mu_w, lambda) generation scored by the surrogate.

    Returns the offspring sorted by predicted KSTS: the mu elites first,
    padded with the next-ranked offspring up to ``n`` (default: batch size).
    """
    _require(surrogate, CMAES)
    space, cma, rng = state.space, state.cma, state.rng
    d = space.dim
    lam = max(config.batch_size, 2)
    mu, w, mueff, cc, cs, c1, cmu, damps, chi_n = _cma_constants(d, lam)

    vals, vecs = _eig(cma.cov)
    vals = np.maximum(vals, 0.0)
    z = rng.standard_normal((lam, d))
    y = (z * np.sqrt(vals)) @ vecs.T
    x_unit = np.clip(cma.mean + cma.sigma * y, 0.0, 1.0)
    params = clamp(space, space.from_unit(x_unit))
    x_unit = space.to_unit(params)

    fitness = np.asarray(surrogate.values(params), dtype=float)
    order = np.argsort(fitness, kind="stable")
    elite = x_unit[order[:mu]]

    old = cma.mean
    cma.mean = w @ elite
    y_w = (cma.mean - old) / cma.sigma
    inv_sqrt = vecs @ np.diag(1.0 / np.sqrt(np.maximum(vals, 1e-300))) @ vecs.T
    cma.ps = (1 - cs) * cma.ps + math.sqrt(cs * (2 - cs) * mueff) * (inv_sqrt @ y_w)
    cma.generation += 1
    ps_norm = np.linalg.norm(cma.ps)
    hsig = ps_norm / math.sqrt(1 - (1 - cs) ** (2 * cma.generation)) / chi_n < 1.4 + 2 / (d + 1)
    cma.pc = (1 - cc) * cma.pc + hsig * math.sqrt(cc * (2 - cc) * mueff) * y_w
    y_el = (elite - old) / cma.sigma
    rank_mu = (y_el * w[:, None]).T @ y_el
    cov = ((1 - c1 - cmu) * cma.cov
           + c1 * (np.outer(cma.pc, cma.pc) + (1 - hsig) * cc * (2 - cc) * cma.cov)
           + cmu * rank_mu)
    cov = 0.5 * (cov + cov.T)
    cma.sigma *= math.exp(min(1.0, (cs / damps) * (ps_norm / chi_n - 1)))
    cma.sigma = float(np.clip(cma.sigma, 1e-8, 1.0))
    try:
        ok = np.all(np.isfinite(cov)) and np.linalg.eigvalsh(cov).min() > 1e-10 * max(1.0, np.trace(cov))
    except np.linalg.LinAlgError:
        ok = False
    if not ok:
        log.warning("CMA-ES covariance lost positive definiteness; resetting to identity")
        cov = np.eye(d)
        cma.pc = np.zeros(d)
        cma.resets += 1
    cma.cov = cov

    n = lam if n is None else n
    return params[order[:n]]


def propose_batch(config: StrategyConfig, state: StrategyState, surrogate,
                  evaluated: np.ndarray, n: int, n_max: int, classifier_ready: bool = True):
    """Next ``n`` candidates for the ABM, plus how many came from the strategy itself.

    For MSRS and DYCORS the strategy contributes one candidate per inner
    iteration and the plain sampler fills the rest of the batch. The SA
    samplers fall back to the plain sampler when ``classifier_ready`` is false.
    """
    kind = config.kind
    if kind in BASELINES:
        return state.sampler.draw(n), 0
    if kind in SAMPLERS:
        if not classifier_ready or surrogate is None:
            return state.sampler.draw(n), 0
        return sa_sampler_batch(config, surrogate, state.sampler, n, state.rng), n
    _require(surrogate, kind)
    if kind == CMAES:
        return cmaes_step(config, state, surrogate, n), n
    if state.n0 is None:
        state.n0 = state.n
    seen = np.asarray(evaluated, dtype=float).reshape(-1, state.space.dim)
    picks = []
    for _ in range(min(config.inner_iterations, n)):
        if kind == MSRS:
            pick = msrs_iteration(config, state, surrogate, seen)
        else:
            pick = dycors_iteration(config, state, surrogate, seen, n_max)
        picks.append(pick)
        seen = np.vstack((seen, pick))
    picks = np.array(picks).reshape(-1, state.space.dim)
    return np.vstack((picks, state.sampler.draw(n - len(picks)))), len(picks)
