"""Continuous-space SIR virus-spread model with quarantine on detection.

Agents live in the unit square. Each simulated day applies movement,
then transmission, then disease progression, and the model reports the
number of new infections per day.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, asdict

import numpy as np
from scipy.spatial import cKDTree

from .params import default_space, clamp

SUSCEPTIBLE, INFECTED, RECOVERED, DEAD = 0, 1, 2, 3

N_PARAMS = 7


@dataclass(frozen=True)
class SimulationConfig:
    population: int = 1000
    initial_infected: int = 10
    days: int = 41
    alpha: float = 0.05

    def __post_init__(self):
        if not 0 < self.initial_infected < self.population:
            raise ValueError("need 0 < initial_infected < population")
        if self.days < 1:
            raise ValueError("days must be >= 1")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must be in (0, 1)")

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class ModelParams:
    transmission: float
    reinfection: float
    death: float
    infection_period: int
    detection_time: int
    speed: float
    radius: float

    @classmethod
    def from_vector(cls, v) -> "ModelParams":
        v = np.asarray(v, dtype=float)
        if v.shape != (N_PARAMS,):
            from .params import DimensionError
            raise DimensionError(f"the ABM takes {N_PARAMS} parameters, got shape {v.shape}")
        v = clamp(default_space(), v)
        return cls(float(v[0]), float(v[1]), float(v[2]), int(v[3]), int(v[4]),
                   float(v[5]), float(v[6]))


@dataclass
class Population:
    """Mutable agent arrays; one row per agent."""
    position: np.ndarray       # (n, 2) in [0, 1]^2
    state: np.ndarray          # int8 compartment codes
    days_infected: np.ndarray  # int32, zero unless infected
    quarantined: np.ndarray    # bool

    @property
    def size(self) -> int:
        return len(self.state)

    def counts(self) -> np.ndarray:
        return np.bincount(self.state, minlength=4)

    def copy(self) -> "Population":
        return Population(self.position.copy(), self.state.copy(),
                          self.days_infected.copy(), self.quarantined.copy())


def seed_population(config: SimulationConfig, rng: np.random.Generator) -> Population:
    n = config.population
    pop = Population(
        position=rng.random((n, 2)),
        state=np.full(n, SUSCEPTIBLE, dtype=np.int8),
        days_infected=np.zeros(n, dtype=np.int32),
        quarantined=np.zeros(n, dtype=bool),
    )
    pop.state[rng.choice(n, config.initial_infected, replace=False)] = INFECTED
    return pop


def _reflect(x: np.ndarray) -> np.ndarray:
    # fold onto [0, 1] as if bouncing off both walls any number of times
    x = np.abs(x) % 2.0
    return np.where(x > 1.0, 2.0 - x, x)


def _contacts(position: np.ndarray, radius: float) -> np.ndarray:
    if radius < 0:
        return np.empty((0, 2), dtype=np.intp)
    pairs = cKDTree(position).query_pairs(radius, output_type="ndarray")
    if len(pairs) > 1:
        # query_pairs order is not part of its contract; fix it for reproducibility
        pairs = pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))]
    return pairs


def step(pop: Population, p: ModelParams, rng: np.random.Generator) -> tuple[Population, int]:
    """Advance one day in place and return ``(pop, new_infections)``."""
    n = pop.size
    # (1) movement. Every random block below has a fixed size so that the
    # stream stays aligned across parameter values (common random numbers).
    heading = rng.random(n) * (2 * np.pi)
    dist = rng.random(n) * p.speed
    u_infect = rng.random(n)
    u_death = rng.random(n)
    mobile = (pop.state != DEAD) & ~pop.quarantined
    if p.speed > 0 and mobile.any():
        delta = np.column_stack((np.cos(heading), np.sin(heading))) * dist[:, None]
        pop.position[mobile] = _reflect(pop.position[mobile] + delta[mobile])

    # (2) transmission from agents infected at the start of the day. Each
    # infectious contact is an independent Bernoulli trial, so a target with
    # k contacts escapes with probability (1 - q)**k.
    was_infected = pop.state == INFECTED
    new = 0
    if p.transmission > 0 and was_infected.any():
        pairs = _contacts(pop.position, p.radius)
        if len(pairs):
            a, b = pairs[:, 0], pairs[:, 1]
            src = np.concatenate((a, b))
            dst = np.concatenate((b, a))
            dst = dst[was_infected[src] & ~was_infected[dst]]
            k = np.bincount(dst, minlength=n)
            q = np.where(pop.state == RECOVERED, p.transmission * p.reinfection, p.transmission)
            q[(pop.state != SUSCEPTIBLE) & (pop.state != RECOVERED)] = 0.0
            p_hit = 1.0 - (1.0 - q) ** k
            hit = np.flatnonzero((k > 0) & (u_infect < p_hit))
            pop.state[hit] = INFECTED
            pop.days_infected[hit] = 0
            new = len(hit)

    # (3) progression for agents already infected before today's transmission
    sick = np.flatnonzero(was_infected)
    if len(sick):
        pop.days_infected[sick] += 1
        detected = sick[pop.days_infected[sick] >= p.detection_time]
        pop.quarantined[detected] = True
        ending = sick[pop.days_infected[sick] >= p.infection_period]
        if len(ending):
            dies = u_death[ending] < p.death
            pop.state[ending] = np.where(dies, DEAD, RECOVERED).astype(np.int8)
            pop.days_infected[ending] = 0
            pop.quarantined[ending] = False
    return pop, new


def simulate(params, config: SimulationConfig = SimulationConfig(), seed: int = 0) -> np.ndarray:
    """Daily new infections (length ``config.days``); day 0 holds the seeded cases."""
    p = params if isinstance(params, ModelParams) else ModelParams.from_vector(params)
    rng = np.random.default_rng(seed)
    pop = seed_population(config, rng)
    series = np.zeros(config.days, dtype=np.int64)
    series[0] = config.initial_infected
    for day in range(1, config.days):
        if not (pop.state == INFECTED).any():
            break
        pop, series[day] = step(pop, p, rng)
    return series


def write_series_csv(path, series) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["day", "new_infections"])
        for day, value in enumerate(series):
            w.writerow([day, int(value)])


def read_series_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or "new_infections" not in rows[0]:
        raise ValueError(f"{path}: expected a day,new_infections CSV")
    return np.array([int(float(r["new_infections"])) for r in rows], dtype=np.int64)
