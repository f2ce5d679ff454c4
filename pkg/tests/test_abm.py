import numpy as np
import pytest

from abmcal.abm import (DEAD, INFECTED, RECOVERED, SUSCEPTIBLE, ModelParams, Population,
                        SimulationConfig, read_series_csv, seed_population, simulate, step,
                        write_series_csv)
from abmcal.params import DimensionError, default_space, sample_uniform

TABLE5_DYCORS = [0.133, 0.469, 0.072, 18, 11, 0.019, 0.007]

# captured once from this implementation; guards against behavioural drift
GOLDEN_83 = [10, 1, 2, 1, 0, 0, 0, 2, 0, 1, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1] + [0] * 60


def pair(distance=0.0, state_b=SUSCEPTIBLE):
    return Population(
        position=np.array([[0.5, 0.5], [0.5 + distance, 0.5]]),
        state=np.array([INFECTED, state_b], dtype=np.int8),
        days_infected=np.zeros(2, dtype=np.int32),
        quarantined=np.zeros(2, dtype=bool),
    )


def params(**kw):
    base = dict(transmission=0.5, reinfection=0.5, death=0.1, infection_period=10,
                detection_time=5, speed=0.0, radius=0.01)
    base.update(kw)
    return ModelParams(**base)


def test_beta_zero_gives_no_spread():
    v = [0.0, 0.5, 0.1, 10, 5, 0.5, 0.02]
    s = simulate(v, SimulationConfig(population=300, days=41), 3)
    assert s[0] == 10 and s[1:].sum() == 0


def test_no_motion_no_radius_gives_no_spread():
    v = [1.0, 1.0, 0.0, 30, 30, 0.0, 0.0]
    s = simulate(v, SimulationConfig(population=300, days=41), 3)
    assert s[1:].sum() == 0


def test_determinism():
    rng = np.random.default_rng(0)
    cfg = SimulationConfig(population=200)
    for _ in range(5):
        v = sample_uniform(default_space(), rng)
        assert np.array_equal(simulate(v, cfg, 11), simulate(v, cfg, 11))


def test_golden_series():
    s = simulate(TABLE5_DYCORS, SimulationConfig(days=83), 0)
    assert s.tolist() == GOLDEN_83


def test_out_of_range_contact_is_safe():
    pop, new = step(pair(distance=0.05), params(transmission=1.0, radius=0.01), np.random.default_rng(0))
    assert new == 0 and pop.state[1] == SUSCEPTIBLE


def test_certain_transmission_at_distance_zero():
    pop, new = step(pair(), params(transmission=1.0), np.random.default_rng(0))
    assert new == 1 and pop.state[1] == INFECTED


def test_certain_death():
    pop = pair(distance=0.5)
    pop.days_infected[0] = 10
    pop, _ = step(pop, params(death=1.0, infection_period=10), np.random.default_rng(0))
    assert pop.state[0] == DEAD


def test_reinfection_uses_scaled_rate():
    hits = 0
    rng = np.random.default_rng(5)
    for _ in range(4000):
        _, new = step(pair(state_b=RECOVERED), params(transmission=0.6, reinfection=0.5), rng)
        hits += new
    assert abs(hits / 4000 - 0.3) < 0.025


def test_single_contact_rate_monte_carlo():
    rng = np.random.default_rng(1)
    hits = sum(step(pair(), params(transmission=0.3), rng)[1] for _ in range(10_000))
    assert abs(hits / 10_000 - 0.3) < 0.015


def test_multiple_contacts_compound():
    # two infectious neighbours: escape probability is (1 - q)^2
    rng = np.random.default_rng(2)
    hits = 0
    for _ in range(10_000):
        pop = Population(np.full((3, 2), 0.5), np.array([INFECTED, INFECTED, SUSCEPTIBLE], np.int8),
                         np.zeros(3, np.int32), np.zeros(3, bool))
        hits += step(pop, params(transmission=0.3), rng)[1]
    assert abs(hits / 10_000 - (1 - 0.7**2)) < 0.015


def test_invariants_over_seeded_runs():
    cfg = SimulationConfig(population=200, days=41)
    space = default_space()
    rng = np.random.default_rng(42)
    for run in range(100):
        p = ModelParams.from_vector(sample_uniform(space, rng))
        srng = np.random.default_rng(run)
        pop = seed_population(cfg, srng)
        for _ in range(1, cfg.days):
            before = pop.copy()
            pop, new = step(pop, p, srng)
            assert pop.counts().sum() == cfg.population
            assert new == int(np.sum((before.state != INFECTED) & (pop.state == INFECTED)))
            dead = before.state == DEAD
            assert np.all(pop.state[dead] == DEAD)
            assert np.array_equal(pop.position[dead], before.position[dead])
            still = before.quarantined
            assert np.array_equal(pop.position[still], before.position[still])
            assert pop.position.min() >= 0.0 and pop.position.max() <= 1.0
            # quarantine only ever holds infected agents
            assert np.all(pop.state[pop.quarantined] == INFECTED)


def test_series_io_round_trip(tmp_path):
    s = simulate(TABLE5_DYCORS, SimulationConfig(population=300), 0)
    f = tmp_path / "s.csv"
    write_series_csv(f, s)
    assert f.read_text().splitlines()[0] == "day,new_infections"
    assert np.array_equal(read_series_csv(f), s)


def test_bad_inputs():
    with pytest.raises(DimensionError):
        simulate(np.zeros(6))
    with pytest.raises(ValueError):
        SimulationConfig(population=10, initial_infected=10)
