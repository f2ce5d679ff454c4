import csv
import json
from importlib import resources

import numpy as np
import pytest
from hypothesis import given, settings, strategies as hst

from abmcal.abm import SimulationConfig, simulate
from abmcal.framework import FrameworkConfig, RunResult
from abmcal.harness import (DegenerateTarget, ExperimentSpec, cell_key, daily_from_cumulative,
                            draw_theta_star, ingest_cumulative_csv, is_degenerate,
                            load_cumulative, mean_evaluations_to, run_benchmark, sanity_check,
                            speedup, success_at, trailing_mean, write_cdf_csv)
from abmcal.ks import to_cdf

SIM = SimulationConfig(population=300)


def fixture_path():
    return resources.files("abmcal") / "data" / "jhu_confirmed_fixture.csv"


def toy_jhu(path, cumulative, region="Toyland", start="1/1/21"):
    import datetime as dt
    d0 = dt.datetime.strptime(start, "%m/%d/%y")
    dates = [(d0 + dt.timedelta(days=i)) for i in range(len(cumulative))]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["Province/State", "Country/Region", "Lat", "Long"]
                   + [f"{d.month}/{d.day}/{d:%y}" for d in dates])
        w.writerow(["", region, "0", "0"] + [str(c) for c in cumulative])
    return [d.date() for d in dates]


def result(trace, final=None):
    k = trace[-1][1] if trace else 1.0
    return RunResult(np.zeros(7), k if final is None else final, 100, trace, "budget")


def test_daily_from_cumulative():
    assert daily_from_cumulative([0, 1, 3, 6]).tolist() == [1, 2, 3]
    assert daily_from_cumulative([5, 5, 5]).tolist() == [0, 0]
    assert daily_from_cumulative([5, 4, 6]).tolist() == [0, 2]


def test_round_trip_recovers_cumulative():
    rng = np.random.default_rng(0)
    c = np.cumsum(rng.integers(0, 100, 50))
    d = daily_from_cumulative(c)
    assert np.array_equal(c[0] + np.concatenate(([0], np.cumsum(d))), c)


def test_trailing_mean():
    assert np.allclose(trailing_mean(np.full(20, 4.0)), 4.0)
    x = np.arange(10.0)
    out = trailing_mean(x, 7)
    for i in range(10):
        assert out[i] == pytest.approx(x[max(0, i - 6): i + 1].mean())


def test_constant_cumulative_is_degenerate():
    d = daily_from_cumulative([7] * 10)
    assert to_cdf(d).degenerate


def test_ingest_toy(tmp_path):
    p = tmp_path / "toy.csv"
    dates = toy_jhu(p, [0, 1, 3, 6])
    got = ingest_cumulative_csv(p, "Toyland", dates[0], dates[2], window=1)
    assert got.tolist() == [1, 2, 3]
    with pytest.raises(ValueError):
        ingest_cumulative_csv(p, "Nowhere", dates[0], dates[2])
    with pytest.raises(ValueError):
        ingest_cumulative_csv(p, "Toyland", dates[0], dates[3])


def test_fixture_provinces_summed():
    dates, total = load_cumulative(fixture_path(), "Testland")
    with open(fixture_path(), newline="") as fh:
        rows = [r for r in csv.reader(fh) if r[1] == "Testland"]
    assert len(rows) == 2
    assert total[-1] == sum(float(r[-1]) for r in rows)


def test_fixture_south_africa_window():
    s = ingest_cumulative_csv(fixture_path(), "South Africa", "2020-06-16", "2020-09-06")
    assert len(s) == 83
    assert s.min() >= 0 and not to_cdf(s).degenerate


def test_success_at_and_monotone():
    runs = [result([(5, 0.0)]), result([(5, 0.015)]), result([(5, 0.3)])]
    assert success_at(runs, 0.98) == pytest.approx(2 / 3)
    assert success_at(runs, 0.99) == pytest.approx(1 / 3)
    assert success_at([result([(1, 0.0)])] * 4, 0.99) == 1.0
    with pytest.raises(ValueError):
        success_at(runs, 1.0)


def test_speedup_examples():
    base = [result([(1, 0.5), (1000, 0.0)])]
    fast = [result([(1, 0.5), (250, 0.0)])]
    assert speedup(fast, base, 0.98) == pytest.approx(4.0)
    assert speedup(base, base, 0.98) == 1.0
    never = [result([(1, 0.5)])]
    assert speedup(never, base, 0.98) == 0.0
    assert speedup(fast, never, 0.98) is None


@settings(max_examples=100, deadline=None)
@given(hst.lists(hst.lists(hst.tuples(hst.integers(1, 2000), hst.floats(0, 1)), min_size=1, max_size=6),
                 min_size=1, max_size=8))
def test_metric_properties(traces):
    runs = []
    for t in traces:
        t = sorted(t)
        mono, best = [], 2.0
        for e, k in t:
            if k < best:
                mono.append((e, k))
                best = k
        runs.append(result(mono))
    assert success_at(runs, 0.99) <= success_at(runs, 0.98)
    if mean_evaluations_to(runs, 0.98) is not None:
        assert speedup(runs, runs, 0.98) == pytest.approx(1.0)


def test_draw_theta_star_spreads():
    for r in range(5):
        th = draw_theta_star(np.random.default_rng(r), SIM)
        assert simulate(th, SIM, 0)[1:].sum() >= SIM.initial_infected


def test_sanity_self_target_zero():
    th = draw_theta_star(np.random.default_rng(1), SIM)
    target = simulate(th, SIM, 0)
    assert not is_degenerate(target, 10)
    from abmcal.framework import evaluate_candidate
    assert evaluate_candidate(th, to_cdf(target), FrameworkConfig(simulation=SIM), 0).ksts == 0.0


def test_sanity_rejects_degenerate_truth():
    th = np.array([0.0, 0.5, 0.1, 10, 5, 0.5, 0.01])
    with pytest.raises(DegenerateTarget):
        sanity_check(th, FrameworkConfig(simulation=SIM))


def test_one_parameter_sanity_l2_small():
    th = draw_theta_star(np.random.default_rng(3), SIM)
    cfg = FrameworkConfig(abm_min_budget=50, abm_max_budget=250, batch_size=25, simulation=SIM,
                          calibrate=["transmission_probability"], fixed_values=th.tolist())
    rep = sanity_check(th, cfg)
    assert rep.ksts <= 0.01
    # only beta is free, so the L2 gap is the beta gap
    assert rep.l2 == pytest.approx(abs(rep.result.optimal[0] - th[0]))
    assert rep.l2 < 0.2


def tiny_spec(**kw):
    tmpl = FrameworkConfig(abm_min_budget=20, abm_max_budget=40, batch_size=10, simulation=SIM,
                           ks_threshold=1e-9).to_dict()
    base = dict(n_repeats=2, dims=[1], grid=[["RandomBaseline", None], ["DYCORS", "dt"]],
                template=tmpl, seed=0)
    base.update(kw)
    return ExperimentSpec(**base)


def test_single_cell_report():
    rep = run_benchmark(tiny_spec(n_repeats=1, grid=[["RandomBaseline", None]]))
    assert list(rep.cells) == [cell_key("RandomBaseline", None, ["transmission_probability"])]


def test_report_matches_brute_force(tmp_path):
    spec = tiny_spec()
    rep = run_benchmark(spec)
    base = rep.cells["RandomBaseline|-|1"]
    dyc = rep.cells["DYCORS|DecisionTree|1"]
    assert base["speedup"]["0.98"] in (1.0, None)
    for cell in (base, dyc):
        runs = cell["results"]
        assert cell["mean_ksts"] == pytest.approx(np.mean([r.optimal_ksts for r in runs]))
        for lvl in (0.98, 0.99):
            hits = [r.optimal_ksts <= 1 - lvl for r in runs]
            assert cell["success"][str(lvl)] == pytest.approx(np.mean(hits))
        l2 = [abs(r.optimal[0] - t[0]) for r, t in zip(runs, cell["thetas"])]
        assert cell["mean_l2"] == pytest.approx(np.mean(l2))
    rep.write(tmp_path)
    for name in ("report.json", "standardized_l2.csv", "ksts.csv", "success_speedup.csv"):
        assert (tmp_path / name).exists()
    d = json.loads((tmp_path / "report.json").read_text())
    assert set(d["cells"]) == set(rep.cells)
    rows = list(csv.reader(open(tmp_path / "success_speedup.csv")))
    assert rows[0] == ["strategy", "surrogate", "parameters", "success@98", "success@99",
                       "speedup@98", "speedup@99"]


def test_named_subsets_keyed_apart():
    a = cell_key("MSRS", "svm", ["transmission_probability", "interaction_radius"])
    b = cell_key("MSRS", "svm", ["transmission_probability", "speed"])
    assert a != b
    assert cell_key("MSRS", "svm", ["transmission_probability"]) == "MSRS|svm|1"


def test_spec_validation():
    with pytest.raises(ValueError):
        ExperimentSpec(n_repeats=0)
    with pytest.raises(ValueError):
        ExperimentSpec(grid=[])
    with pytest.raises(ValueError):
        ExperimentSpec().dim_names(8)


def test_write_cdf_csv(tmp_path):
    p = tmp_path / "cdf.csv"
    write_cdf_csv(p, [1, 2, 3])
    lines = p.read_text().splitlines()
    assert lines[0] == "day,scaled_cumulative"
    assert float(lines[-1].split(",")[1]) == 1.0
