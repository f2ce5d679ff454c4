"""
Fitting a national case curve
=============================

Turn cumulative confirmed cases into a smoothed daily series, then fit
all seven parameters with DYCORS and boosted trees. The bundled file is
a synthetic stand-in in the JHU CSSE layout; point ``--csv`` at the
real time series to use actual counts.
"""
import argparse
from importlib import resources

import numpy as np

from abmcal.abm import SimulationConfig, simulate
from abmcal.framework import FrameworkConfig, run
from abmcal.harness import ingest_cumulative_csv, write_cdf_csv
from abmcal.params import default_space

parser = argparse.ArgumentParser()
parser.add_argument("--csv", default=str(resources.files("abmcal") / "data" / "jhu_confirmed_fixture.csv"))
parser.add_argument("--budget", type=int, default=600)
args = parser.parse_args()

target = ingest_cumulative_csv(args.csv, "South Africa", "2020-06-16", "2020-09-06")
print(f"{len(target)} days, peak {target.max()} new cases on day {target.argmax()}")

config = FrameworkConfig(abm_min_budget=100, abm_max_budget=args.budget, batch_size=50,
                         strategy={"kind": "DYCORS"}, surrogate="gbt",
                         simulation=SimulationConfig(days=len(target)))
result = run(config, target)
print(f"best ksts {result.optimal_ksts:.4f} after {result.evaluations_used} runs")
for name, value in zip(default_space().names, result.optimal):
    print(f"{name:>26s} = {value:.4g}")

# plot-ready curves for the observed and the fitted series
write_cdf_csv("actual_cdf.csv", target)
write_cdf_csv("simulated_cdf.csv", simulate(result.optimal, config.simulation, config.simulation_seed))
print("wrote actual_cdf.csv and simulated_cdf.csv;",
      "trace:", [(e, round(k, 4)) for e, k in result.best_ksts_trace][-5:])
