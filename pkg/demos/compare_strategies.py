"""
A small benchmark grid
======================

Three strategies, two free parameters, a handful of random truths.
The report directory holds the same tables the CLI's benchmark command
writes. Expect a few minutes on one core.
"""
import sys

from abmcal.abm import SimulationConfig
from abmcal.framework import FrameworkConfig
from abmcal.harness import ExperimentSpec, run_benchmark

template = FrameworkConfig(abm_min_budget=100, abm_max_budget=400, batch_size=50,
                           simulation=SimulationConfig(population=500))
spec = ExperimentSpec(
    n_repeats=3,
    dims=[["transmission_probability", "interaction_radius"]],
    grid=[["RandomBaseline", None], ["DYCORS", "gbt"], ["MSRS", "svm"]],
    template=template.to_dict(),
)
report = run_benchmark(spec)
for key, cell in report.cells.items():
    if "error" in cell:
        print(key, cell["error"])
        continue
    print(f"{key:>40s}  mean ksts {cell['mean_ksts']:.4f}  success@98 {cell['success']['0.98']:.2f}"
          f"  speedup@98 {cell['speedup']['0.98']}")
out = sys.argv[1] if len(sys.argv) > 1 else "benchmark-report"
report.write(out)
print("tables written to", out)
