"""Command-line entry point: ``abmcal <subcommand> ...``."""
from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from .abm import SimulationConfig, simulate, write_series_csv, read_series_csv
from .framework import FrameworkConfig, run
from .harness import ExperimentSpec, ingest_cumulative_csv, run_benchmark, sanity_check, write_cdf_csv

log = logging.getLogger("abmcal")


def _reals(values) -> list[float]:
    out = []
    for v in values:
        out.extend(float(x) for x in str(v).split(",") if x.strip())
    return out


def _load_config(args) -> FrameworkConfig:
    cfg = FrameworkConfig.from_json(args.config)
    over = {}
    if args.seed is not None:
        over["seed"] = args.seed
    if args.jobs is not None:
        over["jobs"] = args.jobs
    if over:
        cfg = FrameworkConfig.from_dict({**cfg.to_dict(), **over})
    return cfg


def cmd_simulate(args):
    params = _reals(args.params)
    sim = SimulationConfig(population=args.population, initial_infected=args.initial_infected,
                           days=args.days)
    log.info("simulate params=%s config=%s seed=%d", params, sim.to_dict(), args.seed)
    write_series_csv(args.out, simulate(np.array(params), sim, args.seed))


def cmd_calibrate(args):
    cfg = _load_config(args)
    result = run(cfg, read_series_csv(args.target))
    result.to_json(args.out)
    if args.db:
        result.db.to_csv(args.db)
    if args.cdf:
        best = simulate(result.optimal, cfg.simulation, cfg.simulation_seed)
        write_cdf_csv(args.cdf, best)
    log.info("optimal ksts=%.4f after %d evaluations (%s)",
             result.optimal_ksts, result.evaluations_used, result.stop_reason)


def cmd_sanity(args):
    cfg = _load_config(args)
    report = sanity_check(np.array(_reals(args.theta_star)), cfg)
    with open(args.out, "w") as fh:
        json.dump(report.to_dict(), fh, indent=2)
    log.info("standardized L2=%.4f ksts=%.4f", report.l2, report.ksts)


def cmd_ingest(args):
    series = ingest_cumulative_csv(args.csv, args.region, args.date_from, args.date_to, args.window)
    write_series_csv(args.out, series)
    log.info("ingest region=%s from=%s to=%s window=%d: wrote %d days",
             args.region, args.date_from, args.date_to, args.window, len(series))


def cmd_benchmark(args):
    spec = ExperimentSpec.from_json(args.spec)
    if args.jobs is not None:
        spec.template = {**spec.template, "jobs": args.jobs}
    log.info("benchmark spec: %s", json.dumps(spec.to_dict(), sort_keys=True))
    report = run_benchmark(spec)
    report.write(args.out)
    log.info("benchmark finished in %.1fs", report.wall_seconds)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="abmcal", description="Calibrate the SIR agent-based model.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run the ABM once and write its daily series")
    s.add_argument("--params", required=True, nargs="+", help="7 comma-separated reals")
    s.add_argument("--days", type=int, default=41)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--population", type=int, default=1000)
    s.add_argument("--initial-infected", type=int, default=10)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    for name, func, hlp in (("calibrate", cmd_calibrate, "calibrate against a target series"),
                            ("sanity-check", cmd_sanity, "recover known parameters from synthetic data")):
        c = sub.add_parser(name, help=hlp)
        c.add_argument("--config", required=True, help="run-config JSON")
        c.add_argument("--out", required=True)
        c.add_argument("--seed", type=int, default=None, help="override the config seed")
        c.add_argument("--jobs", type=int, default=None, help="concurrent ABM evaluations")
        if name == "calibrate":
            c.add_argument("--target", required=True, help="day,new_infections CSV")
            c.add_argument("--db", help="also write the ground-truth database CSV")
            c.add_argument("--cdf", help="also write day,scaled_cumulative for the optimum")
        else:
            c.add_argument("--theta-star", required=True, nargs="+", help="7 comma-separated reals")
        c.set_defaults(func=func)

    i = sub.add_parser("ingest", help="JHU cumulative cases -> smoothed daily target")
    i.add_argument("--csv", required=True)
    i.add_argument("--region", required=True)
    i.add_argument("--from", dest="date_from", required=True, help="YYYY-MM-DD")
    i.add_argument("--to", dest="date_to", required=True, help="YYYY-MM-DD")
    i.add_argument("--window", type=int, default=7, help="trailing moving-average length (1 = none)")
    i.add_argument("--out", required=True)
    i.set_defaults(func=cmd_ingest)

    b = sub.add_parser("benchmark", help="run an experiment grid")
    b.add_argument("--spec", required=True, help="experiment-spec JSON")
    b.add_argument("--out", required=True, help="output directory")
    b.add_argument("--jobs", type=int, default=None)
    b.set_defaults(func=cmd_benchmark)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        args.func(args)
    except (ValueError, OSError, KeyError) as exc:
        log.error("%s", exc)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
