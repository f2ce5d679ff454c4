"""Surrogate-assisted calibration of a continuous-space SIR agent-based model."""
from .abm import SimulationConfig, simulate
from .framework import FrameworkConfig, GroundTruthDB, RunResult, evaluate_candidate, run, select_optimal
from .ks import critical_value, ks_statistic, to_cdf
from .params import ParameterSpace, ParameterSpec, default_space, standardized_l2
from .strategies import StrategyConfig

__version__ = "0.1.0"
