"""Benefit-to-cost ratio optimization over mixed-integer programs.

The stack, bottom up: :mod:`bcropt.lp` (revised simplex), :mod:`bcropt.mip`
(branch-and-bound), :mod:`bcropt.fractional` (Dinkelbach iteration),
:mod:`bcropt.model` (the shelter capacity-expansion model) and
:mod:`bcropt.harness` (scenarios, sweeps, reports).
"""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .fractional import AffineForm, FractionalModel, RatioSolution, evaluate_ratio, maximize_ratio
from .generate import GeneratorConfig, generate_instance
from .harness import (Metrics, ScenarioResult, SolveSettings, compare_objectives, compute_metrics,
                      emit_report, run_scenario, sweep_cost, sweep_lambda, sweep_rho, sweep_scale)
from .instance import Instance, load_instance, opening_cost, partial_return, save_instance
from .lp import LinearProgram, LpSolution, ToleranceConfig, solve_lp
from .mip import MipConfig, MipSolution, MixedIntegerProgram, brute_force_solve, solve_mip
from .model import AssignmentPlan, BuiltModel, build_model, decode, encode, youth_benefit
