"""Three-objective (cost, primary energy, CO2) dispatch optimization for CCHP systems."""

from .cchp import CaseMode, CCHPProblem, change_rates, objectives, reference_objectives, violations
from .evaluation import batch_run, hypervolume, spread, wilcoxon_signed_rank
from .moea import AlgorithmParams, best_compromise, evolve, nsga2_evolve
from .scenario import Scenario, builtin_scenario, load_scenario, parse_scenario

__all__ = [
    "AlgorithmParams",
    "CCHPProblem",
    "CaseMode",
    "Scenario",
    "batch_run",
    "best_compromise",
    "builtin_scenario",
    "change_rates",
    "evolve",
    "hypervolume",
    "load_scenario",
    "nsga2_evolve",
    "objectives",
    "parse_scenario",
    "reference_objectives",
    "spread",
    "violations",
    "wilcoxon_signed_rank",
]

__version__ = "0.1.0"
