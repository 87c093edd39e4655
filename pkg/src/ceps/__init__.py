"""Parallel algorithm portfolio construction for TSP and VRPSPDTW via
co-evolution of a configuration population and an instance population."""

from ceps.configurator import TuneBudget, TuneObjective, sample_configurations, tune
from ceps.coevolution import (
    AuditLog,
    CepsSettings,
    ConstructionResult,
    InstancePool,
    PoolMember,
    evolve_configs,
    evolve_instances,
    greedy_init,
    run_baseline,
    run_ceps,
)
from ceps.core import (
    Configuration,
    ParameterSpace,
    Portfolio,
    RunCache,
    RunOutcome,
    portfolio_score,
    set_score,
)
from ceps.harness import (
    EvaluationReport,
    ExperimentSpec,
    estimate_budget,
    evaluate_portfolio,
    run_experiment,
    split_train_test,
)
from ceps.problems import Runner, TspProblem, VrpProblem, make_problem

__version__ = "0.1.0"

__all__ = [
    "AuditLog",
    "CepsSettings",
    "Configuration",
    "ConstructionResult",
    "EvaluationReport",
    "ExperimentSpec",
    "InstancePool",
    "ParameterSpace",
    "PoolMember",
    "Portfolio",
    "RunCache",
    "RunOutcome",
    "Runner",
    "TspProblem",
    "TuneBudget",
    "TuneObjective",
    "VrpProblem",
    "estimate_budget",
    "evaluate_portfolio",
    "evolve_configs",
    "evolve_instances",
    "greedy_init",
    "make_problem",
    "portfolio_score",
    "run_baseline",
    "run_ceps",
    "run_experiment",
    "sample_configurations",
    "set_score",
    "split_train_test",
    "tune",
]
