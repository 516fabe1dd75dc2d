"""Tamed Euler integration of SDEs with piecewise continuous arguments."""

__version__ = "0.1.0"

from sepca._backend import BACKEND
from sepca.harness import (
    ConvergenceReport,
    ExperimentConfig,
    MomentReport,
    ProblemSpec,
    estimate_mse,
    fit_order,
    moment_sweep,
    run_convergence_study,
)
from sepca.model import (
    EXPERIMENT_1,
    EXPERIMENT_2,
    AssumptionReport,
    PolynomialParams,
    SepcaProblem,
    check_assumptions,
    make_linear_problem,
    make_polynomial_problem,
)
from sepca.noise import BrownianGrid, coarsen, cumulative_value, derive_stream_seed, generate_fine_path
from sepca.oracle import ReferenceSolution, reference_solution, solve_gbm_on_path, solve_linear_pca_deterministic
from sepca.scheme import (
    Trajectory,
    delay_index,
    interpolate,
    simulate_explicit_euler,
    simulate_tamed,
    tame_drift,
    tamed_euler_step,
)

__all__ = [
    "BACKEND",
    "EXPERIMENT_1",
    "EXPERIMENT_2",
    "AssumptionReport",
    "BrownianGrid",
    "ConvergenceReport",
    "ExperimentConfig",
    "MomentReport",
    "PolynomialParams",
    "ProblemSpec",
    "ReferenceSolution",
    "SepcaProblem",
    "Trajectory",
    "check_assumptions",
    "coarsen",
    "cumulative_value",
    "delay_index",
    "derive_stream_seed",
    "estimate_mse",
    "fit_order",
    "generate_fine_path",
    "interpolate",
    "make_linear_problem",
    "make_polynomial_problem",
    "moment_sweep",
    "reference_solution",
    "run_convergence_study",
    "simulate_explicit_euler",
    "simulate_tamed",
    "solve_gbm_on_path",
    "solve_linear_pca_deterministic",
    "tame_drift",
    "tamed_euler_step",
]
