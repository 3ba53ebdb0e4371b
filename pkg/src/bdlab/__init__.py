"""Numerical laboratory for two-species tissue growth under Brinkman flow.

Two cell populations share a velocity field derived from a common
pressure p = (u + v)^gamma.  With viscosity sigma > 0 the potential W
solves -sigma lap W + W = p (Brinkman); at sigma = 0 the velocity is
-grad p directly (Darcy).  The package simulates both on periodic
boxes, monitors the estimates that control the sigma -> 0 limit, and
ships an acceptance suite that measures those claims at desk scale.
"""

from .config import DEFAULT_CONFIG, ExperimentConfig, parse_config
from .diagnostics import (
    apriori_monitor,
    energy_ledger,
    sigma_sweep,
)
from .dynamics import (
    ModelParams,
    SimState,
    Trajectory,
    cfl_dt,
    register_reaction,
    run,
    step_brinkman,
    step_darcy,
)
from .elliptic import BrinkmanSolver, kernel_k_sigma, mollifier, solve_brinkman
from .errors import (
    BdlabError,
    ConfigError,
    DiagnosticsError,
    NumericsError,
    PositivityError,
    SnapshotError,
    StabilityError,
)
from .fields import gradient, laplacian, pressure_field, shift_modulus
from .grid import Grid, GridSpec, make_grid
from .presets import build_initial_state
from .regularized import RegParams, regularization_sweep, run_regularized, step_regularized
from .verification import run_acceptance

__version__ = "0.1.0"

__all__ = [
    "BdlabError",
    "BrinkmanSolver",
    "ConfigError",
    "DEFAULT_CONFIG",
    "DiagnosticsError",
    "ExperimentConfig",
    "Grid",
    "GridSpec",
    "ModelParams",
    "NumericsError",
    "PositivityError",
    "RegParams",
    "SimState",
    "SnapshotError",
    "StabilityError",
    "Trajectory",
    "apriori_monitor",
    "build_initial_state",
    "cfl_dt",
    "energy_ledger",
    "gradient",
    "kernel_k_sigma",
    "laplacian",
    "make_grid",
    "mollifier",
    "parse_config",
    "pressure_field",
    "register_reaction",
    "regularization_sweep",
    "run",
    "run_acceptance",
    "run_regularized",
    "shift_modulus",
    "sigma_sweep",
    "solve_brinkman",
    "step_brinkman",
    "step_darcy",
    "step_regularized",
    "__version__",
]
