"""Top-level package for nlallee."""
# flake8: noqa

from nlallee.errors import (
    BlowUp,
    BoundaryContamination,
    ConfigError,
    DomainError,
    FrontNotFound,
    MissingRecord,
    NegativityBreach,
    NlAlleeError,
    NonConvergence,
    SignError,
    SolverError,
    StepUnderflow,
)
from nlallee.grid import Grid, GridSpec
from nlallee.model import ModelParams, StateField, integrate_mass, mean_trait, total_mass
from nlallee.integrate import IntegratorConfig, Trajectory, solve
from nlallee.spectral import EigenPair, check_eigenfunction_shape, lambda_bounds, solve_eigen
from nlallee.regimes import alpha_sharp, classify_regime, extinction_threshold, predict_outcome
from nlallee.experiments import (
    InitialCondition,
    OutcomeKind,
    OutcomeLabel,
    SimulationConfig,
    build_initial,
    classify_outcome,
    run_sweep,
    run_trait_scan,
)
from nlallee.monitor import MonitorOptions, run_monitors

import nlallee.util
