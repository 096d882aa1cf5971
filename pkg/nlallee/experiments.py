"""
Numerical experiments on the structured model: initial data, outcome labels,
the (alpha, L) phase diagram and the initial-trait scan.
"""
import enum
import logging
import multiprocessing
import time
import warnings
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence

import numpy as np
from scipy.integrate import trapezoid

from nlallee.errors import DomainError, NlAlleeError
from nlallee.grid import Grid, GridSpec
from nlallee.integrate import IntegratorConfig, Trajectory, solve
from nlallee.model import ModelParams, StateField

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class InitialCondition:
    kind: str = "uniform"
    L: float = 20.0
    theta_tilde: Optional[float] = None
    sigma: float = 0.1
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in ("uniform", "gaussian"):
            raise DomainError(f"Initial condition kind must be 'uniform' or 'gaussian', got '{self.kind}'.")
        if not self.L > 0:
            raise DomainError(f"Support length L must be positive, got {self.L}.")
        if not self.scale > 0:
            raise DomainError(f"scale must be positive, got {self.scale}.")
        if self.kind == "gaussian":
            if self.theta_tilde is None:
                raise DomainError("A gaussian initial condition needs theta_tilde.")
            if not self.sigma > 0:
                raise DomainError(f"sigma must be positive, got {self.sigma}.")

    @classmethod
    def uniform(cls, L: float, scale: float = 1.0) -> "InitialCondition":
        return cls(kind="uniform", L=L, scale=scale)

    @classmethod
    def gaussian(cls, L: float, theta_tilde: float, sigma: float = 0.1, scale: float = 1.0) -> "InitialCondition":
        return cls(kind="gaussian", L=L, theta_tilde=theta_tilde, sigma=sigma, scale=scale)


def spatial_indicator(grid: Grid, L: float):
    """Indicator of (-L/2, L/2) on the x nodes, 1/2 on a node lying exactly at an edge."""
    distance = np.abs(grid.x) - 0.5 * L
    tol = 1e-9 * grid.dx
    indicator = np.where(distance < -tol, 1.0, 0.0)
    indicator[np.abs(distance) <= tol] = 0.5
    return indicator


def trait_profile(initial: InitialCondition, grid: Grid, params: ModelParams):
    """Trait profile whose trapezoidal integral over the trait interval is 1."""
    if initial.kind == "uniform":
        return np.full(grid.ntheta, params.uniform_density)
    if not params.theta_min < initial.theta_tilde < params.theta_max:
        raise DomainError(
            f"theta_tilde={initial.theta_tilde} must lie strictly inside "
            f"({params.theta_min}, {params.theta_max})."
        )
    profile = np.exp(-((grid.theta - initial.theta_tilde) ** 2) / (2.0 * initial.sigma ** 2))
    return profile / trapezoid(profile, dx=grid.dtheta)


def build_initial(initial: InitialCondition, grid: Grid, params: ModelParams) -> StateField:
    if initial.L > grid.length:
        raise DomainError(f"Support length L={initial.L} exceeds the domain length {grid.length}.")
    u0 = initial.scale * np.outer(spatial_indicator(grid, initial.L), trait_profile(initial, grid, params))
    return StateField(t=0.0, u=u0, params=params, grid=grid)


class OutcomeKind(enum.Enum):
    PERSISTENCE = "Persistence"
    PROBABLE_PERSISTENCE = "ProbablePersistence"
    PROBABLE_EXTINCTION = "ProbableExtinction"
    EXTINCTION = "Extinction"
    INDETERMINATE = "Indeterminate"

    @property
    def is_extinction(self):
        return self in (OutcomeKind.EXTINCTION, OutcomeKind.PROBABLE_EXTINCTION)

    @property
    def is_persistence(self):
        return self in (OutcomeKind.PERSISTENCE, OutcomeKind.PROBABLE_PERSISTENCE)


@dataclass(frozen=True)
class OutcomeLabel:
    label: OutcomeKind
    n_half: float = float("nan")
    n_end: float = float("nan")
    note: str = ""

    def __str__(self):
        return self.label.value


def label_from_masses(n_half: float, n_end: float, domain_len: float) -> OutcomeKind:
    if n_end > domain_len - 1.0:
        return OutcomeKind.PERSISTENCE
    if n_end < 1.0:
        return OutcomeKind.EXTINCTION
    if n_end > n_half:
        return OutcomeKind.PROBABLE_PERSISTENCE
    # ties go to the extinction side
    return OutcomeKind.PROBABLE_EXTINCTION


def classify_outcome(traj: Trajectory, domain_len: float) -> OutcomeLabel:
    """Label a trajectory from N(T/2) and N(T); raises MissingRecord if T/2 was not recorded."""
    t_end = traj.t_end
    n_end = traj.mass_at(t_end)
    n_half = traj.mass_at(0.5 * t_end)
    return OutcomeLabel(label_from_masses(n_half, n_end, domain_len), n_half, n_end)


@dataclass(frozen=True)
class SimulationConfig:
    grid: GridSpec = field(default_factory=GridSpec)
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)


def simulate(params: ModelParams, initial: InitialCondition, sim_cfg: SimulationConfig) -> Trajectory:
    """build_initial followed by solve."""
    cfg = sim_cfg.integrator
    times = cfg.times()
    if not np.any(np.isclose(times, 0.5 * cfg.t_end, rtol=1e-9, atol=1e-12)):
        warnings.warn(
            f"record times do not contain T/2={0.5 * cfg.t_end:g}; the run cannot be classified.",
            UserWarning,
        )
    grid = sim_cfg.grid.build(params)
    return solve(build_initial(initial, grid, params), cfg)


@dataclass(frozen=True)
class CellResult:
    alpha: float
    L: float
    outcome: OutcomeLabel
    wall_ms: float


def _run_cell(params: ModelParams, initial: InitialCondition, sim_cfg: SimulationConfig) -> CellResult:
    started = time.perf_counter()
    # trajectories are only needed for their mass series here
    lean = SimulationConfig(
        grid=sim_cfg.grid,
        integrator=_without_snapshots(sim_cfg.integrator),
    )
    try:
        traj = simulate(params, initial, lean)
        outcome = classify_outcome(traj, lean.grid.x_hi - lean.grid.x_lo)
    except NlAlleeError as exc:
        logger.warning("cell alpha=%g L=%g failed: %s", params.alpha, initial.L, exc)
        outcome = OutcomeLabel(OutcomeKind.INDETERMINATE, note=f"{type(exc).__name__}: {exc}")
    wall_ms = 1e3 * (time.perf_counter() - started)
    logger.info("cell alpha=%g L=%g: %s (%.0f ms)", params.alpha, initial.L, outcome, wall_ms)
    return CellResult(params.alpha, initial.L, outcome, wall_ms)


def _without_snapshots(cfg: IntegratorConfig) -> IntegratorConfig:
    if not cfg.keep_snapshots:
        return cfg
    return replace(cfg, keep_snapshots=False)


def _run_cells(tasks, workers: int) -> List[CellResult]:
    if workers <= 1 or len(tasks) <= 1:
        return [_run_cell(*task) for task in tasks]
    with multiprocessing.Pool(processes=min(workers, len(tasks))) as pool:
        return pool.starmap(_run_cell, tasks)


@dataclass
class SweepResult:
    alpha_values: List[float]
    L_values: List[float]
    labels: List[List[OutcomeLabel]]
    wall_ms: List[List[float]]

    def __post_init__(self):
        if len(self.labels) != len(self.alpha_values) or any(
            len(row) != len(self.L_values) for row in self.labels
        ):
            raise DomainError("Sweep label matrix does not match its axes.")

    def label_matrix(self):
        """Matrix of label names, rows indexed by alpha and columns by L."""
        return [[outcome.label.value for outcome in row] for row in self.labels]

    def records(self):
        for i, alpha in enumerate(self.alpha_values):
            for j, L in enumerate(self.L_values):
                outcome = self.labels[i][j]
                yield {
                    "alpha": alpha,
                    "L": L,
                    "label": outcome.label.value,
                    "N_half": outcome.n_half,
                    "N_end": outcome.n_end,
                    "wall_ms": self.wall_ms[i][j],
                }


def run_sweep(
    params_base: ModelParams,
    alpha_values: Sequence[float],
    L_values: Sequence[float],
    sim_cfg: SimulationConfig,
    workers: int = 1,
) -> SweepResult:
    """One uniform-indicator simulation per (alpha, L) cell, classified by its mass history."""
    alpha_values = [float(a) for a in alpha_values]
    L_values = [float(L) for L in L_values]
    if not alpha_values or not L_values:
        raise DomainError("Sweep ranges must be nonempty.")

    tasks = [
        (params_base.with_alpha(alpha), InitialCondition.uniform(L), sim_cfg)
        for alpha in alpha_values
        for L in L_values
    ]
    logger.info("sweep: %d cells on %d workers", len(tasks), workers)
    cells = _run_cells(tasks, workers)

    n_L = len(L_values)
    labels = [[cells[i * n_L + j].outcome for j in range(n_L)] for i in range(len(alpha_values))]
    wall_ms = [[cells[i * n_L + j].wall_ms for j in range(n_L)] for i in range(len(alpha_values))]
    return SweepResult(alpha_values, L_values, labels, wall_ms)


@dataclass(frozen=True)
class AlphaStarEstimate:
    alpha_star: float
    uncertainty: float


def estimate_alpha_star(result: SweepResult) -> Optional[AlphaStarEstimate]:
    """
    Smallest sampled alpha from which every larger sampled alpha goes (probably) extinct for every L.

    The uncertainty is the sampling step below the estimate. None if the
    largest sampled alpha still has a non-extinct cell.
    """
    order = np.argsort(result.alpha_values)
    alphas = [result.alpha_values[i] for i in order]
    extinct = [all(outcome.label.is_extinction for outcome in result.labels[i]) for i in order]

    first = None
    for k in range(len(alphas) - 1, -1, -1):
        if not extinct[k]:
            break
        first = k
    if first is None:
        return None
    if first > 0:
        step = alphas[first] - alphas[first - 1]
    elif len(alphas) > 1:
        step = alphas[1] - alphas[0]
    else:
        step = 0.0
    return AlphaStarEstimate(alphas[first], step)


@dataclass
class TraitScanResult:
    entries: List[tuple]
    threshold: Optional[float]
    control: Optional[OutcomeLabel] = None

    def records(self):
        for theta_tilde, outcome in self.entries:
            yield {
                "theta_tilde": theta_tilde,
                "label": outcome.label.value,
                "N_half": outcome.n_half,
                "N_end": outcome.n_end,
            }


def trait_threshold(entries) -> Optional[float]:
    """Midpoint between the last persistent theta_tilde and the first extinct one above it."""
    ordered = sorted(entries, key=lambda entry: entry[0])
    persistent = [theta for theta, outcome in ordered if outcome.label.is_persistence]
    if not persistent:
        return None
    last = persistent[-1]
    above = [theta for theta, outcome in ordered if theta > last and outcome.label.is_extinction]
    if not above:
        return None
    return 0.5 * (last + above[0])


def run_trait_scan(
    params_base: ModelParams,
    theta_tilde_values: Sequence[float],
    L: float,
    sigma: float,
    sim_cfg: SimulationConfig,
    workers: int = 1,
    control: bool = True,
) -> TraitScanResult:
    """Gaussian-in-trait simulations, one per theta_tilde, plus the uniform control at the same L."""
    theta_tilde_values = [float(t) for t in theta_tilde_values]
    if not theta_tilde_values:
        raise DomainError("Trait scan needs at least one theta_tilde.")
    for theta_tilde in theta_tilde_values:
        if not params_base.theta_min < theta_tilde < params_base.theta_max:
            raise DomainError(f"theta_tilde={theta_tilde} is outside the trait interval.")

    tasks = [(params_base, InitialCondition.gaussian(L, t, sigma), sim_cfg) for t in theta_tilde_values]
    if control:
        tasks.append((params_base, InitialCondition.uniform(L), sim_cfg))
    cells = _run_cells(tasks, workers)

    entries = [(t, cell.outcome) for t, cell in zip(theta_tilde_values, cells)]
    control_outcome = cells[-1].outcome if control else None
    return TraitScanResult(entries, trait_threshold(entries), control_outcome)
