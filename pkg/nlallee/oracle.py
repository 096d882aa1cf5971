"""
Reference solvers for the local bistable equation rho_t = d rho_xx + rho (rho - theta0)(1 - rho)
and the scalar comparison ODEs.
"""
import logging
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional

import numpy as np
from scipy.integrate import solve_ivp, trapezoid
from scipy.stats import linregress

from nlallee.errors import BoundaryContamination, DomainError, FrontNotFound, MissingRecord
from nlallee.experiments import OutcomeLabel, label_from_masses
from nlallee.integrate import BLOWUP_FACTOR, IntegratorConfig, SolverStats, integrate_system
from nlallee.operators import NeumannOperators

logger = logging.getLogger(__name__)

#: Fronts closer than this many cells to either boundary are rejected.
FRONT_GUARD_CELLS = 10


@dataclass(frozen=True)
class BistableParams:
    d: float = 1.0
    theta0: float = 0.25

    def __post_init__(self):
        if not self.d > 0:
            raise DomainError(f"Diffusion d must be positive, got {self.d}.")
        if not self.theta0 < 1:
            raise DomainError(f"Allee threshold theta0 must be below 1, got {self.theta0}.")


@dataclass
class LocalTrajectory:
    x: np.ndarray
    times: List[float] = field(default_factory=list)
    profiles: List[np.ndarray] = field(default_factory=list)
    mass_series: List[float] = field(default_factory=list)
    stats: SolverStats = field(default_factory=SolverStats)

    @property
    def dx(self):
        return self.x[1] - self.x[0]

    @property
    def t_end(self):
        return self.times[-1]

    def mass_at(self, t: float) -> float:
        index = int(np.argmin(np.abs(np.asarray(self.times) - t)))
        if not np.isclose(self.times[index], t, rtol=1e-9, atol=1e-12):
            raise MissingRecord(f"No local record at t={t:g}.")
        return self.mass_series[index]


def solve_local_1d(
    p: BistableParams,
    rho0,
    x_lo: float,
    x_hi: float,
    cfg: IntegratorConfig,
) -> LocalTrajectory:
    """Method-of-lines solve with the same Neumann stencil and stepper as the structured model."""
    rho0 = np.asarray(rho0, dtype=float)
    if rho0.ndim != 1 or len(rho0) < 3:
        raise DomainError("rho0 must be a 1D array with at least 3 nodes.")
    if np.any(rho0 < 0):
        raise DomainError("rho0 must be nonnegative.")

    x = np.linspace(x_lo, x_hi, len(rho0))
    ops = NeumannOperators(len(rho0), x[1] - x[0])
    traj = LocalTrajectory(x=x)

    def fun(t, rho):
        return p.d * ops.laplacian(rho) + rho * (rho - p.theta0) * (1.0 - rho)

    def observe(t, rho):
        traj.times.append(t)
        traj.profiles.append(rho.copy())
        traj.mass_series.append(float(trapezoid(rho, dx=ops.h)))

    ceiling = BLOWUP_FACTOR * max(float(rho0.max()), 1.0)
    dt_max = 0.9 * ops.h ** 2 / (2.0 * p.d)
    if cfg.dt_max is not None:
        dt_max = min(dt_max, cfg.dt_max)
    traj.stats = integrate_system(fun, rho0, cfg, dt_max=dt_max, ceiling=ceiling, observer=observe)
    logger.debug(
        "solve_local_1d: theta0=%g, %d accepted / %d rejected steps",
        p.theta0,
        traj.stats.accepted,
        traj.stats.rejected,
    )
    return traj


class FrontSpeedEstimate(NamedTuple):
    speed: float
    level: float
    fit_window: tuple
    r_squared: float
    intercept: float


def front_position(x, rho, level: float = 0.5) -> float:
    """Rightmost x where rho crosses `level`, by linear interpolation between nodes."""
    above = np.nonzero(rho >= level)[0]
    if len(above) == 0:
        raise FrontNotFound(f"profile never reaches level {level:g}")
    i = int(above[-1])
    n = len(rho)
    if i < FRONT_GUARD_CELLS or i >= n - 1 - FRONT_GUARD_CELLS:
        raise BoundaryContamination(
            f"front at node {i} is within {FRONT_GUARD_CELLS} cells of the boundary"
        )
    fraction = (rho[i] - level) / (rho[i] - rho[i + 1])
    return float(x[i] + fraction * (x[i + 1] - x[i]))


def measure_front_speed(traj: LocalTrajectory, level: float = 0.5, t_from: Optional[float] = None) -> FrontSpeedEstimate:
    """Least-squares slope of the front position over the last half of the trajectory (or from `t_from`)."""
    times = np.asarray(traj.times)
    t_from = 0.5 * traj.t_end if t_from is None else t_from
    window = times >= t_from - 1e-12
    if window.sum() < 3:
        raise DomainError("Front-speed fit needs at least 3 records in the fit window.")

    positions = []
    for t, rho in zip(times[window], np.asarray(traj.profiles)[window]):
        try:
            positions.append(front_position(traj.x, rho, level))
        except FrontNotFound as exc:
            raise FrontNotFound(str(exc), t=float(t))
        except BoundaryContamination as exc:
            raise BoundaryContamination(str(exc), t=float(t))

    fit = linregress(times[window], positions)
    return FrontSpeedEstimate(
        speed=float(fit.slope),
        level=level,
        fit_window=(float(times[window][0]), float(times[window][-1])),
        r_squared=float(fit.rvalue ** 2),
        intercept=float(fit.intercept),
    )


def plateau(x, x_edge: float):
    """Unit plateau left of x_edge, zero to the right."""
    return np.where(x <= x_edge, 1.0, 0.0)


def run_front_speed(
    p: BistableParams,
    x_lo: float = -200.0,
    x_hi: float = 200.0,
    nx: int = 2001,
    t_end: float = 120.0,
    plateau_width: float = 20.0,
    level: float = 0.5,
) -> FrontSpeedEstimate:
    """
    Measure the spreading speed from a unit plateau against the left boundary.

    The Neumann boundary makes this the right half of a symmetric plateau of
    width 2 * plateau_width, and leaves the whole domain for the front to travel.
    """
    x = np.linspace(x_lo, x_hi, nx)
    cfg = IntegratorConfig(t_end=t_end, n_records=int(round(t_end)))
    traj = solve_local_1d(p, plateau(x, x_lo + plateau_width), x_lo, x_hi, cfg)
    estimate = measure_front_speed(traj, level)
    logger.info("front speed theta0=%g: %.6g (r^2=%.6f)", p.theta0, estimate.speed, estimate.r_squared)
    return estimate


def hair_trigger_probe(
    p: BistableParams,
    amplitude: float,
    width: float,
    t_end: float = 200.0,
    x_lo: float = -60.0,
    x_hi: float = 60.0,
    nx: int = 601,
) -> OutcomeLabel:
    """Solve from a centered bump and label the outcome with the same mass criteria as the structured model."""
    if not amplitude > 0 or not width > 0:
        raise DomainError(f"amplitude and width must be positive, got {amplitude}, {width}.")
    x = np.linspace(x_lo, x_hi, nx)
    rho0 = amplitude * np.where(np.abs(x) < 0.5 * width, 1.0, 0.0)
    if not rho0.any():
        raise DomainError(f"bump of width {width} covers no grid node.")
    traj = solve_local_1d(p, rho0, x_lo, x_hi, IntegratorConfig(t_end=t_end, n_records=20))
    n_half, n_end = traj.mass_at(0.5 * t_end), traj.mass_at(t_end)
    return OutcomeLabel(label_from_masses(n_half, n_end, x_hi - x_lo), n_half, n_end)


class ComparisonPath(NamedTuple):
    t: np.ndarray
    y: np.ndarray


def solve_comparison_ode(kind: str, y0: float, t_end: float, theta0: float = None, n_points: int = 201) -> ComparisonPath:
    """
    Scalar comparison dynamics.

    logistic_square: y' = y^2 (1 - y)
    bistable:        y' = y (y - theta0)(1 - y)
    """
    if y0 < 0:
        raise DomainError(f"y0 must be nonnegative, got {y0}.")
    if kind == "logistic_square":
        def fun(t, y):
            return y ** 2 * (1.0 - y)
    elif kind == "bistable":
        if theta0 is None:
            raise DomainError("bistable comparison ODE needs theta0.")

        def fun(t, y):
            return y * (y - theta0) * (1.0 - y)
    else:
        raise DomainError(f"Unknown comparison ODE '{kind}'.")

    t_eval = np.linspace(0.0, t_end, n_points)
    sol = solve_ivp(fun, (0.0, t_end), [y0], method="DOP853", t_eval=t_eval, rtol=1e-10, atol=1e-12)
    return ComparisonPath(sol.t, sol.y[0])


class LocalRegime(NamedTuple):
    outcome: str
    allee_effect: str
    front: str


def local_regime(theta0: float) -> LocalRegime:
    """Outcome, Allee-effect strength and front nature of the local bistable equation."""
    if not theta0 < 1:
        raise DomainError(f"theta0 must be below 1, got {theta0}.")
    if theta0 <= -1:
        return LocalRegime("P.", "No A. E.", "Pulled")
    if theta0 <= -0.5:
        return LocalRegime("P.", "Weak A. E.", "Pulled")
    if theta0 <= 0:
        return LocalRegime("P.", "Weak A. E.", "Pushed")
    if theta0 < 0.5:
        return LocalRegime("E. or P.", "Strong A. E.", "Pushed")
    return LocalRegime("E.", "Strong A. E.", "Pushed")


def expected_front_speed(p: BistableParams) -> float:
    """Minimal front speed: 2 sqrt(-theta0 d) when pulled, sqrt(2d)(1/2 - theta0) when pushed, 0 once theta0 >= 1/2."""
    if p.theta0 >= 0.5:
        return 0.0
    if p.theta0 <= -0.5:
        return float(2.0 * np.sqrt(-p.theta0 * p.d))
    return float(np.sqrt(2.0 * p.d) * (0.5 - p.theta0))
