"""Adaptive explicit time integration of the method-of-lines system."""
import logging
import math
import time
import warnings
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np

from nlallee.errors import BlowUp, DomainError, MissingRecord, NegativityBreach, StepUnderflow
from nlallee.model import StateField, boundary_excess, integrate_mass, rhs_array, total_mass

logger = logging.getLogger(__name__)

#: Blow-up is declared once max u exceeds this multiple of max(M, 1).
BLOWUP_FACTOR = 1e3

#: Accepted steps may not undershoot below -NEGATIVITY_FACTOR * atol.
NEGATIVITY_FACTOR = 1e3


@dataclass(frozen=True)
class IntegratorConfig:
    t_end: float = 400.0
    rtol: float = 1e-6
    atol: float = 1e-8
    dt_init: float = 1e-3
    dt_max: Optional[float] = None
    record_times: Tuple[float, ...] = ()
    n_records: int = 20
    keep_snapshots: bool = True
    debug: bool = False

    def __post_init__(self):
        if not self.t_end > 0:
            raise DomainError(f"t_end must be positive, got {self.t_end}.")
        if not self.atol > 0:
            raise DomainError(f"atol must be positive, got {self.atol}.")
        if not 0 < self.rtol < 1:
            raise DomainError(f"rtol must lie in (0, 1), got {self.rtol}.")
        if not self.dt_init > 0:
            raise DomainError(f"dt_init must be positive, got {self.dt_init}.")
        if self.dt_max is not None and not self.dt_max >= self.dt_init:
            raise DomainError(f"dt_max={self.dt_max} must be at least dt_init={self.dt_init}.")
        if self.n_records < 1:
            raise DomainError(f"n_records must be at least 1, got {self.n_records}.")
        if self.record_times:
            times = np.asarray(self.record_times, dtype=float)
            if np.any(np.diff(times) <= 0):
                raise DomainError("record_times must be strictly increasing.")
            if times[0] < 0 or times[-1] > self.t_end:
                raise DomainError(f"record_times must lie in [0, t_end={self.t_end}].")

    def times(self):
        """Record times, always ending at t_end; uniform over [0, t_end] when none were given."""
        if self.record_times:
            times = np.asarray(self.record_times, dtype=float)
            if times[-1] < self.t_end:
                times = np.append(times, self.t_end)
            return times
        return np.linspace(0.0, self.t_end, self.n_records + 1)


@dataclass
class SolverStats:
    accepted: int = 0
    rejected: int = 0
    rhs_evals: int = 0
    max_accepted_error: float = 0.0
    wall_seconds: float = 0.0


@dataclass
class Trajectory:
    times: List[float] = field(default_factory=list)
    snapshots: List[Optional[StateField]] = field(default_factory=list)
    mass_series: List[float] = field(default_factory=list)
    sup_series: List[float] = field(default_factory=list)
    min_series: List[float] = field(default_factory=list)
    stats: SolverStats = field(default_factory=SolverStats)

    def index_of(self, t: float) -> int:
        for index, recorded in enumerate(self.times):
            if math.isclose(recorded, t, rel_tol=1e-9, abs_tol=1e-12):
                return index
        raise MissingRecord(f"No record at t={t:g}.")

    def mass_at(self, t: float) -> float:
        return self.mass_series[self.index_of(t)]

    def snapshot_at(self, t: float) -> StateField:
        snapshot = self.snapshots[self.index_of(t)]
        if snapshot is None:
            raise MissingRecord(f"Record at t={t:g} kept no snapshot.")
        return snapshot

    @property
    def t_end(self):
        return self.times[-1]

    @property
    def final(self) -> Optional[StateField]:
        return self.snapshots[-1] if self.snapshots else None


class DormandPrince54:
    """
    Dormand-Prince 5(4) embedded pair, seven stages with first-same-as-last.

    The 5th order solution is propagated and the difference with the embedded
    4th order solution is the local error estimate. Step sizes follow the
    PI controller of Hairer, Norsett and Wanner (Solving ODEs I, II.4).
    """

    #intermediate evaluation times
    c = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)

    #butcher table
    a = (
        (),
        (1 / 5,),
        (3 / 40, 9 / 40),
        (44 / 45, -56 / 15, 32 / 9),
        (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
        (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
        (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
    )

    #coefficients for local truncation error estimate (5th minus 4th order weights)
    e = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)

    safety = 0.9
    beta = 0.04
    exponent = 0.2 - 0.75 * 0.04
    min_factor = 0.2
    max_factor = 10.0

    def step(self, fun, t, y, k1, h, atol, rtol):
        """One trial step; returns (y_new, k_last, error_norm)."""
        stages = [k1]
        for i in range(1, 7):
            increment = sum(coef * k for coef, k in zip(self.a[i], stages) if coef != 0.0)
            stages.append(fun(t + self.c[i] * h, y + h * increment))

        # FSAL: the last stage was evaluated at y_new
        b = self.a[6]
        y_new = y + h * sum(coef * k for coef, k in zip(b, stages) if coef != 0.0)
        error = h * sum(coef * k for coef, k in zip(self.e, stages) if coef != 0.0)

        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        error_norm = float(np.sqrt(np.mean((error / scale) ** 2)))
        return y_new, stages[-1], error_norm

    def accepted_factor(self, error_norm, previous_error):
        if error_norm == 0.0:
            return self.max_factor
        factor = self.safety * error_norm ** -self.exponent * previous_error ** self.beta
        return min(self.max_factor, max(self.min_factor, factor))

    def rejected_factor(self, error_norm):
        if not math.isfinite(error_norm):
            return self.min_factor
        return max(self.min_factor, min(1.0, self.safety * error_norm ** -self.exponent))


def integrate_system(
    fun: Callable,
    y0,
    cfg: IntegratorConfig,
    t0: float = 0.0,
    dt_max: Optional[float] = None,
    ceiling: float = math.inf,
    observer: Callable = None,
) -> SolverStats:
    """
    Integrate y' = fun(t, y) from t0 to cfg.t_end, landing exactly on every record time.

    `observer(t, y)` is called at each record time (including t0 when it is one).
    Values are never clipped inside the loop.
    """
    stepper = DormandPrince54()
    stats = SolverStats()
    started = time.perf_counter()

    dt_max = cfg.dt_max if dt_max is None else dt_max
    if dt_max is None:
        dt_max = cfg.t_end
    negativity_floor = -NEGATIVITY_FACTOR * cfg.atol
    step_floor = 1e-12 * cfg.t_end

    record_times = cfg.times()
    t = float(t0)
    y = np.array(y0, dtype=float)

    if observer is not None and np.any(np.isclose(record_times, t, rtol=0.0, atol=1e-12)):
        observer(t, y)

    k1 = fun(t, y)
    stats.rhs_evals += 1
    h = min(cfg.dt_init, dt_max)
    previous_error = 1e-4
    last_rejected = False

    for t_target in record_times[record_times > t + 1e-12]:
        while t < t_target:
            remaining = t_target - t
            landing = h >= remaining
            h_step = remaining if landing else h

            y_new, k_last, error_norm = stepper.step(fun, t, y, k1, h_step, cfg.atol, cfg.rtol)
            stats.rhs_evals += 6

            if error_norm <= 1.0:
                if cfg.debug:
                    logger.debug("accepted t=%.9g h=%.3g err=%.3g", t + h_step, h_step, error_norm)
                t = t_target if landing else t + h_step
                y_max = float(y_new.max())
                y_min = float(y_new.min())
                if not y_max <= ceiling:
                    raise BlowUp(f"max value {y_max:.6g} exceeds blow-up ceiling {ceiling:.6g}", t=t)
                if y_min < negativity_floor:
                    raise NegativityBreach(
                        f"min value {y_min:.6g} below {negativity_floor:.6g}", t=t
                    )

                y, k1 = y_new, k_last
                stats.accepted += 1
                stats.max_accepted_error = max(stats.max_accepted_error, error_norm)

                proposal = h_step * stepper.accepted_factor(error_norm, previous_error)
                if last_rejected:
                    proposal = min(proposal, h_step)
                if landing and h_step < h:
                    # truncated to hit a record time; do not let that shrink the next step
                    proposal = max(proposal, h)
                h = min(proposal, dt_max)
                previous_error = max(error_norm, 1e-4)
                last_rejected = False
            else:
                if cfg.debug:
                    logger.debug("rejected t=%.9g h=%.3g err=%.3g", t, h_step, error_norm)
                stats.rejected += 1
                h = h_step * stepper.rejected_factor(error_norm)
                last_rejected = True
                if h < step_floor:
                    raise StepUnderflow(f"step size {h:.3g} below {step_floor:.3g}", t=t)

        if observer is not None:
            observer(t, y)

    stats.wall_seconds = time.perf_counter() - started
    return stats


def cfl_ceiling(state: StateField) -> float:
    """0.9 * min(dx^2 / 2d, dtheta^2 / 2alpha), the safeguard step ceiling for the 2D system."""
    grid, params = state.grid, state.params
    return 0.9 * min(grid.dx ** 2 / (2.0 * params.d), grid.dtheta ** 2 / (2.0 * params.alpha))


def solve(initial: StateField, cfg: IntegratorConfig) -> Trajectory:
    """Integrate the structured model from `initial` and record N, sup u and snapshots."""
    params, grid = initial.params, initial.grid

    ceiling = cfl_ceiling(initial)
    dt_max = ceiling
    if cfg.dt_max is not None:
        if cfg.dt_max > ceiling:
            warnings.warn(
                f"dt_max={cfg.dt_max:g} is above the diffusion ceiling {ceiling:g}.",
                UserWarning,
            )
        dt_max = cfg.dt_max

    initial_mass = float(integrate_mass(initial).max())
    blowup = BLOWUP_FACTOR * max(initial_mass, 1.0)
    report_floor = -NEGATIVITY_FACTOR * cfg.atol

    trajectory = Trajectory()

    def fun(t, u):
        return rhs_array(u, params, grid)

    def observe(t, u):
        # clip small undershoots for reporting only
        reported = np.where((u < 0.0) & (u > report_floor), 0.0, u)
        state = initial.with_u(t, reported)
        trajectory.times.append(t)
        trajectory.mass_series.append(total_mass(state))
        trajectory.sup_series.append(float(u.max()))
        trajectory.min_series.append(float(u.min()))
        trajectory.snapshots.append(state if cfg.keep_snapshots else None)

    logger.info(
        "solve: grid %s, t_end=%g, alpha=%g, dt_max=%.3g", grid.shape, cfg.t_end, params.alpha, dt_max
    )
    trajectory.stats = integrate_system(
        fun, initial.u, cfg, t0=initial.t, dt_max=dt_max, ceiling=blowup, observer=observe
    )
    logger.info(
        "solve: done, %d accepted / %d rejected steps, %d RHS evaluations, %.2fs",
        trajectory.stats.accepted,
        trajectory.stats.rejected,
        trajectory.stats.rhs_evals,
        trajectory.stats.wall_seconds,
    )

    final = trajectory.final
    if final is not None:
        excess = boundary_excess(final)
        if excess > 1e-6:
            logger.warning(
                "solve: density %.3g within 5 cells of the x boundary at t=%g; "
                "the truncated domain may be too small",
                excess,
                final.t,
            )
    return trajectory
