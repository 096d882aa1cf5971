"""Checks of the a priori inequalities a trajectory of the structured model must respect."""
import enum
import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import pandas as pd

from nlallee.errors import DomainError
from nlallee.integrate import Trajectory
from nlallee.model import EPS_RHO, ModelParams
from nlallee.regimes import growth_rate_bound

logger = logging.getLogger(__name__)

CHECK_NAMES = (
    "positivity",
    "mass_ceiling",
    "late_mass_ceiling",
    "trait_monotonicity",
    "mean_trait_ceiling",
    "mean_trait_range",
    "growth_ceiling",
    "core_convergence",
)


@dataclass(frozen=True)
class MonitorOptions:
    #: Slack for monotonicity, mean-trait and growth checks.
    tol: float = 1e-6
    #: Ten times the integrator atol default.
    positivity_tol: float = 1e-7
    mass_tol: float = 1e-3
    late_tol: float = 1e-2
    late_fraction: float = 0.1
    late_min_t_end: float = 200.0
    eps_rho: float = EPS_RHO
    #: None detects M <= 1 and u0 nonincreasing in theta from the first snapshot.
    monotone_hypotheses: Optional[bool] = None
    core_L: Optional[float] = None
    core_tol: float = 1e-2
    core_profile_tol: float = 5e-2

    def __post_init__(self):
        if min(self.tol, self.positivity_tol, self.mass_tol, self.late_tol) < 0:
            raise DomainError("Monitor tolerances must be nonnegative.")
        if not 0 < self.late_fraction <= 1:
            raise DomainError(f"late_fraction must lie in (0, 1], got {self.late_fraction}.")


class CheckStatus(enum.Enum):
    PASS = "PASS"
    FAIL = "FAIL"
    SKIPPED = "SKIPPED"


@dataclass
class CheckResult:
    name: str
    status: CheckStatus
    worst_violation: float = 0.0
    time_of_worst: Optional[float] = None
    detail: str = ""


@dataclass
class MonitorReport:
    checks: List[CheckResult]
    options: MonitorOptions = field(default_factory=MonitorOptions)

    @property
    def passed(self):
        return all(check.status != CheckStatus.FAIL for check in self.checks)

    def __getitem__(self, name: str) -> CheckResult:
        for check in self.checks:
            if check.name == name:
                return check
        raise KeyError(name)

    def failures(self) -> List[CheckResult]:
        return [check for check in self.checks if check.status == CheckStatus.FAIL]

    def to_lines(self) -> List[str]:
        lines = []
        for check in self.checks:
            when = "-" if check.time_of_worst is None else f"{check.time_of_worst:.6g}"
            line = f"{check.name:<20} {check.status.value:<8} worst={check.worst_violation:.3g} t={when}"
            if check.detail:
                line += f"  {check.detail}"
            lines.append(line)
        return lines

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame.from_records(
            [
                {
                    "check": check.name,
                    "status": check.status.value,
                    "worst_violation": check.worst_violation,
                    "time_of_worst": check.time_of_worst,
                    "detail": check.detail,
                }
                for check in self.checks
            ],
            columns=["check", "status", "worst_violation", "time_of_worst", "detail"],
        )


class _Worst:
    """Running maximum of a violation and where it happened."""

    def __init__(self):
        self.value = 0.0
        self.t = None
        self.where = ""

    def update(self, value, t, where=""):
        if self.t is None or value > self.value:
            self.value = float(value)
            self.t = t
            self.where = where

    def result(self, name, tol, detail=""):
        status = CheckStatus.PASS if self.value <= tol else CheckStatus.FAIL
        if status == CheckStatus.FAIL and self.where:
            detail = f"{detail} {self.where}".strip()
        return CheckResult(name, status, max(self.value, 0.0), self.t, detail)


def _skipped(name, reason):
    return CheckResult(name, CheckStatus.SKIPPED, detail=reason)


def _hypotheses_hold(first, tol):
    rho0 = first.derived().rho
    return rho0.max() <= 1.0 + tol and bool(np.all(np.diff(first.u, axis=1) <= tol))


def run_monitors(traj: Trajectory, params: ModelParams, options: MonitorOptions = None) -> MonitorReport:
    """Evaluate every check on the recorded snapshots; failures are report entries, never exceptions."""
    options = MonitorOptions() if options is None else options
    snapshots = [state for state in traj.snapshots if state is not None]
    if not snapshots:
        raise DomainError("run_monitors needs a trajectory with snapshots.")

    first, last = snapshots[0], snapshots[-1]
    grid = first.grid
    derived = [state.derived() for state in snapshots]
    M = float(derived[0].rho.max())
    ceiling = max(M, 1.0)
    C = growth_rate_bound(params)
    t_end = last.t

    monotone = options.monotone_hypotheses
    if monotone is None:
        monotone = _hypotheses_hold(first, options.tol)

    positivity, mass, late, monotonicity, mean_ceiling, mean_range, growth = (_Worst() for _ in range(7))
    late_start = t_end - options.late_fraction * (t_end - first.t)

    for state, fields in zip(snapshots, derived):
        t = state.t
        i, j = np.unravel_index(np.argmin(state.u), state.u.shape)
        positivity.update(-state.u[i, j], t, f"at node (ix={i}, itheta={j})")

        mass.update(fields.rho.max() - ceiling, t)
        growth.update(fields.rho.max() - M * np.exp(C * (t - first.t)), t)
        if t >= late_start:
            late.update(fields.rho.max() - 1.0, t)

        massive = fields.rho > options.eps_rho
        if massive.any():
            theta_bar = fields.theta_bar[massive]
            low = (params.theta_min - grid.dtheta) - theta_bar
            high = theta_bar - (params.theta_max + grid.dtheta)
            mean_range.update(max(low.max(), high.max()), t)
            if monotone:
                mean_ceiling.update((theta_bar - params.midpoint).max(), t)
        if monotone:
            rises = np.diff(state.u, axis=1)
            i, j = np.unravel_index(np.argmax(rises), rises.shape)
            monotonicity.update(rises[i, j], t, f"at node (ix={i}, itheta={j})")

    checks = [
        positivity.result("positivity", options.positivity_tol),
        mass.result("mass_ceiling", options.mass_tol, f"max(M,1)={ceiling:.6g}"),
    ]

    if t_end >= options.late_min_t_end:
        checks.append(late.result("late_mass_ceiling", options.late_tol, f"t >= {late_start:.6g}"))
    else:
        checks.append(_skipped("late_mass_ceiling", f"t_end={t_end:g} < {options.late_min_t_end:g}"))

    if monotone:
        checks.append(monotonicity.result("trait_monotonicity", options.tol))
        checks.append(mean_ceiling.result("mean_trait_ceiling", options.tol, f"midpoint={params.midpoint:.6g}"))
    else:
        reason = "hypotheses M <= 1 and u0 nonincreasing in theta not met"
        logger.warning("run_monitors: %s; conditional checks skipped", reason)
        checks.append(_skipped("trait_monotonicity", reason))
        checks.append(_skipped("mean_trait_ceiling", reason))

    checks.append(mean_range.result("mean_trait_range", options.tol))
    checks.append(growth.result("growth_ceiling", options.tol, f"C={C:.6g}"))
    checks.append(_core_convergence(last, params, options))

    report = MonitorReport(checks, options)
    for check in report.failures():
        logger.warning("monitor %s failed: worst violation %.3g at t=%s", check.name, check.worst_violation, check.time_of_worst)
    return report


def _core_convergence(last, params: ModelParams, options: MonitorOptions) -> CheckResult:
    name = "core_convergence"
    if params.theta_max > 0:
        return _skipped(name, "theta_max > 0")
    if options.core_L is None:
        return _skipped(name, "initial support length unknown")

    core = last.grid.region(-0.25 * options.core_L, 0.25 * options.core_L)
    if core.stop <= core.start:
        return _skipped(name, "core region holds no grid node")

    rho = last.derived().rho[core]
    rho_gap = float(np.abs(rho - 1.0).max())
    profile_gap = float(np.abs(last.u[core] * params.width - 1.0).max())
    detail = f"|rho-1|={rho_gap:.3g}, |u*width-1|={profile_gap:.3g} on |x| <= {0.25 * options.core_L:g}"
    passed = rho_gap <= options.core_tol and profile_gap <= options.core_profile_tol
    status = CheckStatus.PASS if passed else CheckStatus.FAIL
    return CheckResult(name, status, rho_gap, last.t, detail)
