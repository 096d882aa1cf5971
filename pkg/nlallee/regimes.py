"""Persistence/extinction regime table and the explicit thresholds of the theory."""
import enum
import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from nlallee.errors import DomainError
from nlallee.model import ModelParams
from nlallee.spectral import EigenPair, richardson_lambda

logger = logging.getLogger(__name__)


class RegimeCell(enum.Enum):
    SYSTEMATIC_PERSISTENCE = "SystematicPersistence"
    SYSTEMATIC_EXTINCTION = "SystematicExtinction"
    CONDITIONAL_EP = "ConditionalEP"
    CONDITIONAL_EP_CONJECTURED = "ConditionalEP_Conjectured"
    SUPERCRITICAL_SPLIT = "SupercriticalSplit"


class Prediction(enum.Enum):
    GUARANTEED_EXTINCTION = "GuaranteedExtinction"
    GUARANTEED_PERSISTENCE = "GuaranteedPersistence"
    UNKNOWN = "Unknown"


@dataclass
class RegimeReport:
    cell: RegimeCell
    lam: float
    alpha_sharp: Optional[float] = None
    indeterminate: bool = False
    notes: List[str] = field(default_factory=list)

    def __str__(self):
        text = self.cell.value
        if self.alpha_sharp is not None:
            text += f"(alpha_sharp={self.alpha_sharp:.6g})"
        return text


@dataclass(frozen=True)
class Thresholds:
    u0_sup_bound: Optional[float]
    alpha_sharp: Optional[float]
    lambda1_dirichlet: float
    eta_star: Optional[float]


@dataclass
class OutcomePrediction:
    outcome: Prediction
    notes: List[str] = field(default_factory=list)


def _is_critical(params: ModelParams) -> bool:
    return math.isclose(params.theta_min + params.theta_max, 1.0, rel_tol=0.0, abs_tol=1e-12)


def _supercritical(params: ModelParams) -> bool:
    return params.theta_min + params.theta_max > 1.0 and not _is_critical(params)


def classify_regime(params: ModelParams, pair: EigenPair, M: float = 1.0) -> RegimeReport:
    """
    Locate (params, lambda) in the summary table of outcomes.

    When |lambda| is inside the dead-band 10 * dtheta^2 the Richardson
    extrapolated eigenvalue decides; if that is still inside the band the
    report is flagged indeterminate and falls to the lambda > 0 branch.
    """
    lam = pair.lam
    notes = [f"lambda={lam:.12g} on {pair.ntheta} nodes"]
    indeterminate = False

    dead_band = 10.0 * pair.dtheta ** 2
    if abs(lam) <= dead_band:
        estimate = richardson_lambda(params, pair.ntheta)
        lam = estimate.lam
        notes.append(f"|lambda| inside dead-band {dead_band:.3g}; extrapolated lambda={lam:.12g}")
        if abs(lam) <= dead_band:
            indeterminate = True
            notes.append("Indeterminate: sign of lambda uncertain, treated as lambda > 0")
            logger.warning("classify_regime: lambda=%.3g inside dead-band %.3g", lam, dead_band)

    positive = indeterminate or lam > 0

    if params.theta_min >= 0.5:
        notes.append("theta_min >= 1/2: every solution goes extinct")
        return RegimeReport(RegimeCell.SYSTEMATIC_EXTINCTION, lam, indeterminate=indeterminate, notes=notes)

    if not positive:
        notes.append("lambda <= 0: every solution persists")
        return RegimeReport(RegimeCell.SYSTEMATIC_PERSISTENCE, lam, indeterminate=indeterminate, notes=notes)

    if params.theta_min < 0:
        notes.append("lambda > 0 with theta_min < 0: outcome depends on u0")
        return RegimeReport(RegimeCell.CONDITIONAL_EP, lam, indeterminate=indeterminate, notes=notes)

    if _is_critical(params):
        notes.append("theta_min + theta_max = 1: extinction possible, persistence conjectured")
        return RegimeReport(
            RegimeCell.CONDITIONAL_EP_CONJECTURED, lam, indeterminate=indeterminate, notes=notes
        )

    if _supercritical(params):
        sharp = alpha_sharp(M, params)
        notes.append(f"theta_min + theta_max > 1: extinction for every u0 once alpha > alpha_star <= {sharp:.6g}")
        return RegimeReport(
            RegimeCell.SUPERCRITICAL_SPLIT, lam, alpha_sharp=sharp, indeterminate=indeterminate, notes=notes
        )

    notes.append("theta_min + theta_max < 1: outcome depends on u0")
    return RegimeReport(RegimeCell.CONDITIONAL_EP, lam, indeterminate=indeterminate, notes=notes)


def extinction_threshold(pair: EigenPair, params: ModelParams) -> Optional[float]:
    """Sup-norm below which the initial density is sure to go extinct (only when lambda > 0)."""
    if pair.lam <= 0:
        return None
    return pair.lam * float(pair.phi.min()) / (params.width * (1.0 + params.theta_max))


def eta_star(params: ModelParams) -> Optional[float]:
    if not _supercritical(params) or params.theta_min <= 0:
        return None
    return min((params.theta_max + params.theta_min - 1.0) / 10.0, params.theta_min / 4.0)


def alpha_sharp(M: float, params: ModelParams) -> Optional[float]:
    """Explicit mutation level above which extinction is systematic in the supercritical case."""
    if not M > 0:
        raise DomainError(f"M must be positive, got {M}.")
    if not _supercritical(params):
        return None
    if params.theta_min <= 0:
        raise DomainError(
            f"alpha_sharp needs theta_min > 0 in the supercritical case, got theta_min={params.theta_min}."
        )
    if params.theta_min >= 0.5:
        return None

    t_min, t_max = params.theta_min, params.theta_max
    eta = eta_star(params)
    m1 = M + 1.0
    bracket = (
        m1 * (1.0 + np.pi) * t_max
        - m1 * t_min
        + np.pi / 4.0
        + (m1 ** 2 / (eta ** 2 * np.sqrt(3.0))) * np.sqrt((t_max ** 3 - t_min ** 3) * (t_max - t_min))
    )
    return float((t_max - t_min) ** 2 / np.pi ** 3 * bracket)


def lambda1_dirichlet(params: ModelParams) -> float:
    """Principal Dirichlet eigenvalue of -d^2/dtheta^2, equal to the second Neumann one."""
    return np.pi ** 2 / params.width ** 2


def growth_rate_bound(params: ModelParams) -> float:
    """C = (1 - theta_min)^2 / 4, so that max rho(t) <= M exp(C t)."""
    return (1.0 - params.theta_min) ** 2 / 4.0


def thresholds(params: ModelParams, pair: EigenPair, M: float = 1.0) -> Thresholds:
    sharp = None
    if _supercritical(params) and 0 < params.theta_min < 0.5:
        sharp = alpha_sharp(M, params)
    return Thresholds(
        u0_sup_bound=extinction_threshold(pair, params),
        alpha_sharp=sharp,
        lambda1_dirichlet=lambda1_dirichlet(params),
        eta_star=eta_star(params),
    )


def predict_outcome(
    params: ModelParams,
    pair: EigenPair,
    u0_sup: float,
    M: float,
    alpha: float = None,
) -> OutcomePrediction:
    """Compose the extinction and persistence theorems into a guaranteed outcome, when one applies."""
    alpha = params.alpha if alpha is None else alpha
    notes = []

    if params.theta_min >= 0.5:
        notes.append("systematic extinction: theta_min >= 1/2")
        return OutcomePrediction(Prediction.GUARANTEED_EXTINCTION, notes)

    if pair.lam <= 0:
        notes.append(f"systematic persistence: lambda={pair.lam:.6g} <= 0")
        return OutcomePrediction(Prediction.GUARANTEED_PERSISTENCE, notes)

    bound = extinction_threshold(pair, params)
    if u0_sup < bound:
        notes.append(f"small data extinction: sup u0={u0_sup:.6g} < {bound:.6g}")
        return OutcomePrediction(Prediction.GUARANTEED_EXTINCTION, notes)
    notes.append(f"small data bound not met: sup u0={u0_sup:.6g} >= {bound:.6g}")

    if _supercritical(params) and 0 < params.theta_min < 0.5:
        sharp = alpha_sharp(M, params)
        if alpha > sharp:
            notes.append(f"large mutation extinction: alpha={alpha:.6g} > alpha_sharp={sharp:.6g}")
            return OutcomePrediction(Prediction.GUARANTEED_EXTINCTION, notes)
        notes.append(f"alpha={alpha:.6g} <= alpha_sharp={sharp:.6g}")

    notes.append("no theorem decides this case")
    return OutcomePrediction(Prediction.UNKNOWN, notes)
