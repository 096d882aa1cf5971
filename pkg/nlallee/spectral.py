"""
Neumann principal eigenpair of -alpha phi'' + theta phi = lambda phi on [theta_min, theta_max].

The operator is discretized with ghost-point Neumann ends and conjugated to a
symmetric tridiagonal matrix. The smallest eigenvalue comes from Sturm-sequence
bisection (LAPACK stebz) and the eigenvector from shifted inverse iteration.
"""
import logging
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
from scipy.integrate import trapezoid

from nlallee.errors import DomainError, NonConvergence, SignError
from nlallee.model import ModelParams
from nlallee.operators import NeumannOperators

logger = logging.getLogger(__name__)

DEFAULT_NTHETA = 513
MIN_NTHETA = 16

#: Inverse iteration stops this many iterations after the relative residual drops below RESIDUAL_TOL.
RESIDUAL_TOL = 1e-10
EXTRA_ITERATIONS = 2
MAX_ITERATIONS = 50


@dataclass(frozen=True, eq=False)
class EigenPair:
    lam: float
    phi: np.ndarray
    alpha: float
    params: ModelParams
    residual: float = 0.0
    iterations: int = 0

    def __post_init__(self):
        if self.phi.ndim != 1 or len(self.phi) < 3:
            raise DomainError("Eigenfunction must be a 1D array with at least 3 samples.")
        if not np.all(self.phi > 0):
            raise DomainError("Eigenfunction samples must be positive.")
        if not np.isclose(self.phi.max(), 1.0, rtol=0.0, atol=1e-12):
            raise DomainError(f"Eigenfunction must be max-normalized, max is {self.phi.max()}.")

    @property
    def ntheta(self):
        return len(self.phi)

    @property
    def theta(self):
        return np.linspace(self.params.theta_min, self.params.theta_max, self.ntheta)

    @property
    def dtheta(self):
        return self.params.width / (self.ntheta - 1)


class LambdaBounds(NamedTuple):
    lower: float
    upper: float
    conditional_upper: Optional[float]


class RichardsonEstimate(NamedTuple):
    lam: float
    lam_fine: float
    lam_coarse: float
    dead_band: float


@dataclass
class ShapeReport:
    passed: bool
    failures: List[Tuple[int, str, float]] = field(default_factory=list)

    @property
    def first_violation(self) -> Optional[int]:
        return self.failures[0][0] if self.failures else None

    def __str__(self):
        if self.passed:
            return "pass"
        node, rule, value = self.failures[0]
        return f"fail: {rule} violated at node {node} (value {value:.3g})"


def _matvec(diagonal, off_diagonal, v):
    product = diagonal * v
    product[:-1] += off_diagonal * v[1:]
    product[1:] += off_diagonal * v[:-1]
    return product


def _inverse_iteration(diagonal, off_diagonal, lam):
    n = len(diagonal)
    norm = float(np.max(np.abs(diagonal) + np.r_[np.abs(off_diagonal), 0.0] + np.r_[0.0, np.abs(off_diagonal)]))

    # shift just below lam so the shifted matrix stays positive definite
    shift = lam - (64.0 * np.finfo(float).eps * norm + 1e-10 * max(1.0, abs(lam)))

    upper = np.zeros((2, n))
    upper[0, 1:] = off_diagonal
    upper[1, :] = diagonal - shift
    try:
        factor = scipy.linalg.cholesky_banded(upper)

        def solve(rhs):
            return scipy.linalg.cho_solve_banded((factor, False), rhs)

    except np.linalg.LinAlgError:
        logger.debug("inverse iteration: shifted matrix not positive definite, using LU")
        full = np.zeros((3, n))
        full[0, 1:] = off_diagonal
        full[1, :] = diagonal - shift
        full[2, :-1] = off_diagonal

        def solve(rhs):
            return scipy.linalg.solve_banded((1, 1), full, rhs)

    v = np.full(n, 1.0 / np.sqrt(n))
    converged_at = None
    residual = np.inf
    for iteration in range(1, MAX_ITERATIONS + 1):
        w = solve(v)
        v = w / np.linalg.norm(w)
        if v.sum() < 0:
            v = -v
        residual = float(np.max(np.abs(_matvec(diagonal, off_diagonal, v) - lam * v))) / norm

        if converged_at is None and residual < RESIDUAL_TOL:
            converged_at = iteration
        if converged_at is not None and iteration - converged_at >= EXTRA_ITERATIONS:
            return v, residual, iteration

    raise NonConvergence(
        f"inverse iteration residual {residual:.3g} did not reach {RESIDUAL_TOL:g} "
        f"in {MAX_ITERATIONS} iterations"
    )


def solve_eigen(params: ModelParams, ntheta: int = DEFAULT_NTHETA) -> EigenPair:
    if ntheta < MIN_NTHETA:
        raise DomainError(f"solve_eigen needs ntheta >= {MIN_NTHETA}, got {ntheta}.")

    theta = np.linspace(params.theta_min, params.theta_max, ntheta)
    ops = NeumannOperators(ntheta, params.width / (ntheta - 1))
    diagonal, off_diagonal = ops.tridiagonal(params.alpha, theta)

    tol = 1e-12 * max(1.0, abs(params.theta_max))
    lam = float(
        scipy.linalg.eigvalsh_tridiagonal(
            diagonal,
            off_diagonal,
            select="i",
            select_range=(0, 0),
            tol=tol,
            lapack_driver="stebz",
        )[0]
    )

    v, residual, iterations = _inverse_iteration(diagonal, off_diagonal, lam)
    phi = ops.unsymmetrize(v)
    if not np.all(phi > 0):
        bad = int(np.argmin(phi))
        raise SignError(f"principal eigenvector changes sign at node {bad} (value {phi[bad]:.3g})")

    logger.debug(
        "solve_eigen: alpha=%g ntheta=%d lambda=%.15g residual=%.2g after %d iterations",
        params.alpha,
        ntheta,
        lam,
        residual,
        iterations,
    )
    return EigenPair(
        lam=lam,
        phi=phi / phi.max(),
        alpha=params.alpha,
        params=params,
        residual=residual,
        iterations=iterations,
    )


def richardson_lambda(params: ModelParams, ntheta: int = DEFAULT_NTHETA) -> RichardsonEstimate:
    """Second-order Richardson extrapolation of lambda from ntheta and 2 * ntheta - 1 nodes."""
    coarse = solve_eigen(params, ntheta).lam
    fine = solve_eigen(params, 2 * ntheta - 1).lam
    h = params.width / (ntheta - 1)
    return RichardsonEstimate(
        lam=(4.0 * fine - coarse) / 3.0,
        lam_fine=fine,
        lam_coarse=coarse,
        dead_band=10.0 * h ** 2,
    )


def lambda_bounds(params: ModelParams) -> LambdaBounds:
    """theta_min < lambda < midpoint, plus the small-alpha bound when its hypotheses hold."""
    scale = (np.pi ** 2 * params.alpha / 2.0) ** (1.0 / 3.0)
    candidate = 1.5 * scale + params.theta_min
    conditional = None
    if candidate <= 0 and scale + params.theta_min <= params.theta_max:
        conditional = float(candidate)
    return LambdaBounds(lower=params.theta_min, upper=params.midpoint, conditional_upper=conditional)


def dirichlet_patch_bound(params: ModelParams) -> float:
    """
    Upper bound on lambda from the Neumann-Dirichlet test function on [theta_min, theta_min + eta].

    Valid for every eta in (0, theta_max - theta_min]; eta is the optimum
    (pi^2 alpha / 2)^(1/3) clipped to the trait width.
    """
    eta = min((np.pi ** 2 * params.alpha / 2.0) ** (1.0 / 3.0), params.width)
    return float(np.pi ** 2 * params.alpha / (4.0 * eta ** 2) + params.theta_min + eta)


def rayleigh_quotient(params: ModelParams, phi, theta) -> float:
    """Discrete Q_alpha(phi) / ||phi||^2 with forward-difference gradient and trapezoidal integrals."""
    phi = np.asarray(phi, dtype=float)
    h = theta[1] - theta[0]
    gradient_energy = params.alpha * np.sum(np.diff(phi) ** 2) / h
    potential_energy = trapezoid(theta * phi ** 2, dx=h)
    return float((gradient_energy + potential_energy) / trapezoid(phi ** 2, dx=h))


def check_eigenfunction_shape(pair: EigenPair, tol: float = 1e-8) -> ShapeReport:
    """
    Decreasing everywhere, concave left of lambda, convex right of it.

    Every test allows `tol` per node.
    Nodes closer than one cell to lambda are not tested for curvature.
    """
    phi, theta, h = pair.phi, pair.theta, pair.dtheta
    failures = []

    for node in np.nonzero(np.diff(phi) > tol)[0]:
        failures.append((int(node), "nonincreasing", float(phi[node + 1] - phi[node])))

    second = phi[:-2] - 2.0 * phi[1:-1] + phi[2:]
    inner = theta[1:-1]
    tested = np.abs(inner - pair.lam) >= h
    for offset in np.nonzero(tested & (inner < pair.lam) & (second > tol))[0]:
        failures.append((int(offset) + 1, "concave", float(second[offset])))
    for offset in np.nonzero(tested & (inner > pair.lam) & (second < -tol))[0]:
        failures.append((int(offset) + 1, "convex", float(second[offset])))

    failures.sort(key=lambda failure: failure[0])
    return ShapeReport(passed=not failures, failures=failures)


def lambda_curve(params: ModelParams, alphas: Sequence[float], ntheta: int = DEFAULT_NTHETA) -> List[float]:
    alphas = np.asarray(alphas, dtype=float)
    if np.any(alphas <= 0) or np.any(np.diff(alphas) <= 0):
        raise DomainError("alphas must be positive and strictly increasing.")
    return [solve_eigen(params.with_alpha(float(alpha)), ntheta).lam for alpha in alphas]
