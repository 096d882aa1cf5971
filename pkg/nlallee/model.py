"""Model parameters, the discretized state and the nonlocal coupling quantities."""
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import trapezoid

from nlallee.errors import DomainError
from nlallee.grid import Grid
from nlallee.operators import neumann_diffusion_2d

#: Density below which the mean trait is replaced by the trait-interval midpoint.
EPS_RHO = 1e-12


@dataclass(frozen=True)
class ModelParams:
    d: float
    alpha: float
    theta_min: float
    theta_max: float

    def __post_init__(self):
        if not self.d > 0:
            raise DomainError(f"Spatial diffusion d must be positive, got {self.d}.")
        if not self.alpha > 0:
            raise DomainError(f"Mutation coefficient alpha must be positive, got {self.alpha}.")
        if not self.theta_min < self.theta_max < 1:
            raise DomainError(
                "Trait bounds must satisfy theta_min < theta_max < 1, "
                f"got theta_min={self.theta_min}, theta_max={self.theta_max}."
            )

    @property
    def width(self):
        return self.theta_max - self.theta_min

    @property
    def midpoint(self):
        return 0.5 * (self.theta_min + self.theta_max)

    @property
    def uniform_density(self):
        """1 / (theta_max - theta_min), the persistent steady state of u."""
        return 1.0 / self.width

    def with_alpha(self, alpha: float) -> "ModelParams":
        return replace(self, alpha=alpha)

    def shifted(self, c: float) -> "ModelParams":
        return replace(self, theta_min=self.theta_min + c, theta_max=self.theta_max + c)


@dataclass(frozen=True)
class DerivedFields:
    rho: np.ndarray
    theta_bar: np.ndarray
    total_mass: float


@dataclass(frozen=True, eq=False)
class StateField:
    t: float
    u: np.ndarray
    params: ModelParams
    grid: Grid

    def __post_init__(self):
        if self.t < 0:
            raise DomainError(f"State time must be nonnegative, got t={self.t}.")
        if self.u.shape != self.grid.shape:
            raise DomainError(f"Density has shape {self.u.shape}, grid expects {self.grid.shape}.")
        if not np.all(np.isfinite(self.u)):
            raise DomainError("Density contains non-finite values.")
        if (self.grid.theta_min, self.grid.theta_max) != (self.params.theta_min, self.params.theta_max):
            raise DomainError("Grid trait axis does not match the model's trait bounds.")

    def with_u(self, t: float, u) -> "StateField":
        return StateField(t=t, u=u, params=self.params, grid=self.grid)

    def derived(self, eps_rho: float = EPS_RHO) -> DerivedFields:
        rho = integrate_mass(self)
        return DerivedFields(
            rho=rho,
            theta_bar=_mean_trait(self, rho, eps_rho),
            total_mass=float(trapezoid(rho, dx=self.grid.dx)),
        )


def integrate_mass(state: StateField):
    """rho(x) = integral of u over the trait interval (trapezoidal rule)."""
    return trapezoid(state.u, dx=state.grid.dtheta, axis=1)


def mean_trait(state: StateField, eps_rho: float = EPS_RHO):
    """
    Mass-weighted mean trait at every x node.

    Where rho < eps_rho the midpoint of the trait interval is returned; this
    value is diagnostic only and never enters the dynamics.
    """
    if not eps_rho > 0:
        raise DomainError(f"eps_rho must be positive, got {eps_rho}.")
    return _mean_trait(state, integrate_mass(state), eps_rho)


def _mean_trait(state: StateField, rho, eps_rho: float):
    first_moment = trapezoid(state.u * state.grid.theta, dx=state.grid.dtheta, axis=1)
    theta_bar = np.full_like(rho, state.params.midpoint)
    massive = rho >= eps_rho
    theta_bar[massive] = first_moment[massive] / rho[massive]
    return theta_bar


def total_mass(state: StateField) -> float:
    """N(t), the integral of rho over the spatial domain."""
    return float(trapezoid(integrate_mass(state), dx=state.grid.dx))


def assemble_rhs(state: StateField):
    return rhs_array(state.u, state.params, state.grid)


def rhs_array(u, params: ModelParams, grid: Grid):
    """du/dt = d u_xx + alpha u_thetatheta + u (rho - theta)(1 - rho), Neumann on every side."""
    rho = trapezoid(u, dx=grid.dtheta, axis=1)[:, np.newaxis]
    reaction = u * (rho - grid.theta[np.newaxis, :]) * (1.0 - rho)
    return neumann_diffusion_2d(u, grid.dx, grid.dtheta, params.d, params.alpha) + reaction


def boundary_excess(state: StateField, cells: int = 5) -> float:
    """Largest density within `cells` grid cells of either x boundary."""
    left, right = state.grid.boundary_strips(cells)
    return float(max(state.u[left].max(), state.u[right].max()))


def peak_location(state: StateField):
    """(x, theta) coordinates of the global maximum of u."""
    i, j = np.unravel_index(np.argmax(state.u), state.u.shape)
    return float(state.grid.x[i]), float(state.grid.theta[j])
