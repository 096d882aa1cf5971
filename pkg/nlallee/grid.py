from dataclasses import dataclass

import numpy as np

from nlallee.errors import DomainError


class Grid:
    def __init__(
        self,
        x_lo: float,
        x_hi: float,
        nx: int,
        ntheta: int,
        theta_min: float,
        theta_max: float,
    ):
        """Uniform tensor grid on [x_lo, x_hi] x [theta_min, theta_max], endpoints included."""
        if nx < 3 or ntheta < 3:
            raise DomainError(f"Grid needs at least 3 nodes per axis, got nx={nx}, ntheta={ntheta}.")
        if not x_lo < x_hi:
            raise DomainError(f"x_lo={x_lo} must be below x_hi={x_hi}.")
        if not theta_min < theta_max:
            raise DomainError(f"theta_min={theta_min} must be below theta_max={theta_max}.")

        self.x_lo = float(x_lo)
        self.x_hi = float(x_hi)
        self.nx = int(nx)
        self.ntheta = int(ntheta)
        self.theta_min = float(theta_min)
        self.theta_max = float(theta_max)

        self.dx = (self.x_hi - self.x_lo) / (self.nx - 1)
        self.dtheta = (self.theta_max - self.theta_min) / (self.ntheta - 1)

        self.x = np.linspace(self.x_lo, self.x_hi, self.nx)
        self.theta = np.linspace(self.theta_min, self.theta_max, self.ntheta)

    @property
    def shape(self):
        return (self.nx, self.ntheta)

    @property
    def length(self):
        """|I|, the length of the spatial domain."""
        return self.x_hi - self.x_lo

    def region(self, x_min: float, x_max: float) -> slice:
        """Slice of the x nodes lying in the closed interval [x_min, x_max]."""
        tol = 1e-9 * self.dx
        inside = np.nonzero((self.x >= x_min - tol) & (self.x <= x_max + tol))[0]
        if len(inside) == 0:
            return slice(0, 0)
        return slice(int(inside[0]), int(inside[-1]) + 1)

    def boundary_strips(self, cells: int):
        """Index slices of the first and last `cells` + 1 x nodes."""
        cells = min(cells, self.nx - 1)
        return slice(0, cells + 1), slice(self.nx - cells - 1, self.nx)

    def __eq__(self, other):
        if not isinstance(other, Grid):
            return NotImplemented
        return (
            self.x_lo == other.x_lo
            and self.x_hi == other.x_hi
            and self.nx == other.nx
            and self.ntheta == other.ntheta
            and self.theta_min == other.theta_min
            and self.theta_max == other.theta_max
        )

    def __repr__(self):
        return (
            f"Grid(x=[{self.x_lo:g}, {self.x_hi:g}] nx={self.nx}, "
            f"theta=[{self.theta_min:g}, {self.theta_max:g}] ntheta={self.ntheta})"
        )


@dataclass(frozen=True)
class GridSpec:
    """Grid resolution and spatial extent; the trait axis comes from ModelParams."""

    x_lo: float = -60.0
    x_hi: float = 60.0
    nx: int = 241
    ntheta: int = 51

    def __post_init__(self):
        if self.nx < 3 or self.ntheta < 3:
            raise DomainError(f"GridSpec needs nx, ntheta >= 3, got {self.nx}, {self.ntheta}.")
        if not self.x_lo < self.x_hi:
            raise DomainError(f"GridSpec x_lo={self.x_lo} must be below x_hi={self.x_hi}.")

    def build(self, params) -> Grid:
        return Grid(self.x_lo, self.x_hi, self.nx, self.ntheta, params.theta_min, params.theta_max)
