import numpy as np


def trapezoid_weights(n: int, h: float):
    """Weights w such that w @ f is the trapezoidal integral of f sampled on n uniform nodes."""
    weights = np.full(n, h)
    weights[0] = weights[-1] = 0.5 * h
    return weights


def neumann_diffusion_2d(u, dx: float, dtheta: float, d: float, alpha: float):
    """d * u_xx + alpha * u_thetatheta with ghost-point reflection on all four sides."""
    # reflect mode mirrors about the edge node, i.e. u[-1] = u[1]
    padded = np.pad(u, 1, mode="reflect")
    twice = 2.0 * u
    u_xx = (padded[:-2, 1:-1] - twice + padded[2:, 1:-1]) / dx ** 2
    u_tt = (padded[1:-1, :-2] - twice + padded[1:-1, 2:]) / dtheta ** 2
    return d * u_xx + alpha * u_tt


class NeumannOperators:
    def __init__(self, n: int, h: float):
        """Second-order finite-difference operators on n uniform nodes with homogeneous Neumann ends."""
        self.n = n
        self.h = h

        # Trapezoidal inner product; the ghost-point operator is self-adjoint in it
        self.weights = trapezoid_weights(n, h)
        self.sqrt_weights = np.sqrt(self.weights / h)

    def laplacian(self, u):
        """Second difference of a 1D profile."""
        padded = np.pad(u, 1, mode="reflect")
        return (padded[:-2] - 2.0 * u + padded[2:]) / self.h ** 2

    def tridiagonal(self, coef: float, potential):
        """
        Symmetric tridiagonal form (diagonal, off-diagonal) of -coef * d^2/dtheta^2 + potential.

        The ghost-point end rows carry twice the inner coupling; conjugating with
        the square root of the half-weight end masses makes the matrix symmetric.
        """
        stiff = coef / self.h ** 2
        diagonal = 2.0 * stiff + np.asarray(potential, dtype=float)
        off_diagonal = np.full(self.n - 1, -stiff)
        off_diagonal[0] = off_diagonal[-1] = -np.sqrt(2.0) * stiff
        return diagonal, off_diagonal

    def symmetrize(self, phi):
        return self.sqrt_weights * phi

    def unsymmetrize(self, v):
        return v / self.sqrt_weights
