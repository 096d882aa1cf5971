import numpy
import pytest
from nlallee.operators import NeumannOperators, neumann_diffusion_2d, trapezoid_weights
from scipy.integrate import trapezoid


def _second_difference_error(n):
    """Max error of the ghost-point second difference on cos(pi x) over [0, 1]."""
    ops = NeumannOperators(n, 1.0 / (n - 1))
    x = numpy.linspace(0.0, 1.0, n)
    exact = -numpy.pi ** 2 * numpy.cos(numpy.pi * x)
    return numpy.max(numpy.abs(ops.laplacian(numpy.cos(numpy.pi * x)) - exact))


class TestNeumannOperators:
    def setup_method(self, method):
        self.ops = NeumannOperators(33, 0.05)

    def test_weights_match_trapezoid(self):
        f = numpy.linspace(0.0, 1.0, 33) ** 2
        assert numpy.isclose(self.ops.weights @ f, trapezoid(f, dx=0.05))

    def test_constant_in_kernel(self):
        assert numpy.allclose(self.ops.laplacian(numpy.full(33, 2.5)), 0.0)

    def test_symmetrize_round_trip(self):
        phi = numpy.linspace(1.0, 2.0, 33)
        assert numpy.allclose(self.ops.unsymmetrize(self.ops.symmetrize(phi)), phi)

    def test_tridiagonal_is_similar_to_ghost_point_matrix(self):
        n, h, coef = 9, 0.1, 0.3
        ops = NeumannOperators(n, h)
        potential = numpy.linspace(0.2, 1.0, n)

        # assemble the nonsymmetric ghost-point matrix column by column
        full = numpy.column_stack([-coef * ops.laplacian(e) for e in numpy.eye(n)]) + numpy.diag(potential)
        diagonal, off_diagonal = ops.tridiagonal(coef, potential)
        symmetric = numpy.diag(diagonal) + numpy.diag(off_diagonal, 1) + numpy.diag(off_diagonal, -1)

        assert numpy.allclose(
            numpy.sort(numpy.linalg.eigvals(full).real), numpy.linalg.eigvalsh(symmetric)
        )

    def test_second_order(self):
        errors = [_second_difference_error(n) for n in (33, 65, 129)]
        slopes = numpy.log2(numpy.array(errors[:-1]) / numpy.array(errors[1:]))
        assert numpy.all(numpy.abs(slopes - 2.0) < 0.2)


def test_trapezoid_weights_sum():
    assert numpy.isclose(trapezoid_weights(11, 0.1).sum(), 1.0)


def test_diffusion_2d_separable():
    nx, nt = 41, 21
    x = numpy.linspace(0.0, 2.0, nx)
    theta = numpy.linspace(0.0, 1.0, nt)
    u = numpy.outer(numpy.cos(numpy.pi * x / 2.0), numpy.ones(nt)) + numpy.outer(
        numpy.ones(nx), numpy.cos(numpy.pi * theta)
    )
    d, alpha = 1.5, 0.01
    result = neumann_diffusion_2d(u, x[1] - x[0], theta[1] - theta[0], d, alpha)
    exact = -d * (numpy.pi / 2.0) ** 2 * numpy.outer(numpy.cos(numpy.pi * x / 2.0), numpy.ones(nt)) - alpha * (
        numpy.pi ** 2
    ) * numpy.outer(numpy.ones(nx), numpy.cos(numpy.pi * theta))
    assert numpy.allclose(result, exact, atol=2e-2)


def test_diffusion_2d_of_constant_vanishes():
    assert numpy.allclose(neumann_diffusion_2d(numpy.full((5, 4), 3.0), 0.5, 0.1, 1.0, 0.2), 0.0)


@pytest.mark.parametrize("n", [3, 4, 10])
def test_small_sizes(n):
    ops = NeumannOperators(n, 0.5)
    diagonal, off_diagonal = ops.tridiagonal(1.0, numpy.zeros(n))
    assert len(diagonal) == n
    assert len(off_diagonal) == n - 1
