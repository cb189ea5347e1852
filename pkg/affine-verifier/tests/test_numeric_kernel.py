"""
Tests for the numeric kernel: charts, linear algebra, calculus and grids.
"""
import numpy as np
import pytest

from src.errors import NotSymmetric, OutOfDomain, SingularMatrix
from src.kernel.calculus import MetricField, christoffel, integrate_1form, lie_bracket, riemann_tensor
from src.kernel.charts import ChartMap, Jet, fd_derivative
from src.kernel.grids import GridSpec
from src.kernel.linalg import BilinearForm, indefinite_gram_schmidt, signature_of, solve
from src.services.split_space import gram_matrix


def test_fd_derivative_matches_cosine():
    """Fourth-order differences of sin reproduce cos."""
    derivative = fd_derivative(lambda p: np.sin(p), [0.7], 1e-3)
    assert derivative.shape == (1, 1)
    assert derivative[0, 0] == pytest.approx(np.cos(0.7), abs=1e-10)


def test_fd_chart_jet_of_cubic():
    """A finite-difference chart reproduces the jet of p₀²p₁."""
    chart = ChartMap.from_function(lambda p: np.array([p[0] ** 2 * p[1]]), 2, 1)
    jet = chart.jet([1.0, 2.0], 2)
    assert chart.mode == "fd"
    np.testing.assert_allclose(jet.J, [[4.0, 1.0]], atol=1e-8)
    np.testing.assert_allclose(jet.H[0], [[4.0, 2.0], [2.0, 0.0]], atol=1e-6)


def test_analytic_chart_keeps_jets_through_combinators():
    """Scaling and concatenation keep analytic jets analytic."""

    def jet_func(p, order):
        return Jet(np.array([np.exp(p[0])]), np.array([[np.exp(p[0])]]),
                   np.array([[[np.exp(p[0])]]]) if order == 2 else None)

    chart = ChartMap(lambda p: np.array([np.exp(p[0])]), 1, 1, jet_func=jet_func, name="exp")
    combined = ChartMap.concat(chart, chart.scaled(-2.0))
    jet = combined.jet([0.0], 2)
    assert combined.mode == "analytic"
    np.testing.assert_allclose(jet.value, [1.0, -2.0])
    np.testing.assert_allclose(jet.H[:, 0, 0], [1.0, -2.0])


def test_fd_stencil_leaving_domain_raises():
    """Finite-difference stencils must stay in the chart domain."""
    chart = ChartMap.from_function(
        lambda p: p.copy(), 1, 1, domain=lambda p: float(p @ p) < 1.0
    )
    chart([0.9995])
    with pytest.raises(OutOfDomain):
        chart.jet([0.9995], 1)


def test_solve_rejects_singular_matrix():
    """Singular systems raise SingularMatrix with the determinant attached."""
    with pytest.raises(SingularMatrix) as exc_info:
        solve([[1.0, 2.0], [2.0, 4.0]], [1.0, 0.0])
    assert exc_info.value.value == pytest.approx(0.0, abs=1e-12)


def test_signature_counts():
    """Signatures count positive, negative and zero eigenvalues."""
    assert signature_of(np.diag([1.0, -1.0, 0.0])) == (1, 1, 1)
    assert signature_of(gram_matrix(2)) == (2, 2, 0)


def test_bilinear_form_requires_symmetry():
    """Non-symmetric matrices are not bilinear forms."""
    with pytest.raises(NotSymmetric):
        BilinearForm(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_indefinite_gram_schmidt_on_split_form():
    """The split form has an ε-orthonormal basis of signature (2, 2)."""
    G = gram_matrix(2)
    frame, signs = indefinite_gram_schmidt(G)
    np.testing.assert_allclose(frame.T @ G @ frame, np.diag(signs), atol=1e-12)
    assert sorted(signs) == [-1.0, -1.0, 1.0, 1.0]


def test_lie_bracket_of_rotation_and_dilation():
    """Rotation and dilation fields commute on the plane."""

    def linear_field(A):
        A = np.asarray(A, dtype=float)
        return ChartMap(lambda p: A @ p, 2, 2, jet_func=lambda p, order: Jet(A @ p, A, None))

    rotation = linear_field([[0.0, -1.0], [1.0, 0.0]])
    dilation = linear_field(np.eye(2))
    shear = linear_field([[0.0, 1.0], [0.0, 0.0]])
    np.testing.assert_allclose(lie_bracket(rotation, dilation, [0.3, -0.4]), 0.0, atol=1e-14)
    # [X, Y] = (JY)X − (JX)Y for linear fields: (BA − AB)p
    expected = (np.array([[0.0, 1.0], [0.0, 0.0]]) @ np.array([[0.0, -1.0], [1.0, 0.0]])
                - np.array([[0.0, -1.0], [1.0, 0.0]]) @ np.array([[0.0, 1.0], [0.0, 0.0]])) @ np.array([1.0, 2.0])
    np.testing.assert_allclose(lie_bracket(rotation, shear, [1.0, 2.0]), expected, atol=1e-14)


def test_christoffel_symbols_of_polar_metric():
    """Polar coordinates: Γʳ_θθ = −r and Γᶿ_rθ = 1/r."""
    metric = MetricField(lambda q: np.diag([1.0, q[0] ** 2]), 2, name="polar")
    gamma = christoffel(metric, [2.0, 0.3])
    assert gamma[0, 1, 1] == pytest.approx(-2.0, abs=1e-8)
    assert gamma[1, 0, 1] == pytest.approx(0.5, abs=1e-8)
    assert gamma[1, 1, 0] == pytest.approx(0.5, abs=1e-8)
    assert gamma[0, 0, 0] == pytest.approx(0.0, abs=1e-10)


def test_riemann_tensor_flat_and_round():
    """Polar coordinates are flat; the round sphere has R^θ_φθφ = sin²θ."""
    polar = MetricField(lambda q: np.diag([1.0, q[0] ** 2]), 2)
    assert np.max(np.abs(riemann_tensor(polar, [1.5, 0.2]))) < 1e-6

    sphere = MetricField(lambda q: np.diag([1.0, np.sin(q[0]) ** 2]), 2)
    curvature = riemann_tensor(sphere, [1.0, 0.4])
    assert curvature[0, 0, 1, 1] == pytest.approx(np.sin(1.0) ** 2, abs=1e-6)


def test_integrate_exact_form_along_polyline():
    """∫ d(x²y) from the origin to (1, 2) is 2 on any polyline."""
    alpha = lambda p: np.array([2.0 * p[0] * p[1], p[0] ** 2])
    staircase = [[0.0, 0.0], [1.0, 0.0], [1.0, 2.0]]
    diagonal = [[0.0, 0.0], [0.5, 1.5], [1.0, 2.0]]
    assert integrate_1form(alpha, staircase) == pytest.approx(2.0, abs=1e-12)
    assert integrate_1form(alpha, diagonal) == pytest.approx(2.0, abs=1e-12)


def test_grid_nodes_trim_and_sample():
    """Grids enumerate nodes in C order and sample deterministically."""
    grid = GridSpec.box(1.0, 2, 5)
    nodes = grid.nodes()
    assert nodes.shape == (25, 2)
    np.testing.assert_allclose(nodes[1], [-1.0, -0.5])
    trimmed = grid.trimmed(0.1)
    assert trimmed.lower == pytest.approx((-0.9, -0.9))
    first = grid.sample(7, seed=3)
    second = grid.sample(7, seed=3)
    np.testing.assert_array_equal(first, second)
    assert len(grid.sample(None, seed=0)) == 25


def test_grid_rejects_empty_box():
    """Lower bounds must sit below upper bounds."""
    with pytest.raises(ValueError):
        GridSpec((1.0,), (0.0,), 5)
