"""
Tests for the Blaschke lift into unimodular positive forms.
"""
import numpy as np
import pytest
from scipy.linalg import expm

from src.errors import FrameNotUnimodular, NotHyperbolicSphere, NotPositive
from src.services.affine_structure import AffineStructureService, EquiaffineImmersion
from src.services.example_registry import ExampleRegistry
from src.services.symmetric_spaces import SymmetricSpaceService, XPoint


@pytest.fixture
def hyperbola():
    return ExampleRegistry.example("hyperbola").imm


@pytest.fixture
def titeica():
    return ExampleRegistry.example("titeica", 2).imm


@pytest.fixture
def unimodular_form():
    """A unimodular positive form on ℝ³."""
    generator = np.array([[0.3, 0.1, -0.2], [0.1, -0.1, 0.05], [-0.2, 0.05, -0.2]])
    return expm(generator)


def test_pi_n1_is_unimodular():
    x = XPoint(v=np.array([1.0, 2.0, 0.5]), basis=np.array([[1.0, 0.0], [0.0, 1.0], [0.3, -0.2]]),
               q=np.array([[2.0, 0.3], [0.3, 1.0]]))
    point = SymmetricSpaceService.pi_n1(x)
    assert point.determinant_gap < 1e-12
    np.testing.assert_allclose(x.basis.T @ point.Q @ x.basis, x.q, atol=1e-12)
    np.testing.assert_allclose(x.basis.T @ point.Q @ x.v, 0.0, atol=1e-12)
    assert SymmetricSpaceService.literal_lambda_check(x) < 1e-10


def test_lambda_of_a_diagonal_triple():
    """v = 2e₃ over the coordinate plane with q = diag(2, 1) gives λ = 2."""
    x = XPoint(v=np.array([0.0, 0.0, 2.0]), basis=np.eye(3)[:, :2], q=np.diag([2.0, 1.0]))
    point = SymmetricSpaceService.pi_n1(x)
    np.testing.assert_allclose(point.Q, np.diag([2.0, 1.0, 0.5]), atol=1e-12)
    assert float(x.v @ point.Q @ x.v) == pytest.approx(2.0)
    assert SymmetricSpaceService.literal_lambda_check(x) < 1e-10


def test_lambda_check_on_a_skew_hyperplane(unimodular_form):
    x = SymmetricSpaceService.fiber_point(unimodular_form, [0.4, -1.0, 2.0])
    assert SymmetricSpaceService.literal_lambda_check(x) < 1e-10


def test_pi_n1_inverts_fiber_point(unimodular_form):
    """Every point of the fiber over Q projects back to Q."""
    x = SymmetricSpaceService.fiber_point(unimodular_form, [0.4, -1.0, 2.0])
    np.testing.assert_allclose(SymmetricSpaceService.pi_n1(x).Q, unimodular_form, atol=1e-12)


def test_pi_n1_requires_positive_form():
    x = XPoint(v=np.array([0.0, 1.0]), basis=np.array([[1.0], [0.0]]), q=np.array([[-1.0]]))
    with pytest.raises(NotPositive):
        SymmetricSpaceService.pi_n1(x)


def test_blaschke_lift_of_hyperbola_at_vertex(hyperbola):
    np.testing.assert_allclose(SymmetricSpaceService.blaschke_lift(hyperbola, [0.0]).Q, np.eye(2), atol=1e-12)


def test_tilde_lift_requires_hyperbolic_sphere(hyperbola):
    """Flipping ξ on the hyperbola makes h negative definite."""
    flipped = EquiaffineImmersion(f=hyperbola.f, xi=hyperbola.f.scaled(-1.0), name="flipped")
    with pytest.raises(NotHyperbolicSphere):
        SymmetricSpaceService.tilde_lift(flipped, [0.1])


def test_titeica_blaschke_lift_is_harmonic(titeica):
    """Hyperbolic affine spheres have harmonic Blaschke lifts."""
    report = SymmetricSpaceService.harmonicity_report(titeica, [[0.0, 0.0], [0.3, -0.2]], harm_tol=1e-5)
    assert report["harmonic"]
    assert report["tilde_harmonic"]
    assert report["sup"] < 1e-5
    assert len(report["tensions"]) == len(report["tilde_tensions"]) == 2
    np.testing.assert_allclose(report["tensions"], report["tilde_tensions"], atol=1e-5)


def test_unimodular_frame_needs_centroaffine_normalization(titeica):
    """The raw Țițeica frame has determinant 3√3; the normalized one is unimodular."""
    with pytest.raises(FrameNotUnimodular) as exc_info:
        SymmetricSpaceService.unimodular_frame(titeica, [0.0, 0.0])
    assert abs(exc_info.value.value) == pytest.approx(3.0 * np.sqrt(3.0), rel=1e-9)

    normalized = AffineStructureService.centroaffine_normalize(titeica)
    frame = SymmetricSpaceService.unimodular_frame(normalized, [0.2, 0.1])
    assert abs(np.linalg.det(frame)) == pytest.approx(1.0, abs=1e-10)


def test_maurer_cartan_blocks_of_hyperbola(hyperbola):
    """The horizontal-fiber block vanishes and the form is traceless."""
    normalized = AffineStructureService.centroaffine_normalize(hyperbola)
    blocks = SymmetricSpaceService.maurer_cartan_blocks(normalized, [0.3], [1.0])
    np.testing.assert_allclose(blocks["k_m"], 0.0, atol=1e-8)
    np.testing.assert_allclose(blocks["trace"], 0.0, atol=1e-8)


def test_phi_embedding_is_equivariant(unimodular_form):
    """Φ(M∗Q) and ι(M)Φ(Q) span the same positive subspace."""
    M = expm(np.array([[0.2, 0.5, 0.0], [-0.3, 0.1, 0.4], [0.0, 0.2, -0.3]]))
    assert SymmetricSpaceService.equivariance_residual(M, unimodular_form) < 1e-10
    graph = SymmetricSpaceService.phi_embed(unimodular_form)
    assert np.all(np.linalg.eigvalsh(graph.gram) > 0)


def test_phi_embedding_requires_positive_form():
    with pytest.raises(NotPositive):
        SymmetricSpaceService.phi_embed(np.diag([1.0, -1.0]))


def test_composed_map_is_harmonic(titeica):
    assert SymmetricSpaceService.composed_tension(titeica, [0.1, -0.2]) < 1e-4
