"""
Tests for the affine structure service.
"""
import numpy as np
import pytest

from src.errors import IndefiniteMetric, NotCentroaffine, SingularM, TransversalityLost
from src.kernel.charts import ChartMap, Jet
from src.services.affine_structure import AffineStructureService, EquiaffineImmersion
from src.services.example_registry import ExampleRegistry


@pytest.fixture
def titeica():
    """Țițeica surface xyz = 1 with ξ = f."""
    return ExampleRegistry.example("titeica", 2).imm


@pytest.fixture
def hyperbola():
    return ExampleRegistry.example("hyperbola").imm


@pytest.fixture
def paraboloid():
    """Graph of ½|p|² with the constant transversal e₃."""

    def jet_func(p, order):
        value = np.array([p[0], p[1], 0.5 * float(p @ p)])
        first = np.vstack([np.eye(2), p[None, :]])
        second = np.zeros((3, 2, 2))
        second[2] = np.eye(2)
        return Jet(value, first, second if order == 2 else None)

    f = ChartMap(lambda p: jet_func(p, 1).value, 2, 3, jet_func=jet_func, name="paraboloid")
    xi = ChartMap(
        lambda p: np.array([0.0, 0.0, 1.0]),
        2,
        3,
        jet_func=lambda p, order: Jet(np.array([0.0, 0.0, 1.0]), np.zeros((3, 2)),
                                      np.zeros((3, 2, 2)) if order == 2 else None),
        name="e3",
    )
    return EquiaffineImmersion(f=f, xi=xi, base_point=np.array([0.5, 0.5]), name="paraboloid")


def test_titeica_structure_at_origin(titeica):
    """Closed-form structure data of the Țițeica surface at the origin."""
    data = AffineStructureService.decompose_structure(titeica, [0.0, 0.0])

    np.testing.assert_allclose(data.h, [[2 / 3, 1 / 3], [1 / 3, 2 / 3]], atol=1e-12)
    assert data.gamma[0, 0, 0] == pytest.approx(1 / 3, abs=1e-12)
    assert data.gamma[1, 0, 0] == pytest.approx(-2 / 3, abs=1e-12)
    np.testing.assert_allclose(data.S, -np.eye(2), atol=1e-12)
    np.testing.assert_allclose(data.tau, 0.0, atol=1e-12)
    assert data.theta == pytest.approx(3.0, abs=1e-12)


def test_hyperbola_structure(hyperbola):
    """The hyperbola has h = 1, S = −1 and θ = −1 before normalization."""
    data = AffineStructureService.decompose_structure(hyperbola, [0.4])
    assert data.h[0, 0] == pytest.approx(1.0, abs=1e-12)
    assert data.S[0, 0] == pytest.approx(-1.0, abs=1e-12)
    assert data.theta == pytest.approx(-1.0, abs=1e-12)


def test_tangent_transversal_is_rejected(titeica):
    """A transversal field lying in the tangent plane loses transversality."""
    tangent = ChartMap(
        lambda p: titeica.f.jet(p, 1).J[:, 0],
        2,
        3,
        name="tangent",
    )
    broken = EquiaffineImmersion(f=titeica.f, xi=tangent, name="broken")
    with pytest.raises(TransversalityLost):
        AffineStructureService.decompose_structure(broken, [0.1, 0.2])


def test_blaschke_normalization_of_titeica(titeica):
    """ξ is rescaled by 3^(−3/4) and afterwards |θ| equals the metric volume."""
    samples = [[0.0, 0.0], [0.3, -0.2], [-0.5, 0.4]]
    normalized = AffineStructureService.blaschke_normalize(titeica, samples)
    np.testing.assert_allclose(normalized.xi([0.0, 0.0]), 3 ** -0.75 * np.ones(3), atol=1e-12)

    data = AffineStructureService.decompose_structure(normalized, [0.3, -0.2])
    assert abs(data.theta) == pytest.approx(np.sqrt(np.linalg.det(data.h)), rel=1e-10)


def test_blaschke_normalization_flips_orientation(hyperbola):
    """The hyperbola keeps c = 1 and gains a positive θ."""
    normalized = AffineStructureService.blaschke_normalize(hyperbola, [[0.0], [0.5]])
    data = AffineStructureService.decompose_structure(normalized, [0.5])
    assert data.theta == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(normalized.xi([0.5]), hyperbola.xi([0.5]), atol=1e-12)


def test_blaschke_normalization_rejects_indefinite_metric():
    """Hyperbolic paraboloid z = xy has an indefinite affine metric."""

    def jet_func(p, order):
        value = np.array([p[0], p[1], p[0] * p[1]])
        first = np.array([[1.0, 0.0], [0.0, 1.0], [p[1], p[0]]])
        second = np.zeros((3, 2, 2))
        second[2] = [[0.0, 1.0], [1.0, 0.0]]
        return Jet(value, first, second if order == 2 else None)

    f = ChartMap(lambda p: jet_func(p, 1).value, 2, 3, jet_func=jet_func)
    xi = ChartMap(
        lambda p: np.array([0.0, 0.0, 1.0]),
        2,
        3,
        jet_func=lambda p, order: Jet(np.array([0.0, 0.0, 1.0]), np.zeros((3, 2)),
                                      np.zeros((3, 2, 2)) if order == 2 else None),
    )
    with pytest.raises(IndefiniteMetric):
        AffineStructureService.blaschke_normalize(EquiaffineImmersion(f=f, xi=xi))


def test_centroaffine_normalization_rejects_paraboloid(paraboloid):
    """A constant transversal is not centroaffine."""
    with pytest.raises(NotCentroaffine):
        AffineStructureService.centroaffine_normalize(paraboloid)


def test_conormal_of_titeica(titeica):
    """ν(0) = (1/3, 1/3, 1/3) and the closed form satisfies the conormal relations."""
    np.testing.assert_allclose(AffineStructureService.conormal(titeica, [0.0, 0.0]), np.ones(3) / 3, atol=1e-12)
    residuals = AffineStructureService.conormal_residuals(titeica, [0.2, -0.3])
    assert max(residuals.values()) < 1e-12


def test_codazzi_and_pick_symmetry(titeica):
    """Codazzi equations, h-symmetry of S and total symmetry of C hold."""
    residuals = AffineStructureService.codazzi_residuals(titeica, [0.1, 0.2])
    assert residuals["codazzi_h"] < 1e-8
    assert residuals["codazzi_S"] < 1e-8
    assert residuals["shape_symmetry"] < 1e-12
    assert residuals["pick_symmetry"] < 1e-8
    assert residuals["cubic_form"] < 1e-12
    assert residuals["equiaffine"] < 1e-12


def test_titeica_is_a_proper_affine_sphere(titeica):
    """Tr_h(C) vanishes on the Țițeica surface."""
    report = AffineStructureService.is_proper_affine_sphere(
        titeica, [[0.0, 0.0], [0.4, -0.1]], sphere_tol=1e-6
    )
    assert report.verdict
    assert report.samples == 2


def test_proper_sphere_test_requires_centroaffine(paraboloid):
    with pytest.raises(NotCentroaffine):
        AffineStructureService.is_proper_affine_sphere(paraboloid, [[0.5, 0.5]], sphere_tol=1e-6)


def test_dual_structure_relations(titeica):
    """h̄ = h(S·,·), the compatibility identity and ∇ʰ = ½(∇ + ∇̄)."""
    dual = AffineStructureService.dual_structure(titeica, [0.2, 0.1])
    assert dual.residuals["dual_metric"] < 1e-10
    assert dual.residuals["compatibility"] < 1e-7
    assert dual.residuals["mean_connection"] < 1e-6


def test_sl_transform_preserves_invariants(titeica):
    """h and S are SL-invariant and θ scales by det M."""
    M = np.array([[2.0, 0.0, 0.0], [1.0, 0.5, 0.0], [0.0, 0.0, 1.0]])
    moved = AffineStructureService.sl_transform(titeica, M)
    before = AffineStructureService.decompose_structure(titeica, [0.3, 0.1])
    after = AffineStructureService.decompose_structure(moved, [0.3, 0.1])
    np.testing.assert_allclose(after.h, before.h, atol=1e-12)
    np.testing.assert_allclose(after.S, before.S, atol=1e-12)
    assert after.theta == pytest.approx(before.theta, abs=1e-12)
    assert AffineStructureService.conormal_residuals(moved, [0.3, 0.1])["normalization"] < 1e-12


def test_sl_transform_rejects_singular_matrix(titeica):
    with pytest.raises(SingularM):
        AffineStructureService.sl_transform(titeica, np.diag([1.0, 1.0, 0.0]))
