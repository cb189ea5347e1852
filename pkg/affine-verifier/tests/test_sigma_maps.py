"""
Tests for σ-maps into the split quadrics.
"""
import numpy as np
import pytest

from src.errors import DegenerateShapeOperator, RankDeficient
from src.kernel.charts import ChartMap, Jet
from src.services.affine_structure import EquiaffineImmersion
from src.services.example_registry import ExampleRegistry
from src.services.sigma_maps import SigmaMapService


@pytest.fixture
def titeica_sigma():
    """σ⁻ of the Țițeica surface."""
    return SigmaMapService.build_sigma(ExampleRegistry.example("titeica", 2).imm, -1)


def test_sigma_lands_on_its_quadric(titeica_sigma):
    assert SigmaMapService.quadric_residual(titeica_sigma, [0.3, -0.4]) < 1e-12
    positive = SigmaMapService.build_sigma(titeica_sigma.imm, 1)
    assert SigmaMapService.quadric_residual(positive, [0.3, -0.4]) < 1e-12


def test_invalid_kind_is_rejected(titeica_sigma):
    with pytest.raises(ValueError):
        SigmaMapService.build_sigma(titeica_sigma.imm, 0)


def test_induced_metric_of_titeica(titeica_sigma):
    """σ⁻ of the Țițeica surface is Riemannian with metric h."""
    metric, signature = SigmaMapService.induced_metric(titeica_sigma, [0.0, 0.0])
    assert signature == (2, 0, 0)
    np.testing.assert_allclose(metric, [[2 / 3, 1 / 3], [1 / 3, 2 / 3]], atol=1e-12)
    np.testing.assert_allclose(metric, SigmaMapService.expected_metric(titeica_sigma, [0.0, 0.0]), atol=1e-12)


@pytest.mark.parametrize("name, expected", [("hyperbola", 1.0), ("circle", -1.0)])
def test_induced_metric_of_curves(name, expected):
    """The hyperbola gives a spacelike σ⁻, the circle a timelike one."""
    sd = SigmaMapService.build_sigma(ExampleRegistry.example(name).imm, -1)
    metric, _ = SigmaMapService.induced_metric(sd, [0.2])
    assert metric[0, 0] == pytest.approx(expected, abs=1e-12)


def test_sigma_is_horizontal_and_anti_invariant(titeica_sigma):
    residuals = SigmaMapService.chart_residuals(titeica_sigma.sigma, [0.1, 0.5])
    assert residuals["radial"] < 1e-12
    assert residuals["horizontality"] < 1e-12
    assert residuals["anti_invariance"] < 1e-12


def test_affine_sphere_gives_maximal_sigma(titeica_sigma):
    """Proper affine spheres have vanishing mean curvature of σ."""
    verdict = SigmaMapService.maximality_verdict(titeica_sigma, [[0.0, 0.0], [0.4, 0.2]], tol=1e-6)
    assert verdict["maximal"]
    assert SigmaMapService.normal_radial_component(titeica_sigma, [0.4, 0.2]) < 1e-10
    np.testing.assert_allclose(
        SigmaMapService.mean_curvature_pick(titeica_sigma, [0.4, 0.2]),
        SigmaMapService.mean_curvature_direct(titeica_sigma, [0.4, 0.2]),
        atol=1e-5,
    )


def test_anchor_identity(titeica_sigma):
    assert SigmaMapService.anchor_residual(titeica_sigma.imm, [0.2, -0.1]) < 1e-5


def test_projection_is_lagrangian(titeica_sigma):
    """τ∘σ is Lagrangian and keeps the induced metric."""
    assert SigmaMapService.lagrangian_residual(titeica_sigma, [0.2, 0.3]) < 1e-8
    metric, _ = SigmaMapService.induced_metric(titeica_sigma, [0.2, 0.3])
    np.testing.assert_allclose(SigmaMapService.projected_metric(titeica_sigma, [0.2, 0.3]), metric, atol=1e-8)


def test_flowed_lift_projects_to_same_point(titeica_sigma):
    report = SigmaMapService.flowed_metric_report(titeica_sigma, 0.7, [0.1, 0.1])
    assert report["tau_distance"] < 1e-12
    assert report["metric"] < 1e-12
    assert report["scale"] < 1e-8


@pytest.mark.parametrize("kind", [1, -1])
@pytest.mark.parametrize("t", [-0.5, 1.0])
def test_flowed_affine_metric_scales_with_flow(kind, t):
    """The conormal pairing of the flowed lift is e^t h(·, S·) for either sign."""
    sd = SigmaMapService.build_sigma(ExampleRegistry.example("titeica", 2).imm, kind)
    assert SigmaMapService.flowed_metric_report(sd, t, [0.2, -0.3])["scale"] < 1e-8


def test_flowed_affine_metric_of_sphere():
    sd = SigmaMapService.build_sigma(ExampleRegistry.example("sphere", 2).imm, 1)
    assert SigmaMapService.flowed_metric_report(sd, 1.0, [0.1, 0.2])["scale"] < 1e-8


def test_equivariance_under_sl(titeica_sigma):
    """σ(M·f) = ι(M)σ(f) for M in SL(3)."""
    M = np.array([[1.0, 0.5, 0.0], [0.0, 1.0, 0.0], [0.2, 0.0, 1.0]])
    assert SigmaMapService.equivariance_residual(titeica_sigma.imm, M, -1, [0.3, 0.1]) < 1e-12
    np.testing.assert_allclose(SigmaMapService.iota(np.diag([2.0, 0.5])), np.diag([2.0, 0.5, 0.5, 2.0]))


def test_circle_sigma_closes_up():
    """σ⁻ of the circle is a closed timelike geodesic of period 2π."""
    sd = SigmaMapService.build_sigma(ExampleRegistry.example("circle").imm, -1)
    report = SigmaMapService.closed_geodesic_report(sd, 2.0 * np.pi, [[0.0], [0.5], [-0.7]])
    assert report["period_gap"] < 1e-12
    assert report["max_metric"] < 0.0


def test_pseudoflat_chart_of_titeica_curve():
    """Flowing σ⁻ of the Țițeica curve sweeps a flat Riemannian surface."""
    sd = SigmaMapService.build_sigma(ExampleRegistry.example("titeica", 1).imm, -1)
    report = SigmaMapService.pseudoflat_report(sd, [0.2], t=0.3)
    assert report["signature"] == (2, 0, 0)
    assert report["metric"] < 1e-10
    assert report["curvature"] < 1e-5
    assert report["mean_curvature"] < 1e-8


def test_rank_floor_is_enforced(titeica_sigma):
    with pytest.raises(RankDeficient):
        SigmaMapService.rank_certificate(titeica_sigma, [0.0, 0.0], rank_floor=1e6)


def test_flat_transversal_has_degenerate_shape_operator():
    """A paraboloid with constant transversal has S = 0 and no σ-map."""

    def jet_func(p, order):
        value = np.array([p[0], p[1], 0.5 * float(p @ p)])
        first = np.vstack([np.eye(2), p[None, :]])
        second = np.zeros((3, 2, 2))
        second[2] = np.eye(2)
        return Jet(value, first, second if order == 2 else None)

    constant = np.array([0.0, 0.0, 1.0])
    f = ChartMap(lambda p: jet_func(p, 1).value, 2, 3, jet_func=jet_func)
    xi = ChartMap(
        lambda p: constant,
        2,
        3,
        jet_func=lambda p, order: Jet(constant, np.zeros((3, 2)), np.zeros((3, 2, 2)) if order == 2 else None),
    )
    with pytest.raises(DegenerateShapeOperator):
        SigmaMapService.build_sigma(EquiaffineImmersion(f=f, xi=xi, base_point=np.array([0.5, 0.5])), -1)
