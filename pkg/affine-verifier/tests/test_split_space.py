"""
Tests for the split space service: forms, quadrics, gauge and para-Sasaki data.
"""
import math

import numpy as np
import pytest

from src.errors import DegenerateFrame, NotOnQuadric, NotTangent
from src.services.split_space import SplitSpaceService, gram_matrix


@pytest.fixture(params=[1, -1], ids=["timelike", "spacelike"])
def quadric_point(request):
    """A generic point on the quadric ĝ = κ in ℝ³ ⊕ ℝ³."""
    kind = request.param
    vector = np.array([0.7, -0.2, 0.4, kind * 0.9, 0.3, 0.5])
    vector = SplitSpaceService.normalize(vector)
    return SplitSpaceService.quadric_point(vector, kind)


def test_forms_on_basis_vectors():
    """ĝ pairs x with y, ω̂ is ĝ twisted by P̂."""
    assert SplitSpaceService.ghat([1, 2, 3, 4], [1, 2, 3, 4]) == pytest.approx(11.0)
    e1 = np.array([1.0, 0.0, 0.0, 0.0])
    e3 = np.array([0.0, 0.0, 1.0, 0.0])
    assert SplitSpaceService.omegahat(e1, e3) == pytest.approx(-0.5)
    assert SplitSpaceService.omegahat(e3, e1) == pytest.approx(0.5)
    np.testing.assert_allclose(gram_matrix(1), [[0.0, 0.5], [0.5, 0.0]])


def test_model_isometry_matches_diagonal_norm():
    """(x, y) ↦ (x + y, x − y) turns |x|² − |y|² into ĝ."""
    image = SplitSpaceService.model_isometry([2.0, 0.0], [1.0, 0.0])
    assert SplitSpaceService.ghat(image, image) == pytest.approx(3.0)


def test_anti_isometry_reverses_form():
    a = np.array([1.0, 2.0, 3.0, -1.0])
    b = np.array([0.5, -1.0, 2.0, 4.0])
    F = SplitSpaceService.anti_isometry_F
    assert SplitSpaceService.ghat(F(a), F(b)) == pytest.approx(-SplitSpaceService.ghat(a, b))
    np.testing.assert_allclose(F(SplitSpaceService.phat(a)), SplitSpaceService.phat(F(a)))


def test_quadric_membership():
    """Points off ĝ = κ and null vectors are rejected."""
    point = SplitSpaceService.quadric_point([1.0, 0.0, 1.0, 0.0])
    assert point.kind == 1
    with pytest.raises(NotOnQuadric):
        SplitSpaceService.quadric_point([1.0, 0.0, 2.0, 0.0], kind=1)
    with pytest.raises(NotOnQuadric):
        SplitSpaceService.normalize([1.0, 0.0, 0.0, 0.0])


def test_tau_projection_balances_halves():
    """(2, 0, ½, 0) is gauged to (1, 0, 1, 0)."""
    q = SplitSpaceService.quadric_point([2.0, 0.0, 0.5, 0.0], kind=1)
    tp = SplitSpaceService.tau_project(q)
    np.testing.assert_allclose(tp.vector, [1.0, 0.0, 1.0, 0.0], atol=1e-12)
    assert tp.sign == 1


def test_tau_projection_is_orbit_invariant(quadric_point):
    """Points on one ℝ-orbit share the gauged representative."""
    moved = SplitSpaceService.quadric_point(
        SplitSpaceService.r_action(0.8, quadric_point.vector), quadric_point.kind, tol=1e-9
    )
    first = SplitSpaceService.tau_project(quadric_point)
    second = SplitSpaceService.tau_project(moved)
    assert first.distance(second) < 1e-12


def test_projective_incidence_round_trip(quadric_point):
    """The pair ([x], [y]) determines the gauged point up to sign."""
    tp = SplitSpaceService.tau_project(quadric_point)
    x_hat, y_hat, pairing = SplitSpaceService.projective_incidence(tp)
    assert np.sign(pairing) == quadric_point.kind
    rebuilt = SplitSpaceService.incidence_to_tau(x_hat, y_hat, quadric_point.kind)
    assert rebuilt.distance(tp) < 1e-10


def test_incident_pairs_are_not_on_a_quadric():
    with pytest.raises(NotOnQuadric):
        SplitSpaceService.incidence_to_tau([1.0, 0.0], [0.0, 1.0], 1)


def test_reeb_field_normalizes_contact_form(quadric_point):
    """ζ = P̂q is tangent and η(ζ) = 1."""
    zeta = SplitSpaceService.reeb(quadric_point)
    assert SplitSpaceService.contact_eta(quadric_point, zeta) == pytest.approx(1.0, abs=1e-12)


def test_contact_form_requires_tangent_vectors(quadric_point):
    with pytest.raises(NotTangent):
        SplitSpaceService.contact_eta(quadric_point, quadric_point.vector)


@pytest.mark.parametrize("m", [2, 3])
def test_contact_certificate_is_factorial(m):
    """η ∧ (dη)ⁿ on an orthonormal tangent frame scales to n!."""
    vector = np.concatenate([np.ones(m), np.ones(m) / m])
    q = SplitSpaceService.quadric_point(vector, kind=1)
    frame = SplitSpaceService.tangent_basis(q)
    assert frame.shape == (2 * m, 2 * m - 1)
    certificate = SplitSpaceService.contact_certificate(q, frame)
    assert certificate == pytest.approx(math.factorial(m - 1), rel=1e-9)


def test_contact_condition_rejects_short_frame(quadric_point):
    frame = SplitSpaceService.tangent_basis(quadric_point)[:, :2]
    with pytest.raises(DegenerateFrame):
        SplitSpaceService.contact_condition(quadric_point, frame)


def test_para_sasaki_axioms(quadric_point):
    """φζ = 0, η∘φ = 0, φ² = I − η⊗ζ, compatibility, dη = g(·, φ·) and normality."""
    report = SplitSpaceService.axioms_report(quadric_point, seed=7)
    for key in ("phi_zeta", "eta_phi", "phi_squared", "metric", "d_eta"):
        assert report[key] < 1e-10, key
    assert report["nijenhuis"] < 1e-5


def test_anti_isometry_conjugates_structures(quadric_point):
    """F carries the structure at q to the structure at F(q)."""
    vectors = SplitSpaceService.random_tangent(quadric_point, np.random.default_rng(1), 4)
    residuals = SplitSpaceService.conjugation_residuals(quadric_point, vectors)
    assert max(residuals.values()) < 1e-10


def test_contact_form_is_flow_invariant(quadric_point):
    vectors = SplitSpaceService.random_tangent(quadric_point, np.random.default_rng(2), 3)
    assert SplitSpaceService.flow_invariance_residual(quadric_point, vectors, 1.3) < 1e-10


def test_para_kahler_base_is_split_and_closed(quadric_point):
    """The horizontal space carries a split metric with 𝐏² = I and closed 𝛚."""
    tp = SplitSpaceService.tau_project(quadric_point)
    base = SplitSpaceService.para_kahler_base(tp)
    assert base.signature == (2, 2, 0)
    np.testing.assert_allclose(base.P @ base.P, np.eye(4), atol=1e-10)
    assert base.closedness < 1e-5
