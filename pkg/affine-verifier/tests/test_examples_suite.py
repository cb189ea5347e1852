"""
Tests for the example registry and the verification suite.
"""
import json

import pytest

from src.config import settings
from src.errors import BadDimension, NotClosed, UnknownExample
from src.services.example_registry import ExampleRegistry
from src.services.verification_suite import (
    Check,
    CheckOutcome,
    VerificationSuite,
    _selected,
    _verdict,
    build_checks,
    report_to_json,
)


def test_registry_lists_examples():
    names = ExampleRegistry.names()
    assert names == sorted(names)
    assert {"hyperbola", "titeica", "quartic", "scrambled-titeica", "pseudoflat"} <= set(names)


def test_registry_rejects_unknown_name():
    with pytest.raises(UnknownExample):
        ExampleRegistry.example("catenoid")


def test_registry_rejects_unsupported_dimension():
    with pytest.raises(BadDimension):
        ExampleRegistry.example("titeica", 7)
    with pytest.raises(BadDimension):
        ExampleRegistry.example("hyperbola", 2)


def test_ellipse_parameters_flow_into_manifest():
    spec = ExampleRegistry.example("ellipse", params={"a": 3.0, "b": 0.5})
    assert spec.params == {"a": 3.0, "b": 0.5}
    manifest = spec.manifest_dict()
    assert manifest["mode"] == "analytic"
    assert manifest["sphere_type"] == "elliptic"
    assert "geodesic" in manifest["groups"]


def test_quartic_is_finite_difference():
    spec = ExampleRegistry.example("quartic")
    assert spec.mode == "fd"
    assert spec.manifest["affine_sphere"] is False


def test_check_lists_follow_groups():
    hyperbola = [check.name for check in build_checks(ExampleRegistry.example("hyperbola"))]
    assert hyperbola[0] == "structure.reconstruction"
    assert "boundary.coverage" in hyperbola
    assert "lift.non_lagrangian_control" not in hyperbola

    titeica = [check.name for check in build_checks(ExampleRegistry.example("titeica", 2))]
    assert "boundary.graph" in titeica
    assert "boundary.coverage" not in titeica
    assert "lift.non_lagrangian_control" in titeica

    scrambled = build_checks(ExampleRegistry.example("scrambled-titeica"))
    assert {check.group for check in scrambled} == {"lift", "scramble"}
    control = next(check for check in scrambled if check.name == "sigma.scramble_control")
    assert control.expectation == "fail"


def test_verdicts():
    assert _verdict(CheckOutcome(1e-9, 1e-8), "pass") == "pass"
    assert _verdict(CheckOutcome(1e-7, 1e-8), "pass") == "fail"
    assert _verdict(CheckOutcome(0.3, 1e-2, "ge"), "fail") == "expected-fail"
    assert _verdict(CheckOutcome(1e-4, 1e-2, "ge"), "fail") == "fail"
    assert _verdict(CheckOutcome(float("nan"), 1.0), "pass") == "fail"


def test_check_filter_matches_prefixes():
    assert _selected("sigma.quadric", None)
    assert _selected("sigma.quadric", ["sigma."])
    assert _selected("sigma.quadric", ["sigma.quadric"])
    assert not _selected("sigma.quadric", ["lift."])


def test_default_tolerance_profile_follows_mode():
    assert VerificationSuite.context(ExampleRegistry.example("hyperbola")).profile.name == "analytic"
    assert VerificationSuite.context(ExampleRegistry.example("quartic")).profile.name == "fd"
    assert VerificationSuite.context(ExampleRegistry.example("hyperbola"), tol_profile="fd").profile.name == "fd"
    assert settings.tolerance_profile("analytic").harm_tol == 1e-8
    assert settings.tolerance_profile("fd").harm_tol == 1e-4


def test_context_samples_stay_inside_trimmed_box():
    ctx = VerificationSuite.context(ExampleRegistry.example("titeica", 2), grid=11, seed=5)
    assert len(ctx.samples) == 25
    assert ctx.samples.min() >= -0.9 - 1e-12
    assert ctx.samples.max() <= 0.9 + 1e-12
    assert len(ctx.few) == 4
    assert len(ctx.nodes) == 121
    assert len(ctx.quadric_points) == 104


def test_failing_geometry_becomes_error_verdict():
    ctx = VerificationSuite.context(ExampleRegistry.example("hyperbola"))

    def broken(_):
        raise NotClosed("paths disagree", value=0.25)

    result = VerificationSuite._run_check(Check("lift.broken", "lift", broken), ctx, timings=False)
    assert result.verdict == "error"
    assert result.residual == 0.25
    assert result.message.startswith("NotClosed")


def test_filtered_structure_checks_pass_on_titeica():
    report = VerificationSuite.run_suite(ExampleRegistry.example("titeica", 2), checks_filter=["structure."])
    assert [check.name for check in report.checks] == [
        "structure.reconstruction",
        "structure.equiaffine",
        "structure.codazzi_h",
        "structure.codazzi_S",
        "structure.S_h_symmetry",
    ]
    assert report.passed
    assert report.meta.checks_filter == ["structure."]


def test_hyperbola_suite_passes():
    """Every hyperbola check passes or detects its negative control."""
    report = VerificationSuite.run_suite(ExampleRegistry.example("hyperbola"))
    failures = [(check.name, check.verdict, check.message) for check in report.checks
                if check.verdict not in ("pass", "expected-fail")]
    assert failures == []
    assert report.counts()["error"] == 0
    assert report.meta.tol_profile == "analytic"


def test_report_json_is_deterministic():
    spec = ExampleRegistry.example("hyperbola")
    first = report_to_json(VerificationSuite.run_suite(spec, checks_filter=["sigma.", "dual."], seed=3))
    second = report_to_json(VerificationSuite.run_suite(spec, checks_filter=["sigma.", "dual."], seed=3))
    assert first == second
    payload = json.loads(first)
    assert payload["meta"]["seed"] == 3
    assert all(check["seconds"] == 0.0 for check in payload["checks"])


def test_scrambled_lift_is_recovered():
    report = VerificationSuite.run_suite(ExampleRegistry.example("scrambled-titeica"))
    verdicts = {check.name: check.verdict for check in report.checks}
    assert verdicts["lift.gauge_recovery"] == "pass"
    assert verdicts["lift.horizontality"] == "pass"
    assert verdicts["sigma.scramble_control"] == "expected-fail"
    assert verdicts["lift.non_lagrangian_control"] == "expected-fail"


def test_quartic_trace_pick_is_a_control():
    """The quartic body is not an affine sphere, so its trace check is a negative control."""
    report = VerificationSuite.run_suite(ExampleRegistry.example("quartic"), checks_filter=["affine_sphere."])
    (check,) = report.checks
    assert check.expectation == "fail"
    assert check.comparison == "ge"
    assert check.provenance == "fd"
    assert check.verdict == "expected-fail"
    assert check.residual >= 1e-2


def test_quartic_tension_is_a_control():
    """The quartic Blaschke lift is not harmonic and both pipelines see it."""
    report = VerificationSuite.run_suite(ExampleRegistry.example("quartic"), checks_filter=["symmetric."])
    checks = {check.name: check for check in report.checks}
    tension = checks["symmetric.tension"]
    assert tension.expectation == "fail"
    assert tension.verdict == "expected-fail"
    assert tension.residual >= 1e-2


@pytest.mark.parametrize("n", [2, 3])
def test_titeica_boundary_checks_pass(n):
    report = VerificationSuite.run_suite(ExampleRegistry.example("titeica", n), checks_filter=["boundary."])
    failures = [(check.name, check.verdict, check.message) for check in report.checks
                if check.verdict not in ("pass", "expected-fail")]
    assert report.checks
    assert failures == []
    assert report.passed


@pytest.mark.parametrize(
    "name, n",
    [("titeica", 2), ("titeica", 3), ("ellipse", None), ("sphere", 2)],
)
def test_default_suite_passes(name, n):
    """Every check of the example passes or detects its negative control."""
    report = VerificationSuite.run_suite(ExampleRegistry.example(name, n))
    failures = [(check.name, check.verdict, check.message) for check in report.checks
                if check.verdict not in ("pass", "expected-fail")]
    assert failures == []
    assert report.passed


def test_analytic_tolerances_are_not_raised():
    """Analytic examples keep the profile tolerances; only FD-jet quantities use the fd profile."""
    report = VerificationSuite.run_suite(
        ExampleRegistry.example("titeica", 2),
        tol_profile="analytic",
        checks_filter=["structure.codazzi", "pick.", "affine_sphere.", "dual.", "sigma.", "symmetric."],
    )
    checks = {check.name: check for check in report.checks}
    assert checks["structure.codazzi_h"].tol == 1e-7
    assert checks["structure.codazzi_S"].tol == 1e-7
    assert checks["pick.total_symmetry"].tol == 1e-7
    assert checks["dual.metric"].tol == 1e-7
    assert checks["affine_sphere.trace_pick"].tol == 1e-6
    assert checks["sigma.mean_curvature_agreement"].tol == 1e-6
    assert checks["sigma.lagrangian_projection"].tol == 1e-8
    assert checks["symmetric.horizontal_block"].tol == 1e-8
    assert checks["structure.codazzi_h"].provenance == "analytic"

    tension = checks["symmetric.tension"]
    assert tension.tol == 1e-4
    assert tension.provenance == "fd"
    assert checks["symmetric.pipeline_agreement"].tol == 1e-4


def test_pipelines_agree_pointwise_on_titeica():
    ctx = VerificationSuite.context(ExampleRegistry.example("titeica", 2), grid=11)
    report = ctx.harmonicity()
    assert len(report["tensions"]) == len(ctx.few)
    gaps = [abs(a - b) for a, b in zip(report["tensions"], report["tilde_tensions"])]
    assert max(gaps) <= 1e-4


def test_split_checks_use_a_hundred_sphere_points():
    report = VerificationSuite.run_suite(ExampleRegistry.example("titeica", 2), checks_filter=["split."])
    checks = {check.name: check for check in report.checks}
    assert report.meta.quadric_points == 104
    assert checks["split.contact_volume"].comparison == "ge"
    assert checks["split.contact_volume"].residual >= 0.99
    assert checks["split.contact_volume"].message.startswith("104/104")
    assert report.passed


def test_meta_records_sample_counts():
    report = VerificationSuite.run_suite(
        ExampleRegistry.example("titeica", 2), grid=11, checks_filter=["structure.codazzi_h"]
    )
    assert report.meta.grid_nodes == 121
    assert report.meta.samples == 25
    assert report.meta.heavy_samples == 4


def test_step_is_carried_by_the_example():
    before = settings.FD_STEP
    spec = ExampleRegistry.example("titeica", 2, step=2e-3)
    assert spec.imm.fd_step == 2e-3
    assert ExampleRegistry.example("titeica", 2).imm.fd_step == before
    report = VerificationSuite.run_suite(spec, checks_filter=["structure.reconstruction"])
    assert report.meta.step == 2e-3
    assert settings.FD_STEP == before
