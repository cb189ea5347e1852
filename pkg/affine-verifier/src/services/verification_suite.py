"""
Verification suite: run the named checks of an example and assemble a report.

Each check returns a residual and the tolerance it is judged against. A
check either expects residual ≤ tol ("le") or residual ≥ tol ("ge", used
for rank floors and negative controls). Negative controls carry the
expectation "fail" and are reported as expected-fail when the control is
detected.
"""
import json
import logging
import math
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from scipy.linalg import expm

from src.config import ToleranceProfile, settings
from src.errors import NotStrictlyConvex
from src.kernel.charts import ChartMap, Jet
from src.kernel.grids import GridSpec
from src.kernel.linalg import signature_of
from src.schemas.schemas import CheckResult, Report, ReportMeta
from src.services.affine_structure import AffineStructureService, EquiaffineImmersion
from src.services.boundary import BoundaryService
from src.services.example_registry import ExampleSpec, scrambling_gauge
from src.services.horizontal_lift import HorizontalLiftService, LiftedImmersion
from src.services.sigma_maps import SigmaData, SigmaMapService
from src.services.split_space import QuadricPoint, SplitSpaceService, gram_matrix
from src.services.symmetric_spaces import SymmetricSpaceService

logger = logging.getLogger(__name__)

TRIM_FRACTION = 0.1
HEAVY_SAMPLES = 4
SPHERE_POINTS = 100
SPLIT_POINTS = 4
CONTACT_QUORUM = 0.99
ALGEBRA_DRAWS = 100
COVERAGE_TOL = 5e-2
COVERAGE_RAYS = 64
FLOW_TIME = 1.0
PSEUDOFLAT_TIME = 0.5
CONTROL_AMPLITUDE = 0.2


@dataclass
class CheckOutcome:
    """Raw outcome of a check before the verdict is assigned."""

    residual: float
    tol: float
    comparison: str = "le"
    message: Optional[str] = None


@dataclass
class Check:
    """A named check of one group; fd marks a second numerical derivative of a map without analytic jets."""

    name: str
    group: str
    run: Callable[["SuiteContext"], CheckOutcome]
    expectation: str = "pass"
    fd: bool = False


@dataclass
class SuiteContext:
    """
    Shared inputs of one suite run.

    nodes is the whole trimmed grid (Codazzi and Pick residuals), samples a
    seeded subset of it and few a smaller subset for nested derivatives.
    Derived objects (σ-maps, lifts, normalized immersions) are cached
    properties, and per-point results shared between checks go through memo.
    """

    spec: ExampleSpec
    profile: ToleranceProfile
    samples: np.ndarray
    nodes: np.ndarray
    seed: int
    s_max: float
    rays: int
    _memo: Dict[object, object] = field(default_factory=dict)
    _lock: threading.Lock = field(default_factory=threading.Lock)

    @property
    def imm(self) -> EquiaffineImmersion:
        return self.spec.imm

    @property
    def n(self) -> int:
        return self.spec.n

    @property
    def few(self) -> np.ndarray:
        """Evenly picked subset of the samples for nested finite differences."""
        if len(self.samples) <= HEAVY_SAMPLES:
            return self.samples
        picks = np.linspace(0, len(self.samples) - 1, HEAVY_SAMPLES).round().astype(int)
        return self.samples[picks]

    def tol(self, name: str, fd_jet: bool = False) -> float:
        """
        Tolerance `name` of the active profile.

        Quantities taking a second numerical derivative of a map without
        analytic jets (fd_jet) are judged by the fd profile whatever the
        example mode. Every tolerance of an fd-mode example is raised to the
        noise floor. Analytic examples otherwise get the profile value as is.
        """
        value = getattr(self.profile, name)
        if fd_jet:
            value = max(value, getattr(settings.tolerance_profile("fd"), name))
        if fd_jet or self.spec.mode == "fd":
            return max(value, self.profile.fd_noise_floor)
        return value

    def memo(self, key, compute: Callable[[], object]):
        with self._lock:
            if key in self._memo:
                return self._memo[key]
        value = compute()
        with self._lock:
            self._memo.setdefault(key, value)
            return self._memo[key]

    @cached_property
    def sigma_plus(self) -> SigmaData:
        return SigmaMapService.build_sigma(self.imm, 1, self.profile.rank_floor)

    @cached_property
    def sigma_minus(self) -> SigmaData:
        return SigmaMapService.build_sigma(self.imm, -1, self.profile.rank_floor)

    @cached_property
    def normalized(self) -> EquiaffineImmersion:
        return AffineStructureService.centroaffine_normalize(self.imm)

    @cached_property
    def gauge(self) -> ChartMap:
        return self.spec.mu_true if self.spec.mu_true is not None else scrambling_gauge(self.n)

    @cached_property
    def scrambled(self) -> LiftedImmersion:
        return LiftedImmersion.from_sigma(self.sigma_plus, self.gauge)

    @cached_property
    def horizontal(self) -> LiftedImmersion:
        return HorizontalLiftService.horizontal_lift(self.scrambled, self.tol("path_tol"))

    @cached_property
    def quadric_points(self) -> List[QuadricPoint]:
        """Seeded points, SPHERE_POINTS with κ = 1 followed by SPLIT_POINTS with κ = −1."""
        rng = np.random.default_rng(self.seed)
        m = self.n + 1
        points = []
        for kind, count in ((1, SPHERE_POINTS), (-1, SPLIT_POINTS)):
            for _ in range(count):
                a = rng.standard_normal(2 * m)
                if np.sign(SplitSpaceService.ghat(a, a)) != kind:
                    a = SplitSpaceService.anti_isometry_F(a)
                points.append(SplitSpaceService.quadric_point(SplitSpaceService.normalize(a), kind))
        return points

    def codazzi(self, q) -> Dict[str, float]:
        return self.memo(("codazzi", tuple(q)), lambda: AffineStructureService.codazzi_residuals(self.imm, q))

    def dual(self, q):
        return self.memo(("dual", tuple(q)), lambda: AffineStructureService.dual_structure(self.imm, q))

    def harmonicity(self) -> Dict[str, object]:
        return self.memo(
            "harmonicity",
            lambda: SymmetricSpaceService.harmonicity_report(self.imm, self.few, self.tol("harm_tol", fd_jet=True)),
        )

    def para_sasaki(self, index: int) -> Dict[str, float]:
        return self.memo(
            ("para_sasaki", index),
            lambda: SplitSpaceService.axioms_report(self.quadric_points[index], seed=self.seed + index),
        )

    def pseudoflat(self, q) -> Dict[str, object]:
        return self.memo(
            ("pseudoflat", tuple(q)),
            lambda: SigmaMapService.pseudoflat_report(self.sigma_minus, q, PSEUDOFLAT_TIME),
        )


def _max(values) -> float:
    values = list(values)
    return float(max(values)) if values else 0.0


def _random_sl(m: int, rng: np.random.Generator, scale: float = 0.3) -> np.ndarray:
    """exp of a random traceless matrix, well conditioned."""
    X = scale * rng.standard_normal((m, m))
    return expm(X - np.trace(X) / m * np.eye(m))


def _random_spd(m: int, rng: np.random.Generator, scale: float = 0.3) -> np.ndarray:
    X = scale * rng.standard_normal((m, m))
    X = 0.5 * (X + X.T)
    return expm(X - np.trace(X) / m * np.eye(m))


def _linear_gauge(n: int) -> ChartMap:
    """μ(p) = p₀."""
    gradient = np.eye(n)[:1]

    def jet_func(p, order):
        return Jet(np.array([p[0]]), gradient, np.zeros((1, n, n)) if order == 2 else None)

    return ChartMap(lambda p: np.array([p[0]]), n, 1, jet_func=jet_func, name="linear_gauge")


# Structure
def _reconstruction(ctx: SuiteContext) -> CheckOutcome:
    tol = ctx.profile.reconstruction_tol
    residual = _max(
        AffineStructureService.decompose_structure(ctx.imm, q, tol).reconstruction_residual for q in ctx.samples
    )
    return CheckOutcome(residual, tol)


def _equiaffine(ctx: SuiteContext) -> CheckOutcome:
    residual = _max(
        float(np.max(np.abs(AffineStructureService.decompose_structure(ctx.imm, q).tau))) for q in ctx.samples
    )
    return CheckOutcome(residual, ctx.tol("fd_tol"))


def _codazzi_key(key: str, tol_name: str) -> Callable[[SuiteContext], CheckOutcome]:
    def run(ctx: SuiteContext) -> CheckOutcome:
        residual = _max(ctx.codazzi(q)[key] for q in ctx.nodes)
        return CheckOutcome(residual, ctx.tol(tol_name))

    return run


def _shape_symmetry(ctx: SuiteContext) -> CheckOutcome:
    worst = 0.0
    for q in ctx.samples:
        data = AffineStructureService.decompose_structure(ctx.imm, q)
        product = data.S.T @ data.h
        worst = max(worst, float(np.max(np.abs(product - product.T))))
    return CheckOutcome(worst, ctx.tol("symmetry_tol"))


def _blaschke_normalization(ctx: SuiteContext) -> CheckOutcome:
    normalized = AffineStructureService.blaschke_normalize(ctx.imm)
    data = AffineStructureService.decompose_structure(normalized, normalized.origin)
    volume = float(np.sqrt(abs(np.linalg.det(data.h))))
    again = AffineStructureService.blaschke_normalize(normalized)
    idempotence = abs(float(again.xi(again.origin) @ normalized.xi(normalized.origin))
                      / float(normalized.xi(normalized.origin) @ normalized.xi(normalized.origin)) - 1.0)
    residual = max(abs(data.theta - volume), idempotence)
    return CheckOutcome(residual, ctx.tol("dual_tol"), message=f"theta={data.theta:.12g}")


# Pick tensor
def _trace_derivative(ctx: SuiteContext) -> CheckOutcome:
    worst = 0.0
    for q in ctx.few:
        data = AffineStructureService.decompose_structure(ctx.imm, q)
        T, _ = AffineStructureService.cubic_derivative_symmetry(ctx.imm, q)
        # trace of (∇ʰ_X A)(Y) from the lowered tensor
        traced = np.einsum("ijkw,wk->ij", T, np.linalg.inv(data.h))
        basis = np.eye(ctx.n)
        for i in range(ctx.n):
            for j in range(ctx.n):
                value = AffineStructureService.pick_trace_derivative(ctx.imm, q, basis[i], basis[j])
                worst = max(worst, abs(value - traced[i, j]))
    return CheckOutcome(worst, ctx.tol("identity_tol"))


def _derivative_symmetry(ctx: SuiteContext) -> CheckOutcome:
    residual = _max(AffineStructureService.cubic_derivative_symmetry(ctx.imm, q)[1] for q in ctx.few)
    return CheckOutcome(residual, ctx.tol("identity_tol"))


def _trace_pick(ctx: SuiteContext) -> CheckOutcome:
    report = AffineStructureService.is_proper_affine_sphere(ctx.imm, ctx.samples, ctx.tol("sphere_tol"))
    if ctx.spec.manifest.get("affine_sphere"):
        return CheckOutcome(report.max_residual, ctx.tol("sphere_tol"))
    return CheckOutcome(report.max_residual, ctx.profile.negative_control_floor, "ge")


def _sphere_verdict_rescale(ctx: SuiteContext) -> CheckOutcome:
    tol = ctx.tol("sphere_tol")
    rescaled = EquiaffineImmersion(
        f=ctx.imm.f, xi=ctx.imm.xi.scaled(2.5), orientation=ctx.imm.orientation,
        base_point=ctx.imm.base_point, name=f"rescaled[{ctx.imm.name}]", step=ctx.imm.step,
    )
    original = AffineStructureService.is_proper_affine_sphere(ctx.imm, ctx.samples, tol)
    scaled = AffineStructureService.is_proper_affine_sphere(rescaled, ctx.samples, tol)
    residual = abs(original.max_residual - scaled.max_residual)
    if original.verdict != scaled.verdict:
        residual = max(residual, 1.0)
    return CheckOutcome(residual, tol)


# Conormal and duality
def _conormal_duality(ctx: SuiteContext) -> CheckOutcome:
    worst = 0.0
    for q in ctx.samples:
        report = AffineStructureService.conormal_residuals(ctx.imm, q)
        worst = max(worst, report["normalization"], report["tangency"])
    return CheckOutcome(worst, ctx.tol("duality_tol"))


def _conormal_metric(ctx: SuiteContext) -> CheckOutcome:
    residual = _max(AffineStructureService.conormal_residuals(ctx.imm, q)["metric"] for q in ctx.samples)
    return CheckOutcome(residual, ctx.tol("dual_tol"))


def _dual_key(key: str) -> Callable[[SuiteContext], CheckOutcome]:
    def run(ctx: SuiteContext) -> CheckOutcome:
        residual = _max(ctx.dual(q).residuals[key] for q in ctx.samples)
        return CheckOutcome(residual, ctx.tol("dual_tol"))

    return run


# σ-maps
def _sigmas(ctx: SuiteContext) -> Sequence[SigmaData]:
    return (ctx.sigma_plus, ctx.sigma_minus)


def _quadric(ctx: SuiteContext) -> CheckOutcome:
    residual = _max(SigmaMapService.quadric_residual(sd, q) for sd in _sigmas(ctx) for q in ctx.samples)
    return CheckOutcome(residual, ctx.profile.quadric_tol)


def _rank(ctx: SuiteContext) -> CheckOutcome:
    smallest = min(
        SigmaMapService.rank_certificate(sd, q, 0.0) for sd in _sigmas(ctx) for q in ctx.samples
    )
    return CheckOutcome(smallest, ctx.profile.rank_floor, "ge")


def _induced_metric(ctx: SuiteContext) -> CheckOutcome:
    worst = 0.0
    for sd in _sigmas(ctx):
        for q in ctx.samples:
            metric, _ = SigmaMapService.induced_metric(sd, q)
            worst = max(worst, float(np.max(np.abs(metric - SigmaMapService.expected_metric(sd, q)))))
    return CheckOutcome(worst, ctx.tol("metric_tol"))


def _chart_key(key: str) -> Callable[[SuiteContext], CheckOutcome]:
    def run(ctx: SuiteContext) -> CheckOutcome:
        residual = _max(
            SigmaMapService.chart_residuals(sd.sigma, q)[key] for sd in _sigmas(ctx) for q in ctx.samples
        )
        return CheckOutcome(residual, ctx.tol("horizontality_tol"))

    return run


def _normal_radial(ctx: SuiteContext) -> CheckOutcome:
    residual = _max(SigmaMapService.normal_radial_component(sd, q) for sd in _sigmas(ctx) for q in ctx.samples)
    return CheckOutcome(residual, ctx.tol("mean_curvature_tol"))


def _mean_curvature_agreement(ctx: SuiteContext) -> CheckOutcome:
    residual = _max(
        float(np.linalg.norm(SigmaMapService.mean_curvature_direct(sd, q) - SigmaMapService.mean_curvature_pick(sd, q)))
        for sd in _sigmas(ctx)
        for q in ctx.samples
    )
    return CheckOutcome(residual, ctx.tol("mean_curvature_tol"))


def _anchor(ctx: SuiteContext) -> CheckOutcome:
    residual = _max(SigmaMapService.anchor_residual(ctx.imm, q) for q in ctx.few)
    return CheckOutcome(residual, ctx.tol("identity_tol"))


def _maximality(ctx: SuiteContext) -> CheckOutcome:
    tol = ctx.tol("mean_curvature_tol")
    verdict = SigmaMapService.maximality_verdict(ctx.sigma_minus, ctx.samples, tol)
    if ctx.spec.manifest.get("maximal"):
        return CheckOutcome(verdict["sup"], tol)
    return CheckOutcome(verdict["sup"], ctx.profile.negative_control_floor, "ge")


def _maximality_biconditional(ctx: SuiteContext) -> CheckOutcome:
    maximal = SigmaMapService.maximality_verdict(
        ctx.sigma_minus, ctx.samples, ctx.tol("mean_curvature_tol")
    )["maximal"]
    dual = AffineStructureService.is_proper_affine_sphere(
        AffineStructureService.dual_immersion(ctx.imm), ctx.few, ctx.tol("sphere_tol", fd_jet=True)
    )
    return CheckOutcome(
        0.0 if maximal == dual.verdict else 1.0,
        0.5,
        message=f"maximal={maximal} dual_sphere={dual.verdict} dual_trace={dual.max_residual:.3e}",
    )


def _anti_isometry(ctx: SuiteContext) -> CheckOutcome:
    worst = 0.0
    for q in ctx.samples:
        image = SplitSpaceService.anti_isometry_F(ctx.sigma_plus.sigma(q))
        worst = max(worst, float(np.linalg.norm(image - ctx.sigma_minus.sigma(q))))
        plus = SigmaMapService.chart_metric(ctx.sigma_plus.sigma, q)
        minus = SigmaMapService.chart_metric(ctx.sigma_minus.sigma, q)
        worst = max(worst, float(np.max(np.abs(plus + minus))))
    return CheckOutcome(worst, ctx.tol("metric_tol"))


def _lagrangian(ctx: SuiteContext) -> CheckOutcome:
    residual = _max(SigmaMapService.lagrangian_residual(sd, q) for sd in _sigmas(ctx) for q in ctx.few)
    return CheckOutcome(residual, ctx.tol("lagrangian_tol"))


def _projected_metric(ctx: SuiteContext) -> CheckOutcome:
    residual = _max(
        float(np.max(np.abs(SigmaMapService.projected_metric(sd, q) - SigmaMapService.chart_metric(sd.sigma, q))))
        for sd in _sigmas(ctx)
        for q in ctx.few
    )
    return CheckOutcome(residual, ctx.tol("lagrangian_tol"))


def _flow_projection(ctx: SuiteContext) -> CheckOutcome:
    worst = 0.0
    for q in ctx.samples:
        report = SigmaMapService.flowed_metric_report(ctx.sigma_plus, FLOW_TIME, q)
        worst = max(worst, report["tau_distance"], report["metric"])
    return CheckOutcome(worst, ctx.tol("flow_tol"))


def _flow_scale(ctx: SuiteContext) -> CheckOutcome:
    residual = _max(
        SigmaMapService.flowed_metric_report(ctx.sigma_plus, FLOW_TIME, q)["scale"] for q in ctx.samples
    )
    return CheckOutcome(residual, ctx.tol("metric_tol"))


def _scramble_control(ctx: SuiteContext) -> CheckOutcome:
    chart = SigmaMapService.gauged(ctx.sigma_plus, _linear_gauge(ctx.n))
    residual = _max(SigmaMapService.chart_residuals(chart, q)["horizontality"] for q in ctx.few)
    return CheckOutcome(residual, ctx.profile.negative_control_floor, "ge")


def _equivariance(ctx: SuiteContext) -> CheckOutcome:
    rng = np.random.default_rng(ctx.seed)
    M = _random_sl(ctx.n + 1, rng)
    residual = _max(
        SigmaMapService.equivariance_residual(ctx.imm, M, kind, q) for kind in (1, -1) for q in ctx.few
    )
    return CheckOutcome(residual, ctx.tol("metric_tol"))


def _closed_geodesic(ctx: SuiteContext) -> CheckOutcome:
    report = SigmaMapService.closed_geodesic_report(ctx.sigma_minus, ctx.spec.manifest["period"], ctx.samples)
    residual = max(report["period_gap"], max(report["max_metric"], 0.0))
    return CheckOutcome(residual, ctx.tol("metric_tol"), message=f"max_metric={report['max_metric']:.6g}")


# Split quadric
def _para_sasaki_axioms(ctx: SuiteContext) -> CheckOutcome:
    worst = 0.0
    for index in range(len(ctx.quadric_points)):
        report = ctx.para_sasaki(index)
        worst = max(worst, *(value for key, value in report.items() if key != "nijenhuis"))
    return CheckOutcome(worst, ctx.tol("sasaki_tol"))


def _nijenhuis(ctx: SuiteContext) -> CheckOutcome:
    residual = _max(ctx.para_sasaki(index)["nijenhuis"] for index in range(len(ctx.quadric_points)))
    return CheckOutcome(residual, ctx.tol("sasaki_tol", fd_jet=True))


def _contact_volume(ctx: SuiteContext) -> CheckOutcome:
    floor = ctx.profile.contact_floor_ratio * math.factorial(ctx.n)
    certificates = np.array([
        SplitSpaceService.contact_certificate(q, SplitSpaceService.tangent_basis(q)) for q in ctx.quadric_points
    ])
    share = float(np.mean(certificates >= floor))
    return CheckOutcome(
        share,
        CONTACT_QUORUM,
        "ge",
        message=f"{int(np.sum(certificates >= floor))}/{certificates.size} above {floor:.6g}, "
                f"min {certificates.min():.12g}, expected {math.factorial(ctx.n)}",
    )


def _split_conjugation(ctx: SuiteContext) -> CheckOutcome:
    rng = np.random.default_rng(ctx.seed)
    worst = 0.0
    for q in ctx.quadric_points:
        vectors = SplitSpaceService.random_tangent(q, rng, 3)
        worst = max(worst, *SplitSpaceService.conjugation_residuals(q, vectors).values())
        worst = max(worst, SplitSpaceService.flow_invariance_residual(q, vectors, FLOW_TIME))
    return CheckOutcome(worst, ctx.tol("sasaki_tol"))


def _para_kahler(ctx: SuiteContext) -> CheckOutcome:
    worst = 0.0
    for q in ctx.quadric_points:
        base = SplitSpaceService.para_kahler_base(SplitSpaceService.tau_project(q))
        identity = np.eye(base.P.shape[0])
        worst = max(
            worst,
            float(np.max(np.abs(base.P.T @ base.g @ base.P + base.g))),
            float(np.max(np.abs(base.P @ base.P - identity))),
            float(np.max(np.abs(base.omega + base.omega.T))),
            base.closedness,
            0.0 if base.signature == (ctx.n, ctx.n, 0) else 1.0,
        )
    return CheckOutcome(worst, ctx.tol("sasaki_tol", fd_jet=True))


# Horizontal lift
def _lift_closedness(ctx: SuiteContext) -> CheckOutcome:
    residual = HorizontalLiftService.closedness_residual(ctx.scrambled, ctx.samples)
    return CheckOutcome(residual, ctx.tol("path_tol"))


def _path_independence(ctx: SuiteContext) -> CheckOutcome:
    if ctx.n == 1:
        return CheckOutcome(0.0, ctx.tol("path_tol"), message="single path on a curve")
    forward = list(range(ctx.n))
    residual = _max(
        abs(
            HorizontalLiftService.path_integral(ctx.scrambled, q, forward)
            - HorizontalLiftService.path_integral(ctx.scrambled, q, forward[::-1])
        )
        for q in ctx.few
    )
    return CheckOutcome(residual, ctx.tol("path_tol"))


def _gauge_recovery(ctx: SuiteContext) -> CheckOutcome:
    gauge = HorizontalLiftService.integrate_gauge(ctx.scrambled, ctx.tol("path_tol"))
    recovered = gauge.values(ctx.few)
    truth = np.array([ctx.gauge(q)[0] for q in ctx.few])
    offset = recovered - truth
    residual = float(np.max(np.abs(offset - np.mean(offset))))
    return CheckOutcome(residual, ctx.tol("path_tol"))


def _lift_horizontality(ctx: SuiteContext) -> CheckOutcome:
    residual = _max(SigmaMapService.chart_residuals(ctx.horizontal.lift, q)["horizontality"] for q in ctx.few)
    return CheckOutcome(residual, ctx.tol("horizontality_tol"))


def _extracted_pair(ctx: SuiteContext) -> Dict[str, float]:
    def compute():
        _, _, report = HorizontalLiftService.extract_centroaffine_pair(
            ctx.horizontal,
            ctx.few,
            ctx.tol("horizontality_tol"),
            reference=ctx.imm.xi,
        )
        return report

    return ctx.memo("extracted_pair", compute)


def _lift_duality(ctx: SuiteContext) -> CheckOutcome:
    report = _extracted_pair(ctx)
    return CheckOutcome(max(report["duality"], report["tangency"]), ctx.tol("duality_tol"))


def _lift_homothety(ctx: SuiteContext) -> CheckOutcome:
    report = _extracted_pair(ctx)
    residual = max(report["homothety"], report["homothety_residual"])
    return CheckOutcome(residual, ctx.tol("homothety_tol"), message=f"ratio={report['ratio']:.12g}")


def _non_lagrangian_control(ctx: SuiteContext) -> CheckOutcome:
    m = ctx.n + 1
    direction = np.eye(m)[0] - np.eye(m)[1]
    perturbed = HorizontalLiftService.perturbed_lift(ctx.sigma_plus, direction, CONTROL_AMPLITUDE, ctx.n - 1)
    residual = HorizontalLiftService.closedness_residual(perturbed, [ctx.imm.origin])
    return CheckOutcome(residual, ctx.profile.negative_control_floor, "ge")


# Symmetric spaces
def _unimodular(ctx: SuiteContext) -> CheckOutcome:
    residual = _max(
        abs(abs(float(np.linalg.det(SymmetricSpaceService.unimodular_frame(ctx.normalized, q, np.inf)))) - 1.0)
        for q in ctx.samples
    )
    return CheckOutcome(residual, ctx.tol("block_tol"))


def _lift_factorization(ctx: SuiteContext) -> CheckOutcome:
    worst = 0.0
    for q in ctx.samples:
        tilde = SymmetricSpaceService.tilde_lift(ctx.normalized, q)
        Q = SymmetricSpaceService.pi_n1(tilde).Q
        again = SymmetricSpaceService.pi_n1(SymmetricSpaceService.fiber_point(Q, tilde.v)).Q
        worst = max(
            worst,
            abs(float(np.linalg.det(Q)) - 1.0),
            SymmetricSpaceService.literal_lambda_check(tilde),
            float(np.max(np.abs(again - Q))),
        )
    return CheckOutcome(worst, ctx.tol("block_tol"))


def _mc_blocks(ctx: SuiteContext, key: str) -> float:
    worst = 0.0
    for q in ctx.few:
        for X in np.eye(ctx.n):
            blocks = SymmetricSpaceService.maurer_cartan_blocks(ctx.normalized, q, X, ctx.tol("block_tol"))
            worst = max(worst, float(np.max(np.abs(blocks[key]))))
    return worst


def _horizontal_block(ctx: SuiteContext) -> CheckOutcome:
    return CheckOutcome(_mc_blocks(ctx, "k_m"), ctx.tol("block_tol"))


def _block_trace(ctx: SuiteContext) -> CheckOutcome:
    residual = max(_mc_blocks(ctx, "trace"), _mc_blocks(ctx, "diagonal_trace"))
    return CheckOutcome(residual, ctx.tol("block_tol"))


def _harmonic_or_control(ctx: SuiteContext, residual: float, tol: float) -> CheckOutcome:
    if ctx.spec.manifest.get("harmonic"):
        return CheckOutcome(residual, tol)
    return CheckOutcome(residual, ctx.profile.negative_control_floor, "ge")


def _tension(ctx: SuiteContext) -> CheckOutcome:
    return _harmonic_or_control(ctx, ctx.harmonicity()["sup"], ctx.tol("harm_tol", fd_jet=True))


def _tilde_tension(ctx: SuiteContext) -> CheckOutcome:
    return _harmonic_or_control(ctx, ctx.harmonicity()["tilde_sup"], ctx.tol("harm_tol", fd_jet=True))


def _pipeline_agreement(ctx: SuiteContext) -> CheckOutcome:
    report = ctx.harmonicity()
    summary = f"sup={report['sup']:.3e} tilde_sup={report['tilde_sup']:.3e}"
    if ctx.spec.manifest.get("harmonic"):
        gaps = np.abs(np.asarray(report["tensions"]) - np.asarray(report["tilde_tensions"]))
        return CheckOutcome(_max(gaps), ctx.tol("harm_tol", fd_jet=True), message=summary)
    # away from harmonic maps the two norms measure different tensors; both must see the tension
    return CheckOutcome(
        min(report["sup"], report["tilde_sup"]), ctx.profile.negative_control_floor, "ge", message=summary
    )


def _composed_tension(ctx: SuiteContext) -> CheckOutcome:
    residual = _max(
        SymmetricSpaceService.composed_tension(ctx.imm, q, ctx.normalized) for q in ctx.few[:2]
    )
    return _harmonic_or_control(ctx, residual, ctx.tol("composed_harm_tol", fd_jet=True))


def _iota_algebra(ctx: SuiteContext) -> CheckOutcome:
    rng = np.random.default_rng(ctx.seed)
    m = ctx.n + 1
    G = gram_matrix(m)
    worst = 0.0
    for _ in range(ALGEBRA_DRAWS):
        M = _random_sl(m, rng)
        N = _random_sl(m, rng)
        Q = _random_spd(m, rng)
        iota = SigmaMapService.iota(M)
        worst = max(
            worst,
            float(np.max(np.abs(iota.T @ G @ iota - G))),
            float(np.max(np.abs(SigmaMapService.iota(M @ N) - iota @ SigmaMapService.iota(N)))),
            SymmetricSpaceService.equivariance_residual(M, Q),
        )
    return CheckOutcome(worst, ctx.profile.algebra_tol)


# Boundary
def _rays(ctx: SuiteContext, count: Optional[int] = None):
    return [ctx.spec.ray(d) for d in ctx.spec.ray_directions(count or ctx.rays, ctx.seed)]


def _ray_limits(ctx: SuiteContext) -> CheckOutcome:
    worst = 0.0
    for ray in _rays(ctx):
        limit = BoundaryService.sigma_limit(ctx.sigma_minus, ray, ctx.s_max, ctx.spec.cone)
        worst = max(worst, limit.membership["max"], limit.ein)
    return CheckOutcome(worst, ctx.profile.boundary_tol)


def _flow_invariance(ctx: SuiteContext) -> CheckOutcome:
    residual = _max(BoundaryService.flow_invariance(ctx.sigma_minus, ray, ctx.s_max) for ray in _rays(ctx)[:2])
    return CheckOutcome(residual, ctx.profile.flow_tol)


def _flow_limits(ctx: SuiteContext) -> CheckOutcome:
    residual = _max(
        value for q in ctx.few for value in BoundaryService.flow_boundary(ctx.sigma_minus, q).values()
    )
    return CheckOutcome(residual, ctx.profile.flow_tol)


def _boundary_graph(ctx: SuiteContext) -> CheckOutcome:
    cone = ctx.spec.cone
    if not cone.strictly_convex:
        try:
            BoundaryService.tau_boundary_graph(ctx.sigma_minus, cone, _rays(ctx), ctx.s_max)
        except NotStrictlyConvex:
            return CheckOutcome(0.0, 0.5, message="flat faces rejected")
        return CheckOutcome(1.0, 0.5, message="cone with faces was accepted")
    report = BoundaryService.tau_boundary_graph(ctx.sigma_minus, cone, _rays(ctx), ctx.s_max, seed=ctx.seed)
    return CheckOutcome(max(report["incidence"], report["uniqueness"]), ctx.profile.boundary_tol)


def _boundary_coverage(ctx: SuiteContext) -> CheckOutcome:
    count = max(ctx.rays, COVERAGE_RAYS) if ctx.n == 2 else ctx.rays
    report = BoundaryService.tau_boundary_graph(
        ctx.sigma_minus, ctx.spec.cone, _rays(ctx, count), ctx.s_max, seed=ctx.seed
    )
    return CheckOutcome(report["coverage"], COVERAGE_TOL)


# Pseudoflat
def _pseudoflat_signature(ctx: SuiteContext) -> CheckOutcome:
    expected = (ctx.n + 1, 0, 0)
    mismatches = [tuple(ctx.pseudoflat(q)["signature"]) for q in ctx.few]
    bad = [s for s in mismatches if s != expected]
    return CheckOutcome(float(len(bad)), 0.5, message=f"signatures {sorted(set(mismatches))}")


def _pseudoflat_key(key: str, tol_name: str, fd: bool) -> Callable[[SuiteContext], CheckOutcome]:
    def run(ctx: SuiteContext) -> CheckOutcome:
        residual = _max(ctx.pseudoflat(q)[key] for q in ctx.few)
        return CheckOutcome(residual, ctx.tol(tol_name, fd_jet=fd))

    return run


def _pseudoflat_boundary(ctx: SuiteContext) -> CheckOutcome:
    report = BoundaryService.pseudoflat_boundary(ctx.sigma_minus, ctx.s_max)
    return CheckOutcome(max(report["ein"], report["vanishing_factor"]), ctx.profile.boundary_tol)


def build_checks(spec: ExampleSpec) -> List[Check]:
    """The ordered check list for an example, from its groups and manifest."""
    groups = set(spec.groups)
    manifest = spec.manifest
    checks: List[Check] = []

    def add(name, group, run, expectation="pass", fd=False):
        if group in groups:
            checks.append(Check(name, group, run, expectation, fd))

    sphere = bool(manifest.get("affine_sphere"))
    harmonic = bool(manifest.get("harmonic"))
    control = "pass" if sphere else "fail"

    add("structure.reconstruction", "structure", _reconstruction)
    add("structure.equiaffine", "structure", _equiaffine)
    add("structure.codazzi_h", "structure", _codazzi_key("codazzi_h", "codazzi_tol"))
    add("structure.codazzi_S", "structure", _codazzi_key("codazzi_S", "codazzi_tol"))
    add("structure.S_h_symmetry", "structure", _shape_symmetry)
    if manifest.get("sphere_type") is not None:
        add("blaschke.normalization", "structure", _blaschke_normalization)

    add("pick.total_symmetry", "pick", _codazzi_key("pick_symmetry", "codazzi_tol"))
    add("pick.cubic_form_relation", "pick", _codazzi_key("cubic_form", "symmetry_tol"))
    add("pick.trace_derivative", "pick", _trace_derivative)
    if sphere:
        add("pick.derivative_symmetry", "pick", _derivative_symmetry)
    add("affine_sphere.trace_pick", "pick", _trace_pick, control)
    add("rescale.sphere_verdict", "rescale", _sphere_verdict_rescale)

    add("dual.conormal_duality", "dual", _conormal_duality)
    add("dual.conormal_metric", "dual", _conormal_metric)
    add("dual.metric", "dual", _dual_key("dual_metric"))
    add("dual.compatibility", "dual", _dual_key("compatibility"))
    add("dual.levi_civita_mean", "dual", _dual_key("mean_connection"))

    add("sigma.quadric", "sigma", _quadric)
    add("sigma.rank", "sigma", _rank)
    add("sigma.induced_metric", "sigma", _induced_metric)
    add("sigma.horizontality", "sigma", _chart_key("horizontality"))
    add("sigma.anti_invariance", "sigma", _chart_key("anti_invariance"))
    add("sigma.normal_radial_component", "sigma", _normal_radial)
    add("sigma.mean_curvature_agreement", "sigma", _mean_curvature_agreement)
    add("sigma.anchor_identity", "sigma", _anchor)
    add("sigma.maximality", "sigma", _maximality, "pass" if manifest.get("maximal") else "fail")
    add("sigma.maximality_biconditional", "sigma", _maximality_biconditional, fd=True)
    add("sigma.anti_isometry", "sigma", _anti_isometry)
    add("sigma.lagrangian_projection", "sigma", _lagrangian)
    add("sigma.projected_metric", "sigma", _projected_metric)
    add("sigma.flow_projection", "sigma", _flow_projection)
    add("sigma.flow_metric_scale", "sigma", _flow_scale)
    add("sigma.equivariance", "sigma", _equivariance)
    add("sigma.closed_geodesic", "geodesic", _closed_geodesic)
    add("sigma.scramble_control", "scramble", _scramble_control, "fail")

    add("split.para_sasaki_axioms", "split", _para_sasaki_axioms)
    add("split.nijenhuis", "split", _nijenhuis, fd=True)
    add("split.contact_volume", "split", _contact_volume)
    add("split.anti_isometry", "split", _split_conjugation)
    add("split.para_kahler", "split", _para_kahler, fd=True)

    add("lift.closedness", "lift", _lift_closedness)
    add("lift.path_independence", "lift", _path_independence)
    add("lift.gauge_recovery", "lift", _gauge_recovery)
    add("lift.horizontality", "lift", _lift_horizontality)
    add("lift.duality", "lift", _lift_duality)
    add("lift.homothety", "lift", _lift_homothety)
    if spec.n >= 2:
        add("lift.non_lagrangian_control", "lift", _non_lagrangian_control, "fail")

    if harmonic:
        add("symmetric.unimodular", "symmetric", _unimodular)
        add("symmetric.horizontal_block", "symmetric", _horizontal_block)
        add("symmetric.block_trace", "symmetric", _block_trace)
    add("symmetric.lift_factorization", "symmetric", _lift_factorization)
    symmetric_expectation = "pass" if harmonic else "fail"
    add("symmetric.tension", "symmetric", _tension, symmetric_expectation, fd=True)
    add("symmetric.tilde_tension", "symmetric", _tilde_tension, symmetric_expectation, fd=True)
    add("symmetric.pipeline_agreement", "symmetric", _pipeline_agreement, fd=True)
    add("symmetric.composed_tension", "symmetric", _composed_tension, symmetric_expectation, fd=True)
    add("symmetric.iota_algebra", "symmetric", _iota_algebra)

    if spec.cone is not None:
        add("boundary.ray_limits", "boundary", _ray_limits)
        add("boundary.flow_invariance", "boundary", _flow_invariance)
        add("boundary.flow_limits", "boundary", _flow_limits)
        add("boundary.graph", "boundary", _boundary_graph)
        if spec.cone.strictly_convex and spec.n <= 2:
            add("boundary.coverage", "boundary", _boundary_coverage)

    add("pseudoflat.signature", "pseudoflat", _pseudoflat_signature)
    add("pseudoflat.metric", "pseudoflat", _pseudoflat_key("metric", "metric_tol", False))
    add("pseudoflat.flatness", "pseudoflat", _pseudoflat_key("curvature", "fd_tol", True), fd=True)
    add("pseudoflat.maximality", "pseudoflat", _pseudoflat_key("mean_curvature", "mean_curvature_tol", False))
    if spec.n == 1:
        add("pseudoflat.boundary", "pseudoflat", _pseudoflat_boundary)
    return checks


def _verdict(outcome: CheckOutcome, expectation: str) -> str:
    if not np.isfinite(outcome.residual):
        return "fail"
    if outcome.comparison == "ge":
        ok = outcome.residual >= outcome.tol
    else:
        ok = outcome.residual <= outcome.tol
    if expectation == "fail":
        return "expected-fail" if ok else "fail"
    return "pass" if ok else "fail"


def _selected(name: str, checks_filter: Optional[Sequence[str]]) -> bool:
    if not checks_filter:
        return True
    return any(name.startswith(item) for item in checks_filter)


class VerificationSuite:
    """Runs the checks of one example and builds its report."""

    @staticmethod
    def context(
        spec: ExampleSpec,
        grid: Optional[int] = None,
        tol_profile: Optional[str] = None,
        seed: int = 0,
        s_max: Optional[float] = None,
        rays: int = 8,
    ) -> SuiteContext:
        profile = settings.tolerance_profile(tol_profile or ("fd" if spec.mode == "fd" else "analytic"))
        points = grid or settings.DEFAULT_GRID
        box = GridSpec(spec.grid.lower, spec.grid.upper, points)
        margin = TRIM_FRACTION * 0.5 * min(hi - lo for lo, hi in zip(box.lower, box.upper))
        trimmed = box.trimmed(margin)
        samples = trimmed.sample(settings.MAX_SAMPLE_POINTS, seed)
        return SuiteContext(
            spec=spec,
            profile=profile,
            samples=samples,
            nodes=trimmed.nodes(),
            seed=seed,
            s_max=s_max or settings.S_MAX,
            rays=rays,
        )

    @staticmethod
    def _run_check(check: Check, ctx: SuiteContext, timings: bool) -> CheckResult:
        start = time.perf_counter()
        provenance = "fd" if check.fd or ctx.spec.mode == "fd" else "analytic"
        try:
            outcome = check.run(ctx)
            verdict = _verdict(outcome, check.expectation)
            residual = float(outcome.residual)
            result = CheckResult(
                name=check.name,
                group=check.group,
                verdict=verdict,
                residual=residual if np.isfinite(residual) else None,
                tol=outcome.tol,
                comparison=outcome.comparison,
                expectation=check.expectation,
                provenance=provenance,
                message=outcome.message,
            )
        except (ValueError, ArithmeticError, np.linalg.LinAlgError) as error:
            logger.warning(f"Check {check.name} raised {type(error).__name__}: {error}")
            result = CheckResult(
                name=check.name,
                group=check.group,
                verdict="error",
                residual=getattr(error, "value", None),
                tol=0.0,
                expectation=check.expectation,
                provenance=provenance,
                message=f"{type(error).__name__}: {error}",
            )
            if result.residual is not None and not np.isfinite(result.residual):
                result.residual = None
        if timings:
            result.seconds = time.perf_counter() - start
        return result

    @staticmethod
    def run_suite(
        spec: ExampleSpec,
        checks_filter: Optional[Sequence[str]] = None,
        grid: Optional[int] = None,
        tol_profile: Optional[str] = None,
        seed: int = 0,
        s_max: Optional[float] = None,
        rays: int = 8,
        timings: Optional[bool] = None,
    ) -> Report:
        """
        Run every selected check of an example.

        Args:
            spec: Example to verify
            checks_filter: Check names or prefixes to keep, all when empty
            grid: Grid points per axis
            tol_profile: Tolerance profile name, by default matching the example mode
            seed: Seed for sampling and random draws
            s_max: Largest ray parameter for boundary limits
            rays: Number of ray directions
            timings: Record wall time per check (defaults to RECORD_TIMINGS)

        Returns:
            Report whose checks keep the registration order
        """
        ctx = VerificationSuite.context(spec, grid, tol_profile, seed, s_max, rays)
        timings = settings.RECORD_TIMINGS if timings is None else timings
        selected = [check for check in build_checks(spec) if _selected(check.name, checks_filter)]
        logger.info(
            f"Running {len(selected)} checks on {spec.name} (n={spec.n}, profile={ctx.profile.name})"
        )

        with ThreadPoolExecutor(max_workers=settings.WORKERS) as pool:
            futures = [pool.submit(VerificationSuite._run_check, check, ctx, timings) for check in selected]
            results = [future.result() for future in futures]

        meta = ReportMeta(
            schema_version=settings.REPORT_SCHEMA_VERSION,
            example=spec.name,
            n=spec.n,
            mode=spec.mode,
            grid=grid or settings.DEFAULT_GRID,
            step=spec.imm.fd_step,
            tol_profile=ctx.profile.name,
            seed=seed,
            s_max=ctx.s_max,
            rays=rays,
            params=dict(spec.params),
            checks_filter=list(checks_filter) if checks_filter else None,
            grid_nodes=len(ctx.nodes),
            samples=len(ctx.samples),
            heavy_samples=len(ctx.few),
            quadric_points=len(ctx.quadric_points),
        )
        report = Report(meta=meta, checks=results)
        tally = report.counts()
        logger.info(
            f"Suite on {spec.name}: {tally['pass']} pass, {tally['expected-fail']} expected-fail, "
            f"{tally['fail']} fail, {tally['error']} error"
        )
        return report


def report_to_json(report: Report) -> str:
    """Deterministic JSON rendering of a report."""
    return json.dumps(report.model_dump(mode="json"), sort_keys=True, indent=2)
