"""
σ-maps service: the immersions σ± = (±ξ, ν) into the split quadrics, their
induced metrics, mean curvature and projection to the orbit space.
"""
import logging
from dataclasses import dataclass
from typing import Dict, Optional, Sequence

import numpy as np
from scipy.linalg import block_diag

from src.config import settings
from src.errors import (
    DegenerateInducedMetric,
    DegenerateShapeOperator,
    RankDeficient,
    SingularM,
)
from src.kernel.calculus import MetricField, riemann_tensor
from src.kernel.charts import ChartMap, as_point, fd_derivative
from src.kernel.linalg import signature_of, solve
from src.services.affine_structure import AffineStructureService, EquiaffineImmersion
from src.services.split_space import (
    QuadricPoint,
    SplitSpaceService,
    gram_matrix,
    omega_matrix,
    phat_matrix,
)

logger = logging.getLogger(__name__)


@dataclass
class SigmaData:
    """σ± of an equiaffine immersion; kind is +1 for σ⁺ and −1 for σ⁻."""

    imm: EquiaffineImmersion
    kind: int
    sigma: ChartMap

    @property
    def n(self) -> int:
        return self.imm.n

    @property
    def m(self) -> int:
        return self.imm.n + 1


@dataclass
class MeanCurvature:
    """Second fundamental form II[:, i, j], mean curvature vector and metric."""

    II: np.ndarray
    H: np.ndarray
    metric: np.ndarray


class SigmaMapService:
    """Service for σ-maps and their submanifold geometry in the split quadrics."""

    @staticmethod
    def build_sigma(imm: EquiaffineImmersion, kind: int, rank_floor: Optional[float] = None) -> SigmaData:
        """
        Build σ⁺ = (ξ, ν) or σ⁻ = (−ξ, ν) = F∘σ⁺.

        Args:
            imm: Equiaffine immersion
            kind: +1 or −1
            rank_floor: Lower bound for the smallest singular value of dσ

        Raises:
            DegenerateShapeOperator: when det S vanishes at the base point
            RankDeficient: when dσ loses rank at the base point
        """
        if kind not in (1, -1):
            raise ValueError(f"Sigma kind must be +1 or -1, got {kind}")
        nu = AffineStructureService.conormal_map(imm)
        sigma = ChartMap.concat(imm.xi.scaled(float(kind)), nu)
        sd = SigmaData(imm=imm, kind=kind, sigma=sigma)
        data = AffineStructureService.decompose_structure(imm, imm.origin)
        determinant = float(np.linalg.det(data.S))
        if abs(determinant) < settings.SINGULAR_TOL:
            raise DegenerateShapeOperator(
                f"Shape operator of {imm.name} is singular (det S={determinant:.3e})",
                value=determinant,
            )
        SigmaMapService.rank_certificate(sd, imm.origin, rank_floor)
        logger.debug(f"Built sigma kind={kind:+d} for {imm.name}")
        return sd

    @staticmethod
    def rank_certificate(sd: SigmaData, p, rank_floor: Optional[float] = None) -> float:
        """Smallest singular value of dσ at p."""
        floor = settings.tolerance_profile(settings.DEFAULT_TOL_PROFILE).rank_floor if rank_floor is None else rank_floor
        smallest = float(np.linalg.svd(sd.sigma.jet(p, 1).J, compute_uv=False)[-1])
        if smallest < floor:
            raise RankDeficient(f"dσ has smallest singular value {smallest:.3e}", value=smallest)
        return smallest

    @staticmethod
    def point(sd: SigmaData, p) -> QuadricPoint:
        return QuadricPoint(sd.sigma(p), sd.kind)

    @staticmethod
    def quadric_residual(sd: SigmaData, p) -> float:
        value = sd.sigma(p)
        return abs(SplitSpaceService.ghat(value, value) - sd.kind)

    @staticmethod
    def chart_metric(chart: ChartMap, p) -> np.ndarray:
        """ĝ-induced metric JᵀĜJ of a chart into V."""
        J = chart.jet(p, 1).J
        metric = J.T @ gram_matrix(chart.target_dim // 2) @ J
        return 0.5 * (metric + metric.T)

    @staticmethod
    def induced_metric(sd: SigmaData, p):
        """
        Induced metric g_T of σ at p with its signature.

        Returns:
            (g_T, (p, q, z))
        """
        metric = SigmaMapService.chart_metric(sd.sigma, p)
        return metric, signature_of(metric)

    @staticmethod
    def expected_metric(sd: SigmaData, p) -> np.ndarray:
        """±h(S·, ·), the sign being the kind of σ."""
        data = AffineStructureService.decompose_structure(sd.imm, p)
        product = data.S.T @ data.h
        return sd.kind * 0.5 * (product + product.T)

    @staticmethod
    def chart_residuals(chart: ChartMap, p) -> Dict[str, float]:
        """
        Radial, horizontality and anti-invariance residuals of a chart into V.

        horizontality = max |ĝ(σ_*e_i, P̂σ)|, anti_invariance = max |ω̂(σ_*e_i, σ_*e_j)|.
        """
        jet = chart.jet(p, 1)
        m = chart.target_dim // 2
        G = gram_matrix(m)
        return {
            "radial": float(np.max(np.abs(jet.J.T @ G @ jet.value))),
            "horizontality": float(np.max(np.abs(jet.J.T @ G @ phat_matrix(m) @ jet.value))),
            "anti_invariance": float(np.max(np.abs(jet.J.T @ omega_matrix(m) @ jet.J))),
        }

    @staticmethod
    def horizontality_residual(sd: SigmaData, p) -> float:
        return SigmaMapService.chart_residuals(sd.sigma, p)["horizontality"]

    @staticmethod
    def anti_invariance_residual(sd: SigmaData, p) -> float:
        return SigmaMapService.chart_residuals(sd.sigma, p)["anti_invariance"]

    @staticmethod
    def gauged(sd: SigmaData, mu: ChartMap) -> ChartMap:
        """The lift (e^μ·first, e^{−μ}·second) of σ for a scalar chart μ."""
        first, second = sd.sigma.split([sd.m, sd.m])
        return ChartMap.concat(first.exp_gauged(mu, 1.0), second.exp_gauged(mu, -1.0))

    @staticmethod
    def mean_curvature_of_chart(chart: ChartMap, p) -> MeanCurvature:
        """
        Second fundamental form and mean curvature of a chart into a quadric.

        II(e_i, e_j) is the second derivative with its tangential and radial
        parts removed by ĝ-orthogonal projection; 𝐇 = (1/dim) Σ gⁱʲ II_ij.

        Raises:
            DegenerateInducedMetric: when the induced metric is degenerate
        """
        jet = chart.jet(p, 2)
        m = chart.target_dim // 2
        G = gram_matrix(m)
        dim = chart.domain_dim
        metric = 0.5 * (jet.J.T @ G @ jet.J + (jet.J.T @ G @ jet.J).T)
        if signature_of(metric)[2] > 0:
            raise DegenerateInducedMetric(
                f"Induced metric is degenerate at {as_point(p).tolist()}",
                value=float(np.linalg.det(metric)),
            )
        T = np.column_stack([jet.J, jet.value])
        gram = T.T @ G @ T
        second = jet.H.reshape(chart.target_dim, dim * dim)
        coefficients = solve(gram, T.T @ G @ second)
        II = (second - T @ coefficients).reshape(chart.target_dim, dim, dim)
        H = np.einsum("ij,aij->a", np.linalg.inv(metric), II) / dim
        return MeanCurvature(II=II, H=H, metric=metric)

    @staticmethod
    def second_fundamental_form(sd: SigmaData, p) -> np.ndarray:
        return SigmaMapService.mean_curvature_of_chart(sd.sigma, p).II

    @staticmethod
    def mean_curvature_direct(sd: SigmaData, p) -> np.ndarray:
        return SigmaMapService.mean_curvature_of_chart(sd.sigma, p).H

    @staticmethod
    def normal_radial_component(sd: SigmaData, p) -> float:
        """Largest P̂σ-component ĝ(II, P̂σ)/ĝ(P̂σ, P̂σ) of the second fundamental form."""
        II = SigmaMapService.second_fundamental_form(sd, p)
        reeb = phat_matrix(sd.m) @ sd.sigma(p)
        G = gram_matrix(sd.m)
        return float(np.max(np.abs(np.einsum("a,aij->ij", G @ reeb, II)))) / abs(float(reeb @ G @ reeb))

    @staticmethod
    def mean_curvature_pick(sd: SigmaData, p) -> np.ndarray:
        """
        Mean curvature from the dual Pick tensor.

        𝐇⁺ = −(1/2n) P̂σ⁺_*(h̄⁻¹t) with t = tr_{−h̄}C̄, and 𝐇⁻ = −F𝐇⁺.
        """
        p = as_point(p)
        imm = sd.imm
        _, trace = AffineStructureService.dual_pick(imm, p)
        dual = AffineStructureService.dual_structure(imm, p)
        jet_xi = imm.xi.jet(p, 1)
        jet_nu = AffineStructureService.conormal_map(imm).jet(p, 1)
        tangent = np.vstack([jet_xi.J, jet_nu.J]) @ np.linalg.solve(dual.h_bar, trace)
        positive = -phat_matrix(sd.m) @ tangent / (2.0 * imm.n)
        if sd.kind == 1:
            return positive
        return -SplitSpaceService.anti_isometry_F(positive)

    @staticmethod
    def anchor_residual(imm: EquiaffineImmersion, p) -> float:
        """
        Max over i, j, k of |h(∇̄_i e_j, S e_k) − h(∇_i(S e_j), e_k) + C̄_ijk|.
        """
        p = as_point(p)
        data = AffineStructureService.decompose_structure(imm, p)
        dual = AffineStructureService.dual_structure(imm, p)
        C_bar, _ = AffineStructureService.dual_pick(imm, p)
        dS = fd_derivative(
            lambda q: AffineStructureService.decompose_structure(imm, q).S,
            p,
            imm.fd_step,
        )
        # covariant[l, i, j] = (∇_{e_i}(S e_j))ˡ
        covariant = np.einsum("lji->lij", dS) + np.einsum("lim,mj->lij", data.gamma, data.S)
        first = np.einsum("lij,lw,wk->ijk", dual.gamma_bar, data.h, data.S)
        second = np.einsum("lij,lk->ijk", covariant, data.h)
        return float(np.max(np.abs(first - second + C_bar)))

    @staticmethod
    def maximality_verdict(sd: SigmaData, samples: Sequence, tol: float) -> Dict[str, object]:
        """Sup of ‖𝐇‖ over the samples and the verdict sup ≤ tol."""
        supremum = max(float(np.linalg.norm(SigmaMapService.mean_curvature_direct(sd, q))) for q in samples)
        return {"maximal": supremum <= tol, "sup": supremum}

    @staticmethod
    def projected_chart(sd: SigmaData) -> ChartMap:
        """σ̄ = τ∘σ, the gauged representative of the projected immersion."""
        return ChartMap.from_function(
            lambda q: SplitSpaceService.tau_project(QuadricPoint(sd.sigma(q), sd.kind)).vector,
            sd.n,
            2 * sd.m,
            domain=sd.sigma.domain,
            step=sd.imm.fd_step,
            name=f"tau[{sd.imm.name}]",
        )

    @staticmethod
    def lagrangian_residual(sd: SigmaData, p) -> float:
        """Max entry of the ω̂-pullback J̄ᵀŴJ̄ of the projected immersion."""
        J = SigmaMapService.projected_chart(sd).jet(p, 1).J
        return float(np.max(np.abs(J.T @ omega_matrix(sd.m) @ J)))

    @staticmethod
    def projected_metric(sd: SigmaData, p) -> np.ndarray:
        """Metric of the projected immersion, measured on the horizontal space."""
        jet = SigmaMapService.projected_chart(sd).jet(p, 1)
        horizontal = SplitSpaceService._horizontal_projector(jet.value) @ jet.J
        metric = horizontal.T @ gram_matrix(sd.m) @ horizontal
        return 0.5 * (metric + metric.T)

    @staticmethod
    def flowed_metric_report(sd: SigmaData, t: float, p) -> Dict[str, float]:
        """
        Compare the flowed lift Ψ_t∘σ with σ at p.

        The flowed affine metric is read off the lift as −ν_*(X)(x_*Y), where
        κx = e^tξ is the first block of Ψ_t∘σ and ν the conormal of f. It is
        set against −e^t h(·, S·) from the structure equations of f.

        Returns:
            Dict with the TauPoint distance, the ĝ-metric difference and the
            deviation of the flowed affine metric from −e^t h(·, S·)
        """
        p = as_point(p)
        flowed = sd.sigma.linear(np.diag(np.concatenate([np.exp(t) * np.ones(sd.m), np.exp(-t) * np.ones(sd.m)])))
        here = SplitSpaceService.tau_project(QuadricPoint(sd.sigma(p), sd.kind))
        there = SplitSpaceService.tau_project(QuadricPoint(flowed(p), sd.kind))
        metric_gap = np.max(np.abs(SigmaMapService.chart_metric(flowed, p) - SigmaMapService.chart_metric(sd.sigma, p)))
        position = sd.kind * flowed.jet(p, 1).J[: sd.m]
        nu = AffineStructureService.conormal_map(sd.imm).jet(p, 1).J
        pairing = -nu.T @ position
        data = AffineStructureService.decompose_structure(sd.imm, p)
        expected = -np.exp(t) * data.h @ data.S
        return {
            "tau_distance": here.distance(there),
            "metric": float(metric_gap),
            "scale": float(np.max(np.abs(0.5 * (pairing + pairing.T) - 0.5 * (expected + expected.T)))),
        }

    @staticmethod
    def iota(M) -> np.ndarray:
        """ι(M) = blockdiag(M, M⁻ᵀ)."""
        M = np.asarray(M, dtype=float)
        determinant = float(np.linalg.det(M))
        if abs(determinant) < settings.SINGULAR_TOL:
            raise SingularM(f"Matrix is singular (det={determinant:.3e})", value=determinant)
        return block_diag(M, np.linalg.inv(M).T)

    @staticmethod
    def equivariance_residual(imm: EquiaffineImmersion, M, kind: int, p) -> float:
        """|σ(M·f)(p) − ι(M)σ(f)(p)|."""
        original = SigmaMapService.build_sigma(imm, kind)
        moved = SigmaMapService.build_sigma(AffineStructureService.sl_transform(imm, M), kind)
        return float(np.linalg.norm(moved.sigma(p) - SigmaMapService.iota(M) @ original.sigma(p)))

    @staticmethod
    def closed_geodesic_report(sd: SigmaData, period: float, samples: Sequence) -> Dict[str, float]:
        """
        Periodicity gap |σ(s + period) − σ(s)| and the largest induced metric
        value on a one-dimensional chart.
        """
        gap = 0.0
        largest = -np.inf
        for s in samples:
            s = as_point(s)
            gap = max(gap, float(np.linalg.norm(sd.sigma(s + period) - sd.sigma(s))))
            largest = max(largest, float(SigmaMapService.chart_metric(sd.sigma, s)[0, 0]))
        return {"period_gap": gap, "max_metric": largest}

    @staticmethod
    def pseudoflat_chart(sd: SigmaData) -> ChartMap:
        """ς(p, t) = Ψ_t(σ(p)) on the (n+1)-dimensional product chart."""
        return SplitSpaceService.flowed_chart(sd.sigma)

    @staticmethod
    def pseudoflat_report(sd: SigmaData, p, t: float = 0.0) -> Dict[str, object]:
        """
        Signature, metric match with diag(g_T, 1), curvature and mean
        curvature of the pseudoflat chart at (p, t).
        """
        chart = SigmaMapService.pseudoflat_chart(sd)
        point = np.concatenate([as_point(p), [t]])
        metric = SigmaMapService.chart_metric(chart, point)
        expected = block_diag(SigmaMapService.chart_metric(sd.sigma, p), [[-float(sd.kind)]])
        field = MetricField(lambda c: SigmaMapService.chart_metric(chart, c), sd.n + 1, name="pseudoflat")
        curvature = riemann_tensor(field, point)
        mean = SigmaMapService.mean_curvature_of_chart(chart, point)
        return {
            "signature": signature_of(metric),
            "metric": float(np.max(np.abs(metric - expected))),
            "curvature": float(np.max(np.abs(curvature))),
            "mean_curvature": float(np.linalg.norm(mean.H)),
        }
