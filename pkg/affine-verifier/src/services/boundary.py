"""
Boundary asymptotics service: projective limits of σ⁻ along rays, the
hyperplane boundary set of a convex cone and the boundary of the flowed
family.
"""
import logging
import os
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.errors import NoConvergence, NotStrictlyConvex, UnsupportedCone
from src.kernel.charts import ChartMap, as_point
from src.services.sigma_maps import SigmaData, SigmaMapService
from src.services.split_space import SplitSpaceService

logger = logging.getLogger(__name__)

CAUCHY_RATIO = 0.9
LIMIT_TOL = 1e-8
MAX_DOUBLINGS = 5
CONE_KINDS = ("orthant", "segment", "lorentz")


@dataclass
class ProjPoint:
    """A projective point stored as a unit vector whose first significant entry is positive."""

    vector: np.ndarray

    @classmethod
    def of(cls, v) -> "ProjPoint":
        v = as_point(v)
        scale = float(np.max(np.abs(v))) if v.size else 0.0
        if scale == 0.0:
            raise ValueError("The zero vector has no projective class")
        # far ray samples overflow a plain norm
        v = v / scale
        v = v / float(np.linalg.norm(v))
        significant = np.flatnonzero(np.abs(v) > 1e-12)
        if v[significant[0]] < 0:
            v = -v
        return cls(vector=v)

    def distance(self, other: "ProjPoint") -> float:
        """Angle between the lines, in [0, π/2]."""
        cosine = float(self.vector @ other.vector)
        sine = float(np.linalg.norm(self.vector - cosine * other.vector))
        return float(np.arctan2(sine, abs(cosine)))


@dataclass
class ConvexCone:
    """
    A built-in sharp convex cone in ℝᵐ.

    orthant: all coordinates non-negative. segment: {αa + βb | α, β ≥ 0} in ℝ².
    lorentz: L·{w₀ ≥ |w̄|}.
    """

    kind: str
    dim: int
    params: Dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in CONE_KINDS:
            raise UnsupportedCone(f"Unknown cone kind '{self.kind}'")

    @property
    def strictly_convex(self) -> bool:
        return self.kind in ("segment", "lorentz")

    def _coordinates(self, v: np.ndarray) -> np.ndarray:
        if self.kind == "segment":
            return np.linalg.solve(np.column_stack([self.params["a"], self.params["b"]]), v)
        if self.kind == "lorentz":
            return np.linalg.solve(self.params["L"], v)
        return v

    def boundary_residual(self, v) -> float:
        """Distance-like residual of the line [v] from the cone boundary, either sign."""
        v = ProjPoint.of(v).vector
        residuals = []
        for sign in (1.0, -1.0):
            w = self._coordinates(sign * v)
            if self.kind == "lorentz":
                spatial = float(np.linalg.norm(w[1:]))
                residuals.append((abs(w[0] - spatial) + max(0.0, -w[0])) / float(np.linalg.norm(w)))
            else:
                scale = float(np.linalg.norm(w))
                residuals.append((abs(float(np.min(w))) + max(0.0, -float(np.min(w)))) / scale)
        return min(residuals)

    def support_residual(self, phi) -> float:
        """How far the line [φ] is from a functional non-negative on the cone."""
        phi = ProjPoint.of(phi).vector
        residuals = []
        for sign in (1.0, -1.0):
            functional = sign * phi
            if self.kind == "orthant":
                residuals.append(max(0.0, -float(np.min(functional))))
            elif self.kind == "segment":
                values = [functional @ self.params["a"], functional @ self.params["b"]]
                residuals.append(max(0.0, -float(min(values))))
            else:
                pulled = self.params["L"].T @ functional
                residuals.append(max(0.0, float(np.linalg.norm(pulled[1:])) - pulled[0]))
        return min(residuals)

    def supporting_functional(self, v) -> ProjPoint:
        """
        The unique supporting functional at a boundary point of a strictly convex cone.

        Raises:
            NotStrictlyConvex: for cones with faces
        """
        if not self.strictly_convex:
            raise NotStrictlyConvex(f"Cone '{self.kind}' has flat faces")
        v = as_point(v)
        if self.kind == "segment":
            a = self.params["a"]
            b = self.params["b"]
            alpha, beta = self._coordinates(ProjPoint.of(v).vector)
            edge = a if abs(beta) < abs(alpha) else b
            other = b if edge is a else a
            normal = np.array([-edge[1], edge[0]])
            return ProjPoint.of(normal if normal @ other > 0 else -normal)
        w = self._coordinates(v)
        w = w if w[0] > 0 else -w
        dual = np.concatenate([[w[0]], -w[1:]])
        return ProjPoint.of(np.linalg.solve(self.params["L"].T, dual))

    def boundary_samples(self, count: int, seed: int) -> List[np.ndarray]:
        """Points of the cone boundary: the two edges of a segment or seeded null rays."""
        if self.kind == "segment":
            return [self.params["a"], self.params["b"]]
        if self.kind == "orthant":
            raise NotStrictlyConvex("Orthant boundary sampling is not supported")
        rng = np.random.default_rng(seed)
        samples = []
        for _ in range(count):
            direction = rng.standard_normal(self.dim - 1)
            direction /= np.linalg.norm(direction)
            samples.append(self.params["L"] @ np.concatenate([[1.0], direction]))
        return samples


@dataclass
class LimitResult:
    """Projective limit with its convergence table and residuals."""

    point: ProjPoint
    table: np.ndarray
    ratio: float
    ein: float
    membership: Optional[Dict[str, float]] = None


class BoundaryService:
    """Service for boundary limits of σ-maps."""

    @staticmethod
    def ein_residual(point) -> float:
        """2|ĝ(u, u)|/‖u‖², zero exactly on the Einstein universe."""
        u = point.vector if isinstance(point, ProjPoint) else as_point(point)
        return 2.0 * abs(SplitSpaceService.ghat(u, u)) / float(u @ u)

    @staticmethod
    def boundary_projection(point: ProjPoint) -> Tuple[ProjPoint, ProjPoint]:
        """([v, φ]) ↦ ([v], [φ])."""
        m = point.vector.size // 2
        return ProjPoint.of(point.vector[:m]), ProjPoint.of(point.vector[m:])

    @staticmethod
    def lambda_membership(point: ProjPoint, cone: ConvexCone) -> Dict[str, float]:
        """
        Residuals of [v, φ] ∈ Λ: v on the cone boundary, φ(v) = 0 and φ
        supporting the cone. Signs of both factors are ignored.
        """
        m = point.vector.size // 2
        v = point.vector[:m]
        phi = point.vector[m:]
        if min(np.linalg.norm(v), np.linalg.norm(phi)) < 1e-12:
            return {"boundary": 1.0, "pairing": 1.0, "support": 1.0, "max": 1.0}
        v_hat = ProjPoint.of(v).vector
        phi_hat = ProjPoint.of(phi).vector
        report = {
            "boundary": cone.boundary_residual(v_hat),
            "pairing": abs(float(v_hat @ phi_hat)),
            "support": cone.support_residual(phi_hat),
        }
        report["max"] = max(report.values())
        return report

    @staticmethod
    def projective_limit(
        chart: ChartMap,
        ray: Callable[[float], np.ndarray],
        s_max: float,
        cone: Optional[ConvexCone] = None,
        transform: Optional[Callable[[np.ndarray], np.ndarray]] = None,
        tol: float = LIMIT_TOL,
    ) -> LimitResult:
        """
        Limit of [chart(ray(s))] from samples at s_max/4, s_max/2 and s_max,
        doubling s past s_max while the samples are still in transit.

        The limit is accepted once the last step shrinks by CAUCHY_RATIO and
        the geometric tail estimate of the remaining distance is below tol.
        The table holds the last three samples.

        Raises:
            NoConvergence: when the samples have not settled after MAX_DOUBLINGS
        """
        transform = transform or (lambda u: u)

        def sample(s: float) -> ProjPoint:
            value = transform(chart(ray(s)))
            if not np.all(np.isfinite(value)):
                raise NoConvergence(f"Ray sample overflows at s={s:.6g}", value=np.inf)
            return ProjPoint.of(value)

        parameters = [s_max / 4.0, s_max / 2.0, s_max]
        points = [sample(s) for s in parameters]
        doublings = 0
        while True:
            first = points[-3].distance(points[-2])
            second = points[-2].distance(points[-1])
            ratio = second / first if first > 0 else 0.0
            tail = second * ratio / (1.0 - ratio) if ratio < 1.0 else np.inf
            if second <= 1e-12 or (ratio <= CAUCHY_RATIO and tail <= tol):
                break
            if doublings == MAX_DOUBLINGS:
                raise NoConvergence(
                    f"Ray samples do not contract up to s={parameters[-1]:.6g} "
                    f"(steps {first:.3e}, {second:.3e})",
                    value=ratio if first > 0 else np.inf,
                )
            doublings += 1
            parameters.append(2.0 * parameters[-1])
            points.append(sample(parameters[-1]))
        if doublings:
            logger.debug(f"Ray limit settled at s={parameters[-1]:.6g} after {doublings} doublings")
        steps = [points[-4].distance(points[-3]) if len(points) > 3 else 0.0, first, second]
        table = np.array([
            np.concatenate([[s], point.vector, [step, BoundaryService.ein_residual(point)]])
            for s, point, step in zip(parameters[-3:], points[-3:], steps)
        ])
        limit = points[-1]
        return LimitResult(
            point=limit,
            table=table,
            ratio=ratio,
            ein=BoundaryService.ein_residual(limit),
            membership=BoundaryService.lambda_membership(limit, cone) if cone is not None else None,
        )

    @staticmethod
    def sigma_limit(
        sd: SigmaData,
        ray: Callable[[float], np.ndarray],
        s_max: float,
        cone: Optional[ConvexCone] = None,
        t: float = 0.0,
    ) -> LimitResult:
        """Projective limit of Ψ_t∘σ along a ray."""
        return BoundaryService.projective_limit(
            sd.sigma, ray, s_max, cone, transform=lambda u: SplitSpaceService.r_action(t, u)
        )

    @staticmethod
    def flow_invariance(sd: SigmaData, ray, s_max: float, times: Sequence[float] = (-1.0, 0.0, 1.0)) -> float:
        """Largest distance between the projected limits of Ψ_t∘σ over the given times."""
        projected = [
            BoundaryService.boundary_projection(BoundaryService.sigma_limit(sd, ray, s_max, t=t).point)
            for t in times
        ]
        reference = projected[0]
        return max(
            max(reference[0].distance(pair[0]), reference[1].distance(pair[1]))
            for pair in projected[1:]
        ) if len(projected) > 1 else 0.0

    @staticmethod
    def flow_boundary(sd: SigmaData, p, t: float = 20.0) -> Dict[str, float]:
        """
        Limits of [Ψ_{±t}σ(p)] against [ξ(p), 0] and [0, ν(p)].
        """
        value = sd.sigma(p)
        m = sd.m
        zeros = np.zeros(m)
        forward = ProjPoint.of(SplitSpaceService.r_action(t, value))
        backward = ProjPoint.of(SplitSpaceService.r_action(-t, value))
        xi_class = ProjPoint.of(np.concatenate([sd.imm.xi(p), zeros]))
        nu_class = ProjPoint.of(np.concatenate([zeros, value[m:]]))
        return {
            "forward": forward.distance(xi_class),
            "backward": backward.distance(nu_class),
            "forward_ein": BoundaryService.ein_residual(forward),
            "backward_ein": BoundaryService.ein_residual(backward),
        }

    @staticmethod
    def tau_boundary_graph(
        sd: SigmaData,
        cone: ConvexCone,
        rays: Sequence[Callable[[float], np.ndarray]],
        s_max: float,
        coverage_samples: int = 8,
        seed: int = 0,
    ) -> Dict[str, float]:
        """
        Boundary of the projected immersion as the graph [v] ↦ [φ_v].

        For every ray the limit pair must be incident and [φ] must equal the
        supporting functional of the cone at [v]; every sampled boundary point
        of the cone must be approached by some ray limit.

        Raises:
            NotStrictlyConvex: when the cone has faces
        """
        if not cone.strictly_convex:
            raise NotStrictlyConvex(f"Cone '{cone.kind}' has flat faces; the boundary map is not a bijection")
        incidence = 0.0
        uniqueness = 0.0
        limits = []
        for ray in rays:
            v, phi = BoundaryService.boundary_projection(BoundaryService.sigma_limit(sd, ray, s_max).point)
            incidence = max(incidence, abs(float(v.vector @ phi.vector)))
            uniqueness = max(uniqueness, phi.distance(cone.supporting_functional(v.vector)))
            limits.append(v)
        coverage = max(
            min(ProjPoint.of(sample).distance(limit) for limit in limits)
            for sample in cone.boundary_samples(coverage_samples, seed)
        )
        return {"incidence": incidence, "uniqueness": uniqueness, "coverage": coverage}

    @staticmethod
    def pseudoflat_boundary(sd: SigmaData, s_max: float) -> Dict[str, float]:
        """
        Limits of ς(s, t) = Ψ_t σ(s) along the four diagonals of the (s, t)-plane.

        Each limit must lie on Ein with one of its two factors vanishing.
        """
        if sd.n != 1:
            raise ValueError("Pseudoflat boundary is defined for curves")
        chart = SigmaMapService.pseudoflat_chart(sd)
        worst_ein = 0.0
        worst_factor = 0.0
        for direction in ((1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)):
            d = np.array(direction)
            limit = BoundaryService.projective_limit(chart, lambda s, d=d: s * d, s_max).point
            worst_ein = max(worst_ein, BoundaryService.ein_residual(limit))
            m = sd.m
            worst_factor = max(
                worst_factor,
                float(min(np.linalg.norm(limit.vector[:m]), np.linalg.norm(limit.vector[m:]))),
            )
        return {"ein": worst_ein, "vanishing_factor": worst_factor}

    @staticmethod
    def write_ray_csv(path: str, table: np.ndarray) -> None:
        """Write one ray table: s, projective coordinates, step distance, Ein residual."""
        coordinates = table.shape[1] - 3
        header = ",".join(["s"] + [f"u{i}" for i in range(coordinates)] + ["step", "ein"])
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        np.savetxt(path, table, delimiter=",", header=header, comments="", fmt="%.12e")
