"""
Horizontal lift service: recover the horizontal gauge of a lift of a
Lagrangian immersion and extract the dual centroaffine pair.

A lift is any chart (first, second) into a split quadric. Its 1-form is
α(X) = second_*(X)·first; a gauged lift (e^μ·first, e^{−μ}·second) of a
horizontal one on the quadric ĝ = κ has α = −κ·dμ, so the recovered gauge is
μ̂ = −κ∫α.
"""
import logging
from dataclasses import dataclass
from typing import Dict, Optional, Sequence

import numpy as np

from src.config import settings
from src.errors import DegenerateLift, NotClosed, NotHorizontal
from src.kernel.calculus import integrate_1form
from src.kernel.charts import ChartMap, Jet, as_point
from src.services.sigma_maps import SigmaData, SigmaMapService

logger = logging.getLogger(__name__)


@dataclass
class LiftedImmersion:
    """A lift of a base immersion into the quadric of the given kind."""

    lift: ChartMap
    kind: int
    basepoint: np.ndarray
    name: str = ""

    @property
    def n(self) -> int:
        return self.lift.domain_dim

    @property
    def m(self) -> int:
        return self.lift.target_dim // 2

    def slots(self):
        return self.lift.split([self.m, self.m])

    @classmethod
    def from_sigma(cls, sd: SigmaData, mu: Optional[ChartMap] = None) -> "LiftedImmersion":
        """σ itself, or the gauged lift (e^μ·first, e^{−μ}·second)."""
        lift = sd.sigma if mu is None else SigmaMapService.gauged(sd, mu)
        return cls(lift=lift, kind=sd.kind, basepoint=sd.imm.origin, name=sd.imm.name)


@dataclass
class GaugeFunction:
    """μ̂ as a scalar chart with μ̂(basepoint) = 0."""

    chart: ChartMap
    basepoint: np.ndarray

    def values(self, points: Sequence) -> np.ndarray:
        return np.array([self.chart(q)[0] for q in points])


def staircase(start, end, order: Sequence[int]) -> np.ndarray:
    """Axis-monotone polyline from start to end moving along the axes in `order`."""
    vertex = as_point(start).copy()
    end = as_point(end)
    vertices = [vertex.copy()]
    for axis in order:
        vertex[axis] = end[axis]
        vertices.append(vertex.copy())
    return np.array(vertices)


class HorizontalLiftService:
    """Service for gauge integration and extraction of the centroaffine pair."""

    @staticmethod
    def _slot_jets(li: LiftedImmersion, p, order: int):
        first, second = li.slots()
        jet_first = first.jet(p, order)
        jet_second = second.jet(p, order)
        if np.linalg.norm(jet_second.value) < settings.SINGULAR_TOL:
            raise DegenerateLift(f"Second slot of {li.name} vanishes at {as_point(p).tolist()}")
        return jet_first, jet_second

    @staticmethod
    def alpha(li: LiftedImmersion, p) -> np.ndarray:
        """Covector α_i = second_{,i}·first."""
        jet_first, jet_second = HorizontalLiftService._slot_jets(li, p, 1)
        return jet_second.J.T @ jet_first.value

    @staticmethod
    def alpha_form(li: LiftedImmersion, p, X) -> float:
        """
        α(X) = second_*(X)·first.

        Raises:
            DegenerateLift: when the second slot vanishes
        """
        return float(HorizontalLiftService.alpha(li, p) @ as_point(X))

    @staticmethod
    def d_alpha(li: LiftedImmersion, p) -> np.ndarray:
        """dα_ij = second_{,j}·first_{,i} − second_{,i}·first_{,j}."""
        jet_first, jet_second = HorizontalLiftService._slot_jets(li, p, 1)
        product = jet_first.J.T @ jet_second.J
        return product - product.T

    @staticmethod
    def closedness_residual(li: LiftedImmersion, samples: Sequence) -> float:
        return max(float(np.max(np.abs(HorizontalLiftService.d_alpha(li, q)))) for q in samples)

    @staticmethod
    def path_integral(li: LiftedImmersion, p, order: Sequence[int]) -> float:
        path = staircase(li.basepoint, p, order)
        return integrate_1form(lambda q: HorizontalLiftService.alpha(li, q), path)

    @staticmethod
    def integrate_gauge(li: LiftedImmersion, path_tol: Optional[float] = None) -> GaugeFunction:
        """
        The gauge μ̂ = −κ∫α from the basepoint, as a scalar chart.

        Values integrate along the staircase in increasing axis order; a second
        staircase in decreasing order certifies path independence. Jets are
        −κα and the symmetrized derivative of −κα.

        Raises:
            NotClosed: when the two staircases disagree by more than path_tol
        """
        tol = settings.tolerance_profile(settings.DEFAULT_TOL_PROFILE).path_tol if path_tol is None else path_tol
        forward = list(range(li.n))
        backward = forward[::-1]

        def value(p):
            primary = HorizontalLiftService.path_integral(li, p, forward)
            if li.n > 1:
                secondary = HorizontalLiftService.path_integral(li, p, backward)
                if abs(primary - secondary) > tol:
                    raise NotClosed(
                        f"Gauge integrals of {li.name} disagree by {abs(primary - secondary):.3e} "
                        f"at {as_point(p).tolist()}",
                        value=abs(primary - secondary),
                    )
            return np.array([-li.kind * primary])

        def jet_func(p, order):
            jet_first, jet_second = HorizontalLiftService._slot_jets(li, p, order)
            first = -li.kind * (jet_second.J.T @ jet_first.value)[None, :]
            second = None
            if order == 2:
                # derivative[i, j] = ∂_i α_j
                derivative = (
                    np.einsum("aji,a->ij", jet_second.H, jet_first.value)
                    + jet_first.J.T @ jet_second.J
                )
                second = -0.5 * li.kind * (derivative + derivative.T)[None, :, :]
            return Jet(value(p), first, second)

        chart = ChartMap(
            value,
            li.n,
            1,
            jet_func=jet_func,
            step=li.lift.step,
            domain=li.lift.domain,
            mode=li.lift.mode,
            name=f"gauge[{li.name}]",
        )
        return GaugeFunction(chart=chart, basepoint=as_point(li.basepoint))

    @staticmethod
    def horizontal_lift(li: LiftedImmersion, path_tol: Optional[float] = None) -> LiftedImmersion:
        """The lift (e^{−μ̂}·first, e^{μ̂}·second), horizontal when α is closed."""
        gauge = HorizontalLiftService.integrate_gauge(li, path_tol)
        first, second = li.slots()
        lift = ChartMap.concat(first.exp_gauged(gauge.chart, -1.0), second.exp_gauged(gauge.chart, 1.0))
        return LiftedImmersion(lift=lift, kind=li.kind, basepoint=li.basepoint, name=f"horizontal[{li.name}]")

    @staticmethod
    def extract_centroaffine_pair(
        hl: LiftedImmersion,
        samples: Sequence,
        horizontality_tol: float,
        reference: Optional[ChartMap] = None,
    ):
        """
        Split a horizontal lift into its centroaffine pair and certify duality.

        Args:
            hl: Horizontal lift
            samples: Points where duality is checked
            horizontality_tol: Largest accepted horizontality residual
            reference: Optional chart the first slot should be homothetic to

        Returns:
            (first slot chart, second slot chart, residual dict with duality,
            tangency and, with a reference, homothety spread)

        Raises:
            NotHorizontal: when the lift is not horizontal at a sample
        """
        first, second = hl.slots()
        report: Dict[str, float] = {"duality": 0.0, "tangency": 0.0}
        ratios = []
        for q in samples:
            horizontality = SigmaMapService.chart_residuals(hl.lift, q)["horizontality"]
            if horizontality > horizontality_tol:
                raise NotHorizontal(
                    f"Lift {hl.name} has horizontality residual {horizontality:.3e}",
                    value=horizontality,
                )
            jet_first = first.jet(q, 1)
            covector = second(q)
            report["duality"] = max(report["duality"], abs(float(covector @ jet_first.value) - hl.kind))
            report["tangency"] = max(report["tangency"], float(np.max(np.abs(covector @ jet_first.J))))
            if reference is not None:
                target = reference(q)
                ratio = float(jet_first.value @ target) / float(target @ target)
                report["homothety_residual"] = max(
                    report.get("homothety_residual", 0.0),
                    float(np.linalg.norm(jet_first.value - ratio * target) / np.linalg.norm(target)),
                )
                ratios.append(ratio)
        if ratios:
            report["homothety"] = float(np.max(ratios) - np.min(ratios))
            report["ratio"] = float(np.mean(ratios))
        logger.debug(f"Centroaffine pair of {hl.name}: {report}")
        return first, second, report

    @staticmethod
    def perturbed_lift(sd: SigmaData, direction, amplitude: float, axis: int) -> LiftedImmersion:
        """
        Non-Lagrangian lift (first, ν'/ν'(first)) with ν' = ν + amplitude·p_axis·direction.
        """
        direction = as_point(direction)
        first, second = sd.sigma.split([sd.m, sd.m])

        def func(p):
            covector = second(p) + amplitude * p[axis] * direction
            position = first(p)
            return np.concatenate([position, sd.kind * covector / float(covector @ position)])

        lift = ChartMap.from_function(
            func, sd.n, 2 * sd.m, step=sd.imm.fd_step, domain=sd.sigma.domain, name=f"perturbed[{sd.imm.name}]"
        )
        return LiftedImmersion(lift=lift, kind=sd.kind, basepoint=sd.imm.origin, name=lift.name)
