"""
Registry of built-in example immersions.

Every example carries closed-form jets except the quartic body, which is
differentiated numerically.
"""
import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional

import numpy as np

from src.config import settings
from src.errors import BadDimension, UnknownExample
from src.kernel.charts import ChartMap, Jet
from src.kernel.grids import GridSpec
from src.services.affine_structure import EquiaffineImmersion
from src.services.boundary import ConvexCone

logger = logging.getLogger(__name__)

QUARTIC_STEP = 2e-3


@dataclass
class ExampleSpec:
    """
    A registered example: immersion, sample box and expected-properties manifest.

    `groups` lists the check families the verification suite runs for it.
    """

    name: str
    n: int
    imm: EquiaffineImmersion
    grid: GridSpec
    groups: List[str]
    manifest: Dict[str, object] = field(default_factory=dict)
    cone: Optional[ConvexCone] = None
    ray_speed: Callable[[float], float] = lambda s: s
    mu_true: Optional[ChartMap] = None
    params: Dict[str, float] = field(default_factory=dict)

    @property
    def mode(self) -> str:
        return self.imm.mode

    def ray(self, direction) -> Callable[[float], np.ndarray]:
        direction = np.asarray(direction, dtype=float)
        direction = direction / np.linalg.norm(direction)
        return lambda s: self.ray_speed(s) * direction

    def ray_directions(self, count: int, seed: int) -> List[np.ndarray]:
        """±1 for curves, evenly spaced angles for surfaces, seeded directions above."""
        if self.n == 1:
            return [np.array([1.0]), np.array([-1.0])]
        if self.n == 2:
            angles = 2.0 * np.pi * np.arange(count) / count
            return [np.array([np.cos(a), np.sin(a)]) for a in angles]
        rng = np.random.default_rng(seed)
        directions = [np.eye(self.n)[i] for i in range(self.n)]
        while len(directions) < count:
            d = rng.standard_normal(self.n)
            directions.append(d / np.linalg.norm(d))
        return directions

    def manifest_dict(self) -> Dict[str, object]:
        return {
            "name": self.name,
            "n": self.n,
            "mode": self.mode,
            "groups": list(self.groups),
            "cone": self.cone.kind if self.cone is not None else None,
            "box": [list(self.grid.lower), list(self.grid.upper)],
            **self.manifest,
        }


def _analytic(value, first, second, n: int, m: int, name: str, domain=None) -> ChartMap:
    def jet_func(p, order):
        return Jet(value(p), first(p), second(p) if order == 2 else None)

    return ChartMap(value, n, m, jet_func=jet_func, domain=domain, name=name)


def exponential_chart(exponents: np.ndarray, coefficients: np.ndarray, name: str) -> ChartMap:
    """p ↦ (c_a·exp(L_a·p))_a with closed-form jets."""
    exponents = np.asarray(exponents, dtype=float)
    coefficients = np.asarray(coefficients, dtype=float)

    def value(p):
        return coefficients * np.exp(exponents @ p)

    return _analytic(
        value,
        lambda p: value(p)[:, None] * exponents,
        lambda p: value(p)[:, None, None] * exponents[:, :, None] * exponents[:, None, :],
        exponents.shape[1],
        exponents.shape[0],
        name,
    )


def _curve(components, n_out: int, name: str) -> ChartMap:
    """Curve chart from (value, first, second) component functions of s."""
    value, first, second = components
    return _analytic(
        lambda p: np.array(value(p[0])),
        lambda p: np.array(first(p[0]))[:, None],
        lambda p: np.array(second(p[0]))[:, None, None],
        1,
        n_out,
        name,
    )


def hyperbola() -> ExampleSpec:
    f = _curve(
        (
            lambda s: [np.cosh(s), np.sinh(s)],
            lambda s: [np.sinh(s), np.cosh(s)],
            lambda s: [np.cosh(s), np.sinh(s)],
        ),
        2,
        "hyperbola",
    )
    nu = _curve(
        (
            lambda s: [np.cosh(s), -np.sinh(s)],
            lambda s: [np.sinh(s), -np.cosh(s)],
            lambda s: [np.cosh(s), -np.sinh(s)],
        ),
        2,
        "hyperbola_conormal",
    )
    return ExampleSpec(
        name="hyperbola",
        n=1,
        imm=EquiaffineImmersion(f=f, xi=f, nu=nu, name="hyperbola"),
        grid=GridSpec.box(1.0, 1, settings.DEFAULT_GRID),
        groups=["structure", "pick", "dual", "sigma", "split", "lift", "symmetric", "boundary"],
        manifest={"affine_sphere": True, "sphere_type": "hyperbolic", "maximal": True, "harmonic": True},
        cone=ConvexCone("segment", 2, {"a": np.array([1.0, 1.0]), "b": np.array([1.0, -1.0])}),
    )


def ellipse(a: float = 2.0, b: float = 1.0, name: str = "ellipse") -> ExampleSpec:
    f = _curve(
        (
            lambda s: [a * np.cos(s), b * np.sin(s)],
            lambda s: [-a * np.sin(s), b * np.cos(s)],
            lambda s: [-a * np.cos(s), -b * np.sin(s)],
        ),
        2,
        name,
    )
    nu = _curve(
        (
            lambda s: [-np.cos(s) / a, -np.sin(s) / b],
            lambda s: [np.sin(s) / a, -np.cos(s) / b],
            lambda s: [np.cos(s) / a, np.sin(s) / b],
        ),
        2,
        f"{name}_conormal",
    )
    return ExampleSpec(
        name=name,
        n=1,
        imm=EquiaffineImmersion(f=f, xi=f.scaled(-1.0), nu=nu, name=name),
        grid=GridSpec.box(1.0, 1, settings.DEFAULT_GRID),
        groups=["structure", "pick", "dual", "sigma", "geodesic"],
        manifest={"affine_sphere": True, "sphere_type": "elliptic", "maximal": True, "period": 2.0 * np.pi},
        params={"a": a, "b": b},
    )


def titeica(n: int = 2) -> ExampleSpec:
    exponents = np.vstack([np.eye(n), -np.ones((1, n))])
    f = exponential_chart(exponents, np.ones(n + 1), f"titeica{n}")
    nu = exponential_chart(-exponents, np.full(n + 1, 1.0 / (n + 1)), f"titeica{n}_conormal")
    return ExampleSpec(
        name="titeica",
        n=n,
        imm=EquiaffineImmersion(f=f, xi=f, nu=nu, name=f"titeica{n}"),
        grid=GridSpec.box(1.0, n, settings.DEFAULT_GRID),
        groups=["structure", "pick", "dual", "sigma", "split", "lift", "symmetric", "boundary"],
        manifest={"affine_sphere": True, "sphere_type": "hyperbolic", "maximal": True, "harmonic": True},
        cone=ConvexCone("orthant", n + 1),
    )


def _graph_chart(sign: float, name: str, n: int) -> ChartMap:
    """p ↦ (p, √(1 + sign·|p|²)), the unit sphere (sign −1) or hyperboloid (sign +1)."""

    def height(p):
        return np.sqrt(1.0 + sign * float(p @ p))

    def value(p):
        return np.concatenate([p, [height(p)]])

    def first(p):
        w = height(p)
        return np.vstack([np.eye(n), sign * p[None, :] / w])

    def second(p):
        w = height(p)
        H = np.zeros((n + 1, n, n))
        H[n] = sign * np.eye(n) / w - np.outer(p, p) / w ** 3
        return H

    domain = None if sign > 0 else (lambda p: float(p @ p) < 1.0)
    return _analytic(value, first, second, n, n + 1, name, domain=domain)


def sphere(n: int = 2) -> ExampleSpec:
    f = _graph_chart(-1.0, f"sphere{n}", n)
    return ExampleSpec(
        name="sphere",
        n=n,
        imm=EquiaffineImmersion(f=f, xi=f.scaled(-1.0), nu=f.scaled(-1.0), name=f"sphere{n}"),
        grid=GridSpec.box(0.5, n, settings.DEFAULT_GRID),
        groups=["structure", "pick", "dual", "sigma", "rescale"],
        manifest={"affine_sphere": True, "sphere_type": "elliptic", "maximal": True},
    )


def hyperboloid(n: int = 2) -> ExampleSpec:
    f = _graph_chart(1.0, f"hyperboloid{n}", n)
    flip = np.diag(np.concatenate([-np.ones(n), [1.0]]))
    time_last = np.roll(np.eye(n + 1), -1, axis=0)
    return ExampleSpec(
        name="hyperboloid",
        n=n,
        imm=EquiaffineImmersion(f=f, xi=f, nu=f.linear(flip), name=f"hyperboloid{n}"),
        grid=GridSpec.box(1.0, n, settings.DEFAULT_GRID),
        groups=["structure", "pick", "dual", "sigma", "symmetric", "boundary"],
        manifest={"affine_sphere": True, "sphere_type": "hyperbolic", "maximal": True, "harmonic": True},
        cone=ConvexCone("lorentz", n + 1, {"L": time_last}),
        ray_speed=np.sinh,
    )


def quartic(step: Optional[float] = None) -> ExampleSpec:
    """Radial projection of the unit sphere onto x⁴ + y⁴ + z⁴ = 1."""

    def value(p):
        g = np.concatenate([p, [np.sqrt(1.0 - float(p @ p))]])
        return g / np.sum(g ** 4) ** 0.25

    f = ChartMap.from_function(
        value, 2, 3, step=step or QUARTIC_STEP, domain=lambda p: float(p @ p) < 1.0, name="quartic"
    )
    return ExampleSpec(
        name="quartic",
        n=2,
        imm=EquiaffineImmersion(f=f, xi=f.scaled(-1.0), name="quartic"),
        grid=GridSpec.box(0.6, 2, settings.DEFAULT_GRID),
        groups=["structure", "pick", "dual", "sigma", "symmetric"],
        manifest={"affine_sphere": False, "sphere_type": None, "maximal": False, "harmonic": False},
    )


def scrambling_gauge(n: int) -> ChartMap:
    """μ(u) = sin u₁ · Π_{k≥2} cos u_k with closed-form jets."""

    def factors(p):
        return np.concatenate([[np.sin(p[0])], np.cos(p[1:])])

    def derivatives(p):
        return np.concatenate([[np.cos(p[0])], -np.sin(p[1:])])

    def value(p):
        return np.array([np.prod(factors(p))])

    def first(p):
        base = factors(p)
        slopes = derivatives(p)
        gradient = np.array([
            slopes[i] * np.prod(np.delete(base, i)) for i in range(n)
        ])
        return gradient[None, :]

    def second(p):
        base = factors(p)
        slopes = derivatives(p)
        hessian = np.zeros((n, n))
        for i in range(n):
            for j in range(n):
                if i == j:
                    hessian[i, i] = -base[i] * np.prod(np.delete(base, i))
                else:
                    hessian[i, j] = slopes[i] * slopes[j] * np.prod(np.delete(base, [i, j]))
        return hessian[None, :, :]

    return _analytic(value, first, second, n, 1, f"scramble{n}")


def scrambled_titeica(n: int = 2) -> ExampleSpec:
    base = titeica(n)
    base.name = "scrambled-titeica"
    base.groups = ["lift", "scramble"]
    base.mu_true = scrambling_gauge(n)
    return base


def pseudoflat(n: int = 2) -> ExampleSpec:
    base = titeica(n)
    base.name = "pseudoflat"
    base.groups = ["pseudoflat"]
    base.manifest = {**base.manifest, "pseudoflat": True}
    return base


DIMENSIONS = {
    "hyperbola": (1, 1, 1),
    "ellipse": (1, 1, 1),
    "circle": (1, 1, 1),
    "titeica": (2, 1, 4),
    "sphere": (2, 1, 4),
    "hyperboloid": (2, 1, 4),
    "quartic": (2, 2, 2),
    "pseudoflat": (2, 1, 3),
    "scrambled-titeica": (2, 1, 4),
}


class ExampleRegistry:
    """Lookup of built-in examples by name."""

    @staticmethod
    def names() -> List[str]:
        return sorted(DIMENSIONS)

    @staticmethod
    def example(
        name: str,
        n: Optional[int] = None,
        params: Optional[Dict[str, float]] = None,
        step: Optional[float] = None,
    ) -> ExampleSpec:
        """
        Build an example.

        Args:
            name: Registered example name
            n: Dimension of the immersed manifold, defaults per example
            params: Example parameters (ellipse semi-axes a, b)
            step: Finite-difference step carried by the immersion, defaults to FD_STEP

        Returns:
            ExampleSpec

        Raises:
            UnknownExample: when the name is not registered
            BadDimension: when n is outside the supported range
        """
        if name not in DIMENSIONS:
            raise UnknownExample(f"Unknown example '{name}'; expected one of {ExampleRegistry.names()}")
        default, lowest, highest = DIMENSIONS[name]
        n = default if n is None else n
        if not lowest <= n <= highest:
            raise BadDimension(f"Example '{name}' supports n in [{lowest}, {highest}], got {n}")
        params = params or {}
        logger.debug(f"Building example {name} with n={n} and params {params}")
        spec = ExampleRegistry._build(name, n, params, step)
        if step is not None:
            spec = replace(spec, imm=replace(spec.imm, step=step))
        return spec

    @staticmethod
    def _build(name: str, n: int, params: Dict[str, float], step: Optional[float]) -> ExampleSpec:
        if name == "hyperbola":
            return hyperbola()
        if name == "ellipse":
            return ellipse(params.get("a", 2.0), params.get("b", 1.0))
        if name == "circle":
            return ellipse(1.0, 1.0, name="circle")
        if name == "titeica":
            return titeica(n)
        if name == "sphere":
            return sphere(n)
        if name == "hyperboloid":
            return hyperboloid(n)
        if name == "quartic":
            return quartic(step)
        if name == "pseudoflat":
            return pseudoflat(n)
        return scrambled_titeica(n)
