"""
Parametrized maps U ⊂ ℝⁿ → ℝᵐ with a jet oracle.

A ChartMap either carries analytic jets or falls back to fourth-order central
differences. The stencils are arranged so that constant maps differentiate to
exact zeros.
"""
import logging
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np

from src.config import settings
from src.errors import DimMismatch, NonFiniteValue, OutOfDomain

logger = logging.getLogger(__name__)

PointFunction = Callable[[np.ndarray], np.ndarray]
DomainPredicate = Callable[[np.ndarray], bool]


@dataclass(frozen=True)
class Jet:
    """Value and derivatives of a chart at one point."""

    value: np.ndarray
    J: np.ndarray
    H: Optional[np.ndarray] = None


def as_point(p) -> np.ndarray:
    """Coerce a point to a 1-d float array."""
    return np.atleast_1d(np.asarray(p, dtype=float))


def fd_derivative(func: PointFunction, p, step: float) -> np.ndarray:
    """
    Fourth-order central first derivatives of an array-valued function.

    Args:
        func: Point function returning an array of any shape
        p: Evaluation point
        step: Difference step

    Returns:
        Array of shape func(p).shape + (n,)
    """
    p = as_point(p)
    columns = []
    for i in range(p.size):
        offset = np.zeros_like(p)
        offset[i] = step
        f_m2 = np.asarray(func(p - 2 * offset), dtype=float)
        f_m1 = np.asarray(func(p - offset), dtype=float)
        f_p1 = np.asarray(func(p + offset), dtype=float)
        f_p2 = np.asarray(func(p + 2 * offset), dtype=float)
        columns.append(((f_m2 - f_p2) + 8.0 * (f_p1 - f_m1)) / (12.0 * step))
    return np.stack(columns, axis=-1)


def fd_second_derivative(func: PointFunction, p, step: float) -> np.ndarray:
    """
    Fourth-order central second derivatives of an array-valued function.

    Diagonal entries use the five-point stencil, mixed entries nest the
    first-derivative stencil in itself.

    Returns:
        Symmetric array of shape func(p).shape + (n, n)
    """
    p = as_point(p)
    n = p.size
    f_0 = np.asarray(func(p), dtype=float)
    result = np.zeros(f_0.shape + (n, n))
    for i in range(n):
        offset = np.zeros_like(p)
        offset[i] = step
        f_m2 = np.asarray(func(p - 2 * offset), dtype=float)
        f_m1 = np.asarray(func(p - offset), dtype=float)
        f_p1 = np.asarray(func(p + offset), dtype=float)
        f_p2 = np.asarray(func(p + 2 * offset), dtype=float)
        result[..., i, i] = (
            16.0 * (f_p1 + f_m1) - (f_p2 + f_m2) - 30.0 * f_0
        ) / (12.0 * step * step)
    for i in range(n):
        for j in range(i + 1, n):
            offset = np.zeros_like(p)
            offset[i] = step

            def inner(q, j=j):
                return _first_along(func, q, j, step)

            mixed = (
                (inner(p - 2 * offset) - inner(p + 2 * offset))
                + 8.0 * (inner(p + offset) - inner(p - offset))
            ) / (12.0 * step)
            result[..., i, j] = mixed
            result[..., j, i] = mixed
    return result


def _first_along(func: PointFunction, p: np.ndarray, axis: int, step: float) -> np.ndarray:
    offset = np.zeros_like(p)
    offset[axis] = step
    return (
        (np.asarray(func(p - 2 * offset), dtype=float) - np.asarray(func(p + 2 * offset), dtype=float))
        + 8.0 * (np.asarray(func(p + offset), dtype=float) - np.asarray(func(p - offset), dtype=float))
    ) / (12.0 * step)


def _both(domains: Sequence[Optional[DomainPredicate]]) -> Optional[DomainPredicate]:
    active = [domain for domain in domains if domain is not None]
    if not active:
        return None
    if len(active) == 1:
        return active[0]
    return lambda p: all(domain(p) for domain in active)


class ChartMap:
    """
    A map from an open chart domain U ⊂ ℝⁿ to ℝᵐ with a jet oracle.

    Charts built with `jet_func` report analytic jets; charts built from a
    bare point function differentiate by finite differences. Combinators keep
    analytic jets analytic.
    """

    def __init__(
        self,
        func: PointFunction,
        domain_dim: int,
        target_dim: int,
        jet_func: Optional[Callable[[np.ndarray, int], Jet]] = None,
        step: Optional[float] = None,
        domain: Optional[DomainPredicate] = None,
        mode: Optional[str] = None,
        name: str = "",
    ):
        self._func = func
        self._jet_func = jet_func
        self.domain_dim = domain_dim
        self.target_dim = target_dim
        self.step = step or settings.FD_STEP
        self.domain = domain
        self.mode = mode or ("analytic" if jet_func is not None else "fd")
        self.name = name

    @classmethod
    def from_function(
        cls,
        func: PointFunction,
        domain_dim: int,
        target_dim: int,
        step: Optional[float] = None,
        domain: Optional[DomainPredicate] = None,
        name: str = "",
    ) -> "ChartMap":
        """Wrap a point function as a finite-difference chart."""
        return cls(func, domain_dim, target_dim, step=step, domain=domain, name=name)

    def _check_point(self, p: np.ndarray, margin: float = 0.0) -> None:
        if p.size != self.domain_dim:
            raise DimMismatch(
                f"Chart {self.name or 'map'} expects points of dimension "
                f"{self.domain_dim}, got {p.size}"
            )
        if self.domain is None:
            return
        if not self.domain(p):
            raise OutOfDomain(f"Point {p.tolist()} lies outside the chart domain")
        if margin > 0:
            for i in range(p.size):
                offset = np.zeros_like(p)
                offset[i] = margin
                if not (self.domain(p + offset) and self.domain(p - offset)):
                    raise OutOfDomain(
                        f"Finite-difference stencil at {p.tolist()} leaves the chart domain"
                    )

    def __call__(self, p) -> np.ndarray:
        p = as_point(p)
        self._check_point(p)
        value = np.asarray(self._func(p), dtype=float)
        if not np.all(np.isfinite(value)):
            raise NonFiniteValue(f"Chart {self.name or 'map'} is not finite at {p.tolist()}")
        return value

    def jet(self, p, order: int = 2) -> Jet:
        """
        Evaluate value and derivatives at p.

        Args:
            p: Chart point
            order: 1 for (value, J), 2 for (value, J, H)

        Returns:
            Jet with J of shape (m, n) and H of shape (m, n, n)
        """
        if order not in (1, 2):
            raise ValueError(f"Jet order must be 1 or 2, got {order}")
        p = as_point(p)
        if self._jet_func is not None:
            self._check_point(p)
            jet = self._jet_func(p, order)
        else:
            self._check_point(p, margin=2 * self.step)
            value = self(p)
            first = fd_derivative(self._func, p, self.step)
            second = fd_second_derivative(self._func, p, self.step) if order == 2 else None
            jet = Jet(value, first, second)
        arrays = [jet.value, jet.J] + ([jet.H] if order == 2 else [])
        if not all(np.all(np.isfinite(array)) for array in arrays):
            raise NonFiniteValue(f"Jet of {self.name or 'map'} is not finite at {p.tolist()}")
        if order == 1 and jet.H is not None:
            jet = Jet(jet.value, jet.J, None)
        return jet

    def scaled(self, factor: float) -> "ChartMap":
        """Chart p ↦ factor·self(p)."""
        return self.linear(factor * np.eye(self.target_dim))

    def linear(self, matrix) -> "ChartMap":
        """Chart p ↦ M·self(p) for a constant matrix M."""
        matrix = np.asarray(matrix, dtype=float)
        if matrix.shape[1] != self.target_dim:
            raise DimMismatch(
                f"Matrix with {matrix.shape[1]} columns cannot act on ℝ^{self.target_dim}"
            )
        base = self

        def jet_func(p, order):
            jet = base.jet(p, order)
            second = np.einsum("ab,bij->aij", matrix, jet.H) if order == 2 else None
            return Jet(matrix @ jet.value, matrix @ jet.J, second)

        return ChartMap(
            lambda p: matrix @ base(p),
            self.domain_dim,
            matrix.shape[0],
            jet_func=jet_func,
            step=self.step,
            domain=self.domain,
            mode=self.mode,
            name=self.name,
        )

    @staticmethod
    def concat(*charts: "ChartMap") -> "ChartMap":
        """Chart p ↦ (c₁(p), c₂(p), …) stacking the targets."""
        dims = {chart.domain_dim for chart in charts}
        if len(dims) != 1:
            raise DimMismatch(f"Cannot concatenate charts on domains of dimensions {sorted(dims)}")

        def jet_func(p, order):
            jets = [chart.jet(p, order) for chart in charts]
            second = np.concatenate([jet.H for jet in jets]) if order == 2 else None
            return Jet(
                np.concatenate([jet.value for jet in jets]),
                np.concatenate([jet.J for jet in jets]),
                second,
            )

        analytic = all(chart.mode == "analytic" for chart in charts)
        return ChartMap(
            lambda p: np.concatenate([chart(p) for chart in charts]),
            charts[0].domain_dim,
            sum(chart.target_dim for chart in charts),
            jet_func=jet_func,
            step=min(chart.step for chart in charts),
            domain=_both([chart.domain for chart in charts]),
            mode="analytic" if analytic else "fd",
            name="+".join(chart.name for chart in charts if chart.name),
        )

    def split(self, sizes: List[int]) -> List["ChartMap"]:
        """Slice the target into consecutive blocks of the given sizes."""
        if sum(sizes) != self.target_dim:
            raise DimMismatch(f"Block sizes {sizes} do not add up to {self.target_dim}")
        blocks = []
        start = 0
        for size in sizes:
            selector = np.zeros((size, self.target_dim))
            selector[:, start:start + size] = np.eye(size)
            blocks.append(self.linear(selector))
            start += size
        return blocks

    def exp_gauged(self, mu: "ChartMap", sign: float = 1.0) -> "ChartMap":
        """
        Chart p ↦ exp(sign·μ(p))·self(p) for a scalar chart μ.

        Jets follow the product rule, so analytic inputs give analytic jets.
        """
        if mu.target_dim != 1 or mu.domain_dim != self.domain_dim:
            raise DimMismatch("Gauge must be a scalar chart on the same domain")
        base = self

        def jet_func(p, order):
            x = base.jet(p, order)
            m = mu.jet(p, order)
            weight = np.exp(sign * m.value[0])
            dmu = sign * m.J[0]
            first = weight * (np.outer(x.value, dmu) + x.J)
            second = None
            if order == 2:
                d2mu = sign * m.H[0]
                second = weight * (
                    np.einsum("a,i,j->aij", x.value, dmu, dmu)
                    + np.einsum("a,ij->aij", x.value, d2mu)
                    + np.einsum("ai,j->aij", x.J, dmu)
                    + np.einsum("aj,i->aij", x.J, dmu)
                    + x.H
                )
            return Jet(weight * x.value, first, second)

        analytic = self.mode == "analytic" and mu.mode == "analytic"
        return ChartMap(
            lambda p: np.exp(sign * mu(p)[0]) * base(p),
            self.domain_dim,
            self.target_dim,
            jet_func=jet_func,
            step=min(self.step, mu.step),
            domain=_both([self.domain, mu.domain]),
            mode="analytic" if analytic else "fd",
            name=self.name,
        )

    def reparametrized(self, matrix, offset=None) -> "ChartMap":
        """Chart c ↦ self(A·c + b) for a constant matrix A (n × k)."""
        matrix = np.asarray(matrix, dtype=float)
        if matrix.shape[0] != self.domain_dim:
            raise DimMismatch(
                f"Reparametrization must land in ℝ^{self.domain_dim}, got {matrix.shape[0]} rows"
            )
        shift = np.zeros(self.domain_dim) if offset is None else as_point(offset)
        base = self

        def jet_func(c, order):
            jet = base.jet(matrix @ c + shift, order)
            second = np.einsum("aij,ik,jl->akl", jet.H, matrix, matrix) if order == 2 else None
            return Jet(jet.value, jet.J @ matrix, second)

        domain = None
        if self.domain is not None:
            domain = lambda c: base.domain(matrix @ c + shift)  # noqa: E731
        return ChartMap(
            lambda c: base(matrix @ c + shift),
            matrix.shape[1],
            self.target_dim,
            jet_func=jet_func,
            step=self.step,
            domain=domain,
            mode=self.mode,
            name=self.name,
        )
