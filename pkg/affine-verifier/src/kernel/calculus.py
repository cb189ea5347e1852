"""
Differential operators on chart domains: brackets, Levi-Civita symbols,
curvature and line integrals of 1-forms.
"""
import logging
from typing import Callable, Optional

import numpy as np

from src.config import settings
from src.errors import DegenerateMetric, DimMismatch
from src.kernel.charts import ChartMap, as_point, fd_derivative
from src.kernel.linalg import _check_symmetric, signature_of

logger = logging.getLogger(__name__)


def lie_bracket(X: ChartMap, Y: ChartMap, p) -> np.ndarray:
    """
    Bracket of two vector fields given in ambient coordinates.

    Returns:
        [X, Y](p) = JY(p)·X(p) − JX(p)·Y(p)
    """
    if X.domain_dim != Y.domain_dim or X.target_dim != X.domain_dim or Y.target_dim != Y.domain_dim:
        raise DimMismatch("Vector fields must map ℝⁿ to ℝⁿ on a common domain")
    jet_x = X.jet(p, order=1)
    jet_y = Y.jet(p, order=1)
    return jet_y.J @ jet_x.value - jet_x.J @ jet_y.value


class MetricField:
    """
    A field of symmetric n×n matrices on a chart domain.

    Derivatives of the entries are taken by finite differences with `step`.
    """

    def __init__(
        self,
        func: Callable[[np.ndarray], np.ndarray],
        dim: int,
        step: Optional[float] = None,
        name: str = "",
    ):
        self._func = func
        self.dim = dim
        self.step = step or settings.FD_STEP
        self.name = name

    def __call__(self, p) -> np.ndarray:
        matrix = np.asarray(self._func(as_point(p)), dtype=float)
        if matrix.shape != (self.dim, self.dim):
            raise DimMismatch(f"Metric {self.name} returned shape {matrix.shape}")
        return matrix

    def at(self, p) -> np.ndarray:
        """Metric at p, validated as symmetric and non-degenerate."""
        matrix = self(p)
        _check_symmetric(matrix, tol=1e-9)
        if signature_of(matrix)[2] > 0:
            raise DegenerateMetric(
                f"Metric {self.name} is degenerate at {as_point(p).tolist()}",
                value=float(np.linalg.det(matrix)),
            )
        return 0.5 * (matrix + matrix.T)

    def signature(self, p):
        return signature_of(self.at(p))

    def derivative(self, p) -> np.ndarray:
        """dg[k, i, j] = ∂_k g_ij."""
        return np.moveaxis(fd_derivative(self, p, self.step), -1, 0)


def christoffel(metric: MetricField, p) -> np.ndarray:
    """
    Levi-Civita coefficients Γ[k, i, j] = Γᵏᵢⱼ.

    Γᵏᵢⱼ = ½ gᵏˡ (∂ᵢ g_lj + ∂ⱼ g_li − ∂_l g_ij)
    """
    g = metric.at(p)
    dg = metric.derivative(p)
    lowered = 0.5 * (
        np.einsum("ilj->lij", dg)
        + np.einsum("jli->lij", dg)
        - dg
    )
    gamma = np.einsum("kl,lij->kij", np.linalg.inv(g), lowered)
    return 0.5 * (gamma + gamma.transpose(0, 2, 1))


def riemann_tensor(metric: MetricField, p) -> np.ndarray:
    """
    Curvature R[l, i, j, k] = Rˡ_kij of the Levi-Civita connection.

    R(∂ᵢ, ∂ⱼ)∂ₖ = Σ_l R[l, i, j, k] ∂_l, with Christoffel symbols
    differentiated by finite differences.
    """
    p = as_point(p)
    gamma = christoffel(metric, p)
    d_gamma = fd_derivative(lambda q: christoffel(metric, q), p, metric.step)
    # d_gamma[l, j, k, i] = ∂ᵢ Γˡⱼₖ
    return (
        np.einsum("ljki->lijk", d_gamma)
        - np.einsum("likj->lijk", d_gamma)
        + np.einsum("lim,mjk->lijk", gamma, gamma)
        - np.einsum("ljm,mik->lijk", gamma, gamma)
    )


def _gauss_segment(alpha, start: np.ndarray, end: np.ndarray, nodes: np.ndarray, weights: np.ndarray) -> float:
    direction = end - start
    total = 0.0
    for node, weight in zip(nodes, weights):
        point = start + 0.5 * (node + 1.0) * direction
        total += weight * float(np.asarray(alpha(point)) @ direction)
    return 0.5 * total


def integrate_1form(
    alpha: Callable[[np.ndarray], np.ndarray],
    path,
    nodes: Optional[int] = None,
    quad_tol: Optional[float] = None,
    refine: bool = True,
) -> float:
    """
    Integrate a 1-form along a polyline with composite Gauss–Legendre panels.

    Each segment is integrated with one panel and, when `refine` is set, with
    two half panels; the refined value is returned and a discrepancy above
    quad_tol is logged.

    Args:
        alpha: Point ↦ covector
        path: Vertices of the polyline, shape (k, n)
        nodes: Gauss nodes per panel, defaults to QUADRATURE_NODES

    Returns:
        ∫_path α
    """
    nodes = nodes or settings.QUADRATURE_NODES
    quad_tol = settings.QUAD_TOL if quad_tol is None else quad_tol
    vertices = np.atleast_2d(np.asarray(path, dtype=float))
    gauss_nodes, gauss_weights = np.polynomial.legendre.leggauss(nodes)
    coarse = 0.0
    fine = 0.0
    for start, end in zip(vertices[:-1], vertices[1:]):
        if np.allclose(start, end, rtol=0.0, atol=0.0):
            continue
        coarse += _gauss_segment(alpha, start, end, gauss_nodes, gauss_weights)
        if refine:
            middle = 0.5 * (start + end)
            fine += _gauss_segment(alpha, start, middle, gauss_nodes, gauss_weights)
            fine += _gauss_segment(alpha, middle, end, gauss_nodes, gauss_weights)
    if not refine:
        return coarse
    if abs(fine - coarse) > quad_tol:
        logger.warning(f"Quadrature refinement changed the integral by {abs(fine - coarse):.3e}")
    return fine
