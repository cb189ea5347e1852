"""
Symmetric spaces service: unimodular positive forms, the Blaschke lift of a
hyperbolic affine sphere, tension fields and the embedding into the space
of positive subspaces of the split space.
"""
import logging
from dataclasses import dataclass
from typing import Dict, Optional, Sequence

import numpy as np
from scipy.linalg import block_diag, null_space

from src.errors import FrameNotUnimodular, NotHyperbolicSphere, NotPositive
from src.kernel.calculus import MetricField, christoffel
from src.kernel.charts import ChartMap, as_point, fd_derivative
from src.kernel.linalg import inv_sqrt_spd, is_positive_definite
from src.services.affine_structure import AffineStructureService, EquiaffineImmersion
from src.services.sigma_maps import SigmaMapService
from src.services.split_space import gram_matrix

logger = logging.getLogger(__name__)


@dataclass
class SymPoint:
    """A positive definite symmetric form Q, unimodular on the symmetric space."""

    Q: np.ndarray

    @property
    def determinant_gap(self) -> float:
        return abs(float(np.linalg.det(self.Q)) - 1.0)


@dataclass
class XPoint:
    """
    A triple (v, P, q): a vector, a hyperplane P not containing v given by a
    basis, and a positive form q on P in that basis.
    """

    v: np.ndarray
    basis: np.ndarray
    q: np.ndarray

    @property
    def covector(self) -> np.ndarray:
        """A covector with kernel P, normalized to take the value 1 on v."""
        normal = null_space(self.basis.T)[:, 0]
        return normal / float(normal @ self.v)


@dataclass
class YPoint:
    """A positive subspace of the split space spanned by the columns of W."""

    W: np.ndarray

    @property
    def gram(self) -> np.ndarray:
        return self.W.T @ gram_matrix(self.W.shape[0] // 2) @ self.W

    @property
    def projector(self) -> np.ndarray:
        """ĝ-orthogonal projector onto the span of W."""
        G = gram_matrix(self.W.shape[0] // 2)
        return self.W @ np.linalg.solve(self.gram, self.W.T @ G)


class SymmetricSpaceService:
    """Service for the Blaschke lift and its harmonicity certificates."""

    @staticmethod
    def pi_n1(x: XPoint) -> SymPoint:
        """
        The unimodular form Q with Q|_P = q, Q(v, P) = 0 and det Q = 1.

        In the basis E = [basis | v] Q is blockdiag(q, λ) with λ = det(E)²/det q.

        Raises:
            NotPositive: when q is not positive definite
        """
        if not is_positive_definite(x.q):
            raise NotPositive("Form on the hyperplane is not positive definite")
        E = np.column_stack([x.basis, x.v])
        determinant = float(np.linalg.det(E))
        lam = determinant ** 2 / float(np.linalg.det(x.q))
        E_inv = np.linalg.inv(E)
        Q = E_inv.T @ block_diag(x.q, [[lam]]) @ E_inv
        return SymPoint(Q=0.5 * (Q + Q.T))

    @staticmethod
    def fiber_point(Q, v) -> XPoint:
        """The point of the fiber over Q with first entry v: P = (Qv)^⊥ and q = Q|_P."""
        Q = np.asarray(Q, dtype=float)
        v = as_point(v)
        basis = null_space((Q @ v)[None, :])
        return XPoint(v=v, basis=basis, q=basis.T @ Q @ basis)

    @staticmethod
    def literal_lambda_check(x: XPoint) -> float:
        """
        Agreement of λ = Q(v, v) with two independent readings.

        The first solves det Q(λ) = 1 for the assembled form, which is affine
        in λ. The second is (det q')⁻¹ with q' the form q written in a basis of
        P, built from the kernel of the covector, that completes v to a
        unimodular basis.

        Returns:
            The larger of the two gaps, relative to the literal value
        """
        E_inv = np.linalg.inv(np.column_stack([x.basis, x.v]))

        def assembled(lam: float) -> float:
            return float(np.linalg.det(E_inv.T @ block_diag(x.q, [[lam]]) @ E_inv))

        at_zero, at_one = assembled(0.0), assembled(1.0)
        solved = (1.0 - at_zero) / (at_one - at_zero)

        adapted = null_space(x.covector[None, :])
        adapted[:, 0] /= float(np.linalg.det(np.column_stack([adapted, x.v])))
        change = np.linalg.lstsq(x.basis, adapted, rcond=None)[0]
        literal = 1.0 / float(np.linalg.det(change.T @ x.q @ change))

        lam = float(x.v @ SymmetricSpaceService.pi_n1(x).Q @ x.v)
        return max(abs(lam - literal), abs(solved - literal)) / max(1.0, abs(literal))

    @staticmethod
    def tilde_lift(imm: EquiaffineImmersion, p) -> XPoint:
        """
        (f(p), f_*(T_pM), h_p) for a centroaffinely normalized hyperbolic sphere.

        Raises:
            NotHyperbolicSphere: when h is not positive definite
        """
        data = AffineStructureService.decompose_structure(imm, p)
        if not is_positive_definite(data.h):
            raise NotHyperbolicSphere(f"Affine metric of {imm.name} is not positive definite")
        jet = imm.f.jet(p, 1)
        return XPoint(v=jet.value, basis=jet.J, q=data.h)

    @staticmethod
    def blaschke_lift(imm: EquiaffineImmersion, p) -> SymPoint:
        return SymmetricSpaceService.pi_n1(SymmetricSpaceService.tilde_lift(imm, p))

    @staticmethod
    def blaschke_lift_chart(imm: EquiaffineImmersion) -> ChartMap:
        """p ↦ Q(p) flattened row-major, differentiated by finite differences."""
        m = imm.n + 1
        return ChartMap.from_function(
            lambda q: SymmetricSpaceService.blaschke_lift(imm, q).Q.ravel(),
            imm.n,
            m * m,
            domain=imm.f.domain,
            step=imm.fd_step,
            name=f"blaschke_lift[{imm.name}]",
        )

    @staticmethod
    def spd_tension(psi: ChartMap, metric: MetricField, p) -> np.ndarray:
        """
        Tension of a map into positive forms for the invariant metric tr(Q⁻¹AQ⁻¹B).

        τ = Σ hⁱʲ (∂ᵢ∂ⱼψ − Γᵏᵢⱼ ∂ₖψ − ½(∂ᵢψ ψ⁻¹ ∂ⱼψ + ∂ⱼψ ψ⁻¹ ∂ᵢψ))

        Raises:
            NotPositive: when ψ(p) is not positive definite
        """
        p = as_point(p)
        m = int(round(np.sqrt(psi.target_dim)))
        jet = psi.jet(p, 2)
        Q = jet.value.reshape(m, m)
        if not is_positive_definite(Q):
            raise NotPositive(f"Map value at {p.tolist()} is not positive definite")
        first = jet.J.reshape(m, m, -1)
        second = jet.H.reshape(m, m, p.size, p.size)
        gamma = christoffel(metric, p)
        h_inv = np.linalg.inv(metric.at(p))
        Q_inv = np.linalg.inv(Q)
        tension = np.zeros((m, m))
        for i in range(p.size):
            for j in range(p.size):
                term = (
                    second[:, :, i, j]
                    - np.einsum("k,abk->ab", gamma[:, i, j], first)
                    - 0.5 * (first[:, :, i] @ Q_inv @ first[:, :, j] + first[:, :, j] @ Q_inv @ first[:, :, i])
                )
                tension += h_inv[i, j] * term
        return 0.5 * (tension + tension.T)

    @staticmethod
    def tension_norm(Q, tension) -> float:
        """‖τ‖_Q = √tr(Q⁻¹τQ⁻¹τ)."""
        Q_inv = np.linalg.inv(np.asarray(Q, dtype=float))
        return float(np.sqrt(abs(np.trace(Q_inv @ tension @ Q_inv @ tension))))

    @staticmethod
    def harmonicity_report(imm: EquiaffineImmersion, samples: Sequence, harm_tol: float) -> Dict[str, object]:
        """
        Tension of the Blaschke lift and of its tilde lift over the samples.

        Returns:
            Dict with the per-sample norms tensions (‖τ(𝒢_f)‖_Q) and
            tilde_tensions (‖Σ hⁱʲ∇ʰ_iC_j··‖), their sups and the verdicts
        """
        normalized = AffineStructureService.centroaffine_normalize(imm)
        psi = SymmetricSpaceService.blaschke_lift_chart(normalized)
        metric = AffineStructureService.affine_metric_field(normalized)
        m = imm.n + 1
        tensions = []
        tilde_tensions = []
        for q in samples:
            tension = SymmetricSpaceService.spd_tension(psi, metric, q)
            tensions.append(SymmetricSpaceService.tension_norm(psi(q).reshape(m, m), tension))
            tilde = AffineStructureService.tilde_tension(normalized, q)
            tilde_tensions.append(float(np.linalg.norm(tilde)))
        supremum = max(tensions, default=0.0)
        tilde_supremum = max(tilde_tensions, default=0.0)
        logger.info(f"Blaschke lift tension of {imm.name}: {supremum:.3e} (tilde {tilde_supremum:.3e})")
        return {
            "tensions": tensions,
            "tilde_tensions": tilde_tensions,
            "sup": supremum,
            "harmonic": supremum <= harm_tol,
            "tilde_sup": tilde_supremum,
            "tilde_harmonic": tilde_supremum <= harm_tol,
        }

    @staticmethod
    def unimodular_frame(imm: EquiaffineImmersion, p, tol: float = 1e-8) -> np.ndarray:
        """
        g = [f_* h^{−1/2} | f], an h-orthonormal tangent frame completed by f.

        Raises:
            FrameNotUnimodular: when |det g| differs from 1 by more than tol
        """
        data = AffineStructureService.decompose_structure(imm, p)
        jet = imm.f.jet(p, 1)
        frame = np.column_stack([jet.J @ inv_sqrt_spd(data.h), jet.value])
        determinant = float(np.linalg.det(frame))
        if abs(abs(determinant) - 1.0) > tol:
            raise FrameNotUnimodular(f"Frame determinant is {determinant:.12g}", value=determinant)
        return frame

    @staticmethod
    def maurer_cartan_blocks(imm: EquiaffineImmersion, p, X, tol: float = 1e-8) -> Dict[str, np.ndarray]:
        """
        Block decomposition of g⁻¹∂_X g for the unimodular frame.

        With g⁻¹∂_X g = [[A, a], [bᵀ, d]] the horizontal-fiber part is ½(a − b),
        the off-diagonal symmetric part ½(a + b), and the diagonal block splits
        into its symmetric and antisymmetric parts.
        """
        p = as_point(p)
        n = imm.n
        frame = SymmetricSpaceService.unimodular_frame(imm, p, tol)
        derivative = fd_derivative(
            lambda q: SymmetricSpaceService.unimodular_frame(imm, q, tol), p, imm.fd_step
        ) @ as_point(X)
        M = np.linalg.solve(frame, derivative)
        A = M[:n, :n]
        a = M[:n, n]
        b = M[n, :n]
        diagonal = block_diag(A, [[M[n, n]]])
        return {
            "M": M,
            "k_m": 0.5 * (a - b),
            "p_m": 0.5 * (a + b),
            "p_h": 0.5 * (diagonal + diagonal.T),
            "k_h": 0.5 * (diagonal - diagonal.T),
            "trace": np.array([np.trace(M)]),
            "diagonal_trace": np.array([np.trace(A)]),
        }

    @staticmethod
    def sl_act(M, Q) -> np.ndarray:
        """M∗Q = M⁻ᵀQM⁻¹."""
        M_inv = np.linalg.inv(np.asarray(M, dtype=float))
        return M_inv.T @ np.asarray(Q, dtype=float) @ M_inv

    @staticmethod
    def phi_embed(Q) -> YPoint:
        """
        The graph {(x, Qx)} of Q as a positive subspace.

        Raises:
            NotPositive: when Q is not positive definite
        """
        Q = np.asarray(Q, dtype=float)
        if not is_positive_definite(Q):
            raise NotPositive("Form is not positive definite")
        return YPoint(W=np.vstack([np.eye(Q.shape[0]), Q]))

    @staticmethod
    def equivariance_residual(M, Q) -> float:
        """‖Proj Φ(M∗Q) − Proj ι(M)Φ(Q)‖."""
        moved = SymmetricSpaceService.phi_embed(SymmetricSpaceService.sl_act(M, Q))
        image = YPoint(W=SigmaMapService.iota(M) @ SymmetricSpaceService.phi_embed(Q).W)
        return float(np.max(np.abs(moved.projector - image.projector)))

    @staticmethod
    def composed_tension(imm: EquiaffineImmersion, p, normalized: Optional[EquiaffineImmersion] = None) -> float:
        """
        Tension of Φ∘𝒢_f in the projector model.

        The ambient Laplacian Σ hⁱʲ(∂ᵢ∂ⱼP − Γᵏᵢⱼ∂ₖP) is projected to the tangent
        space PX(1−P) + (1−P)XP of the projector orbit.
        """
        p = as_point(p)
        normalized = normalized or AffineStructureService.centroaffine_normalize(imm)
        size = 2 * (imm.n + 1)
        chart = ChartMap.from_function(
            lambda q: SymmetricSpaceService.phi_embed(SymmetricSpaceService.blaschke_lift(normalized, q).Q).projector.ravel(),
            imm.n,
            size * size,
            domain=imm.f.domain,
            step=normalized.fd_step,
            name=f"composed[{imm.name}]",
        )
        metric = AffineStructureService.affine_metric_field(normalized)
        jet = chart.jet(p, 2)
        gamma = christoffel(metric, p)
        h_inv = np.linalg.inv(metric.at(p))
        first = jet.J.reshape(size, size, -1)
        second = jet.H.reshape(size, size, p.size, p.size)
        laplacian = (
            np.einsum("ij,abij->ab", h_inv, second)
            - np.einsum("ij,kij,abk->ab", h_inv, gamma, first)
        )
        P = jet.value.reshape(size, size)
        complement = np.eye(size) - P
        tangential = P @ laplacian @ complement + complement @ laplacian @ P
        return float(np.linalg.norm(tangential))
