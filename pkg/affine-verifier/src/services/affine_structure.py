"""
Affine structure service: structure equations, Blaschke normalization,
conormal map, dual structure and Pick-tensor invariants of equiaffine
hypersurface immersions.
"""
import itertools
import logging
from dataclasses import dataclass, field, replace
from typing import Dict, Optional, Sequence

import numpy as np

from src.config import settings
from src.errors import (
    DegenerateMetric,
    IndefiniteMetric,
    NonConstantRescale,
    NotCentroaffine,
    SingularM,
    SingularMatrix,
    SingularSystem,
    TransversalityLost,
)
from src.kernel.calculus import MetricField, christoffel
from src.kernel.charts import ChartMap, as_point, fd_derivative
from src.kernel.linalg import signature_of, solve

logger = logging.getLogger(__name__)


@dataclass
class EquiaffineImmersion:
    """
    An immersion f: U → ℝⁿ⁺¹ with transversal field ξ.

    `nu` optionally carries a closed-form conormal chart; without it the
    conormal is solved pointwise and differentiated numerically. `step` is
    the difference step of those numerical derivatives.
    """

    f: ChartMap
    xi: ChartMap
    orientation: int = 1
    nu: Optional[ChartMap] = None
    base_point: Optional[np.ndarray] = None
    name: str = ""
    step: Optional[float] = None

    @property
    def n(self) -> int:
        return self.f.domain_dim

    @property
    def fd_step(self) -> float:
        return self.step or settings.FD_STEP

    @property
    def mode(self) -> str:
        charts = [self.f, self.xi] + ([self.nu] if self.nu is not None else [])
        return "analytic" if all(chart.mode == "analytic" for chart in charts) else "fd"

    @property
    def origin(self) -> np.ndarray:
        if self.base_point is None:
            return np.zeros(self.n)
        return as_point(self.base_point)


@dataclass
class AffineData:
    """Solution of the structure equations at one chart point."""

    gamma: np.ndarray
    h: np.ndarray
    S: np.ndarray
    tau: np.ndarray
    theta: float
    reconstruction_residual: float = 0.0


@dataclass
class PickData:
    """Pick tensor C, cubic form A and the trace 1-form Tr_h(C)."""

    C: np.ndarray
    A: np.ndarray
    trace: np.ndarray


@dataclass
class ConormalData:
    """Conormal value with the dual connection and dual metric at a point."""

    nu: np.ndarray
    gamma_bar: np.ndarray
    h_bar: np.ndarray
    residuals: Dict[str, float] = field(default_factory=dict)


@dataclass
class SphereReport:
    max_residual: float
    verdict: bool
    samples: int


class AffineStructureService:
    """Service for the equiaffine structure equations and their invariants."""

    @staticmethod
    def transversal_frame(imm: EquiaffineImmersion, p, order: int = 2):
        """
        Frame [f_*e₁ … f_*eₙ | ξ] at p together with the jets used to build it.

        Raises:
            TransversalityLost: when ξ is (numerically) tangent
        """
        jet_f = imm.f.jet(p, order)
        jet_xi = imm.xi.jet(p, 1)
        frame = np.column_stack([jet_f.J, jet_xi.value])
        determinant = float(np.linalg.det(frame))
        scale = float(np.prod(np.linalg.norm(frame, axis=0)))
        if scale == 0.0 or abs(determinant) < settings.SINGULAR_TOL * scale:
            raise TransversalityLost(
                f"Transversal field is tangent at {as_point(p).tolist()} (det={determinant:.3e})",
                value=determinant,
            )
        return frame, jet_f, jet_xi

    @staticmethod
    def decompose_structure(
        imm: EquiaffineImmersion,
        p,
        reconstruction_tol: Optional[float] = None,
    ) -> AffineData:
        """
        Solve the structure equations at p.

        D_{e_i} f_* e_j = Σ_k Γᵏᵢⱼ f_* e_k + h_ij ξ and
        D_{e_i} ξ = −f_*(S e_i) + τ(e_i) ξ.

        Args:
            imm: Immersion with transversal field
            p: Chart point
            reconstruction_tol: Relative residual bound for the solved systems

        Returns:
            AffineData with Γ[k, i, j], h, S, τ and θ = ±det[f_*, ξ]
        """
        tol = reconstruction_tol or 1e-9
        frame, jet_f, jet_xi = AffineStructureService.transversal_frame(imm, p)
        n = imm.n
        second = jet_f.H.reshape(n + 1, n * n)
        rhs = np.column_stack([second, jet_xi.J])
        try:
            coefficients = solve(frame, rhs)
        except SingularMatrix as singular:
            raise SingularSystem(f"Structure equations are singular: {singular}", value=singular.value)
        residual = float(np.linalg.norm(frame @ coefficients - rhs))
        scale = float(np.linalg.norm(frame) * np.linalg.norm(coefficients) + np.linalg.norm(rhs))
        if residual > tol * max(scale, 1.0):
            raise SingularSystem(
                f"Reconstruction residual {residual:.3e} exceeds tolerance",
                value=residual,
            )
        structure = coefficients[:, : n * n].reshape(n + 1, n, n)
        shape = coefficients[:, n * n:]
        h = structure[n]
        return AffineData(
            gamma=0.5 * (structure[:n] + structure[:n].transpose(0, 2, 1)),
            h=0.5 * (h + h.T),
            S=-shape[:n],
            tau=shape[n].copy(),
            theta=imm.orientation * float(np.linalg.det(frame)),
            reconstruction_residual=residual / max(scale, 1.0),
        )

    @staticmethod
    def affine_metric_field(imm: EquiaffineImmersion) -> MetricField:
        """The affine metric h as a metric field on the chart."""
        return MetricField(
            lambda q: AffineStructureService.decompose_structure(imm, q).h,
            imm.n,
            step=imm.fd_step,
            name=f"h[{imm.name}]",
        )

    @staticmethod
    def _volume_ratio(imm: EquiaffineImmersion, p) -> float:
        data = AffineStructureService.decompose_structure(imm, p)
        omega_h = float(np.sqrt(abs(np.linalg.det(data.h))))
        return omega_h / abs(data.theta)

    @staticmethod
    def _constant_ratio(imm: EquiaffineImmersion, samples: Optional[Sequence], tol: float) -> float:
        points = [imm.origin] if samples is None else [as_point(q) for q in samples]
        ratios = np.array([AffineStructureService._volume_ratio(imm, q) for q in points])
        spread = float(np.max(ratios) - np.min(ratios)) / float(np.max(ratios))
        if spread > tol:
            raise NonConstantRescale(
                f"Volume ratio ω_h/|θ| varies by {spread:.3e} across samples",
                value=spread,
            )
        return float(ratios[0])

    @staticmethod
    def blaschke_normalize(
        imm: EquiaffineImmersion,
        samples: Optional[Sequence] = None,
        tol: float = 1e-7,
    ) -> EquiaffineImmersion:
        """
        Rescale ξ by a constant c > 0 so that |θ| = ω_h.

        Under ξ → cξ the metric scales as h → h/c and θ → cθ, hence
        c^{1+n/2} = ω_h/|θ|. The orientation flag is flipped when needed so
        that θ > 0.

        Raises:
            IndefiniteMetric: when h is not definite at the base point
            NonConstantRescale: when ω_h/|θ| varies over the samples
        """
        base = AffineStructureService.decompose_structure(imm, imm.origin)
        positive, negative, _ = signature_of(base.h)
        if positive != imm.n and negative != imm.n:
            raise IndefiniteMetric(f"Affine metric has signature ({positive}, {negative})")
        ratio = AffineStructureService._constant_ratio(imm, samples, tol)
        c = ratio ** (1.0 / (1.0 + imm.n / 2.0))
        logger.debug(f"Blaschke rescale of {imm.name}: c={c:.12g}")
        return replace(
            imm,
            xi=imm.xi.scaled(c),
            nu=imm.nu.scaled(1.0 / c) if imm.nu is not None else None,
            orientation=imm.orientation * (1 if base.theta > 0 else -1),
        )

    @staticmethod
    def centroaffine_residual(imm: EquiaffineImmersion, p) -> float:
        """Distance of ξ(p) from the line through f(p), relative to |ξ|."""
        position = imm.f(p)
        transversal = imm.xi(p)
        along = (transversal @ position) / (position @ position) * position
        return float(np.linalg.norm(transversal - along) / np.linalg.norm(transversal))

    @staticmethod
    def centroaffine_normalize(
        imm: EquiaffineImmersion,
        samples: Optional[Sequence] = None,
        tol: float = 1e-7,
    ) -> EquiaffineImmersion:
        """
        Rescale a centroaffine immersion f → k·f (ξ → k·ξ) so that |θ| = ω_h.

        h is unchanged and θ scales by k^{n+1}.

        Raises:
            NotCentroaffine: when ξ is not parallel to f at the base point
        """
        if AffineStructureService.centroaffine_residual(imm, imm.origin) > 1e-9:
            raise NotCentroaffine(f"Transversal of {imm.name} is not parallel to the position vector")
        ratio = AffineStructureService._constant_ratio(imm, samples, tol)
        k = ratio ** (1.0 / (imm.n + 1.0))
        return replace(
            imm,
            f=imm.f.scaled(k),
            xi=imm.xi.scaled(k),
            nu=imm.nu.scaled(1.0 / k) if imm.nu is not None else None,
        )

    @staticmethod
    def conormal(imm: EquiaffineImmersion, p) -> np.ndarray:
        """
        Covector ν_p with ν_p(ξ_p) = 1 and ν_p(f_* X) = 0.

        Raises:
            SingularSystem: when the frame is singular
        """
        frame, _, _ = AffineStructureService.transversal_frame(imm, p, order=1)
        target = np.zeros(imm.n + 1)
        target[-1] = 1.0
        try:
            return solve(frame.T, target)
        except SingularMatrix as singular:
            raise SingularSystem(f"Conormal system is singular: {singular}", value=singular.value)

    @staticmethod
    def conormal_map(imm: EquiaffineImmersion) -> ChartMap:
        """The conormal as a chart; closed form when the immersion carries one."""
        if imm.nu is not None:
            return imm.nu
        return ChartMap.from_function(
            lambda q: AffineStructureService.conormal(imm, q),
            imm.n,
            imm.n + 1,
            domain=imm.f.domain,
            step=imm.fd_step,
            name=f"nu[{imm.name}]",
        )

    @staticmethod
    def conormal_residuals(imm: EquiaffineImmersion, p) -> Dict[str, float]:
        """
        Residuals of ν(ξ) = 1, ν(f_*X) = 0 and ν_*(Y)(f_*X) + h(Y, X) = 0.
        """
        data = AffineStructureService.decompose_structure(imm, p)
        jet_f = imm.f.jet(p, 1)
        jet_nu = AffineStructureService.conormal_map(imm).jet(p, 1)
        transversal = imm.xi(p)
        return {
            "normalization": abs(float(jet_nu.value @ transversal) - 1.0),
            "tangency": float(np.max(np.abs(jet_nu.value @ jet_f.J))),
            "metric": float(np.max(np.abs(jet_nu.J.T @ jet_f.J + data.h))),
        }

    @staticmethod
    def _metric_derivative(imm: EquiaffineImmersion, p) -> np.ndarray:
        """dh[i, j, k] = ∂_i h_jk."""
        derivative = fd_derivative(
            lambda q: AffineStructureService.decompose_structure(imm, q).h,
            p,
            imm.fd_step,
        )
        return np.moveaxis(derivative, -1, 0)

    @staticmethod
    def pick_tensor(imm: EquiaffineImmersion, p) -> PickData:
        """
        Pick tensor C_ijk = ∂ᵢh_jk − Γᵐᵢⱼ h_mk − Γᵐᵢₖ h_jm.

        A is defined by C(X, Y, Z) = −2h(A(X)Y, Z), stored as A[i, l, j] =
        A(e_i)ˡ_j, and trace[i] = tr(h⁻¹ ∇_{e_i} h).

        Raises:
            DegenerateMetric: when h is degenerate at p
        """
        p = as_point(p)
        data = AffineStructureService.decompose_structure(imm, p)
        if signature_of(data.h)[2] > 0:
            raise DegenerateMetric(f"Affine metric is degenerate at {p.tolist()}")
        dh = AffineStructureService._metric_derivative(imm, p)
        lowered = np.einsum("mij,mk->ijk", data.gamma, data.h)
        C = dh - lowered - lowered.transpose(0, 2, 1)
        h_inv = np.linalg.inv(data.h)
        A = -0.5 * np.einsum("lk,ijk->ilj", h_inv, C)
        trace = np.einsum("jk,ijk->i", h_inv, C)
        return PickData(C=C, A=A, trace=trace)

    @staticmethod
    def codazzi_residuals(imm: EquiaffineImmersion, p) -> Dict[str, float]:
        """
        Residuals of the Codazzi equations for h and S, the h-symmetry of S
        and the total symmetry of C.
        """
        p = as_point(p)
        data = AffineStructureService.decompose_structure(imm, p)
        pick = AffineStructureService.pick_tensor(imm, p)
        dS = fd_derivative(
            lambda q: AffineStructureService.decompose_structure(imm, q).S,
            p,
            imm.fd_step,
        )
        # dS[l, j, i] = ∂_i Sˡ_j
        codazzi_S = (
            dS.transpose(0, 2, 1) - dS
            + np.einsum("lim,mj->lij", data.gamma, data.S)
            - np.einsum("ljm,mi->lij", data.gamma, data.S)
        )
        return {
            "codazzi_h": float(np.max(np.abs(pick.C - pick.C.transpose(1, 0, 2)))),
            "codazzi_S": float(np.max(np.abs(codazzi_S))),
            "shape_symmetry": float(np.max(np.abs(data.S.T @ data.h - data.h @ data.S))),
            "pick_symmetry": AffineStructureService.total_symmetry_residual(pick.C),
            "cubic_form": float(
                np.max(np.abs(pick.C + 2.0 * np.einsum("ilj,lk->ijk", pick.A, data.h)))
            ),
            "equiaffine": float(np.max(np.abs(data.tau))),
        }

    @staticmethod
    def total_symmetry_residual(tensor: np.ndarray) -> float:
        """Largest deviation of a tensor from its index permutations."""
        return max(
            float(np.max(np.abs(tensor - tensor.transpose(permutation))))
            for permutation in itertools.permutations(range(tensor.ndim))
        )

    @staticmethod
    def is_proper_affine_sphere(
        imm: EquiaffineImmersion,
        samples: Sequence,
        sphere_tol: float,
    ) -> SphereReport:
        """
        Proper-affine-sphere test for a centroaffine immersion: Tr_h(C) ≡ 0.

        Raises:
            NotCentroaffine: when ξ is not parallel to f at some sample
        """
        worst = 0.0
        for q in samples:
            if AffineStructureService.centroaffine_residual(imm, q) > 1e-8:
                raise NotCentroaffine(
                    f"Transversal of {imm.name} is not parallel to f at {as_point(q).tolist()}"
                )
            trace = AffineStructureService.pick_tensor(imm, q).trace
            worst = max(worst, float(np.linalg.norm(trace)))
        logger.debug(f"Proper-sphere residual for {imm.name}: {worst:.3e}")
        return SphereReport(max_residual=worst, verdict=worst <= sphere_tol, samples=len(samples))

    @staticmethod
    def dual_structure(imm: EquiaffineImmersion, p) -> ConormalData:
        """
        Solve D_X ν_* Y = ν_*(∇̄_X Y) − h̄(X, Y) ν and check the duality relations
        h̄ = h(S·, ·), X·h(Y, Z) = h(∇_X Y, Z) + h(Y, ∇̄_X Z) and ∇ʰ = ½(∇ + ∇̄).
        """
        p = as_point(p)
        n = imm.n
        data = AffineStructureService.decompose_structure(imm, p)
        jet_nu = AffineStructureService.conormal_map(imm).jet(p, 2)
        frame = np.column_stack([jet_nu.J, jet_nu.value])
        try:
            coefficients = solve(frame, jet_nu.H.reshape(n + 1, n * n))
        except SingularMatrix as singular:
            raise SingularSystem(f"Dual structure equations are singular: {singular}", value=singular.value)
        structure = coefficients.reshape(n + 1, n, n)
        gamma_bar = 0.5 * (structure[:n] + structure[:n].transpose(0, 2, 1))
        h_bar = -0.5 * (structure[n] + structure[n].T)
        dh = AffineStructureService._metric_derivative(imm, p)
        compatibility = (
            dh
            - np.einsum("mij,mk->ijk", data.gamma, data.h)
            - np.einsum("mik,jm->ijk", gamma_bar, data.h)
        )
        levi_civita = christoffel(AffineStructureService.affine_metric_field(imm), p)
        return ConormalData(
            nu=jet_nu.value,
            gamma_bar=gamma_bar,
            h_bar=h_bar,
            residuals={
                "dual_metric": float(np.max(np.abs(h_bar - data.S.T @ data.h))),
                "compatibility": float(np.max(np.abs(compatibility))),
                "mean_connection": float(
                    np.max(np.abs(levi_civita - 0.5 * (data.gamma + gamma_bar)))
                ),
            },
        )

    @staticmethod
    def dual_immersion(imm: EquiaffineImmersion) -> EquiaffineImmersion:
        """
        The conormal as a centroaffine immersion (ν, −ν) into the dual space.

        Its affine metric is h̄ and its own conormal is −ξ.
        """
        nu = AffineStructureService.conormal_map(imm)
        return EquiaffineImmersion(
            f=nu,
            xi=nu.scaled(-1.0),
            nu=imm.xi.scaled(-1.0),
            base_point=imm.base_point,
            name=f"dual[{imm.name}]",
            step=imm.step,
        )

    @staticmethod
    def dual_pick(imm: EquiaffineImmersion, p):
        """
        Dual Pick tensor C̄ = ∇̄h̄ and the trace 1-form tr_{−h̄}(C̄).

        Returns:
            (C̄[i, j, k], t[k] = −Σ h̄ⁱʲ C̄_ijk)
        """
        p = as_point(p)
        dual = AffineStructureService.dual_structure(imm, p)

        def h_bar(q):
            data = AffineStructureService.decompose_structure(imm, q)
            product = data.S.T @ data.h
            return 0.5 * (product + product.T)

        dh_bar = np.moveaxis(fd_derivative(h_bar, p, imm.fd_step), -1, 0)
        lowered = np.einsum("mij,mk->ijk", dual.gamma_bar, dual.h_bar)
        C_bar = dh_bar - lowered - lowered.transpose(0, 2, 1)
        trace = -np.einsum("ij,ijk->k", np.linalg.inv(dual.h_bar), C_bar)
        return C_bar, trace

    @staticmethod
    def levi_civita(imm: EquiaffineImmersion, p) -> np.ndarray:
        return christoffel(AffineStructureService.affine_metric_field(imm), p)

    @staticmethod
    def pick_trace_hessian(imm: EquiaffineImmersion, p) -> np.ndarray:
        """
        Covariant derivative of the trace 1-form: D[j, i] = (∇ʰ_{e_j} Tr_h C)(e_i).
        """
        p = as_point(p)
        trace = AffineStructureService.pick_tensor(imm, p).trace
        derivative = fd_derivative(
            lambda q: AffineStructureService.pick_tensor(imm, q).trace,
            p,
            imm.fd_step,
        )
        gamma_h = AffineStructureService.levi_civita(imm, p)
        return derivative.T - np.einsum("kji,k->ji", gamma_h, trace)

    @staticmethod
    def pick_trace_derivative(imm: EquiaffineImmersion, p, X, Y) -> float:
        """
        tr_h(∇ʰA)(X, Y) = X·tr(A(Y)) − tr(A(∇ʰ_X Y)) for constant chart fields.

        Since tr A(Y) = −½ Tr_h(C)(Y) this equals −½ (∇ʰ Tr_h C)(X, Y).
        """
        hessian = AffineStructureService.pick_trace_hessian(imm, p)
        return float(-0.5 * as_point(X) @ hessian @ as_point(Y))

    @staticmethod
    def _cubic_form_components(imm: EquiaffineImmersion, q) -> np.ndarray:
        # comp[l, j, k] = A(e_j)ˡ_k
        return AffineStructureService.pick_tensor(imm, q).A.transpose(1, 0, 2)

    @staticmethod
    def cubic_derivative_symmetry(imm: EquiaffineImmersion, p):
        """
        The tensor T(X, Y, Z, W) = h((∇ʰ_X A)(Y)Z, W) and its deviation from
        total symmetry.

        Returns:
            (T[i, j, k, w], max permutation residual)
        """
        p = as_point(p)
        data = AffineStructureService.decompose_structure(imm, p)
        gamma_h = AffineStructureService.levi_civita(imm, p)
        A = AffineStructureService._cubic_form_components(imm, p)
        dA = fd_derivative(
            lambda q: AffineStructureService._cubic_form_components(imm, q),
            p,
            imm.fd_step,
        )
        covariant = (
            np.einsum("ljki->iljk", dA)
            + np.einsum("lim,mjk->iljk", gamma_h, A)
            - np.einsum("mij,lmk->iljk", gamma_h, A)
            - np.einsum("mik,ljm->iljk", gamma_h, A)
        )
        T = np.einsum("iljk,lw->ijkw", covariant, data.h)
        return T, AffineStructureService.total_symmetry_residual(T)

    @staticmethod
    def tilde_tension(imm: EquiaffineImmersion, p) -> np.ndarray:
        """
        Trace Σ hⁱʲ (∇ʰ_i C)_{jkl} of the covariant derivative of the Pick tensor.
        """
        p = as_point(p)
        data = AffineStructureService.decompose_structure(imm, p)
        gamma_h = AffineStructureService.levi_civita(imm, p)
        C = AffineStructureService.pick_tensor(imm, p).C
        dC = fd_derivative(
            lambda q: AffineStructureService.pick_tensor(imm, q).C,
            p,
            imm.fd_step,
        )
        covariant = (
            np.einsum("jkli->ijkl", dC)
            - np.einsum("mij,mkl->ijkl", gamma_h, C)
            - np.einsum("mik,jml->ijkl", gamma_h, C)
            - np.einsum("mil,jkm->ijkl", gamma_h, C)
        )
        return np.einsum("ij,ijkl->kl", np.linalg.inv(data.h), covariant)

    @staticmethod
    def sl_transform(imm: EquiaffineImmersion, M) -> EquiaffineImmersion:
        """
        Affine image f → M·f, ξ → M·ξ, ν → ν·M⁻¹.

        h, S, τ and C are invariant; θ scales by det M.
        """
        M = np.asarray(M, dtype=float)
        determinant = float(np.linalg.det(M))
        if abs(determinant) < settings.SINGULAR_TOL:
            raise SingularM(f"Transformation is singular (det={determinant:.3e})", value=determinant)
        return replace(
            imm,
            f=imm.f.linear(M),
            xi=imm.xi.linear(M),
            nu=imm.nu.linear(np.linalg.inv(M).T) if imm.nu is not None else None,
        )
