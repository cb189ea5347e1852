"""
Split space service.

Vectors of V = ℝᵐ ⊕ (ℝᵐ)* are stored as concatenated arrays (x, y) of
length 2m. The quadric of level κ = ±1 is {ĝ(q, q) = κ}; the para-Sasaki
structure on it is built from η = ω̂(q, ·)/κ, ζ = P̂q and φ = −pr_H ∘ P̂.
"""
import itertools
import logging
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np
from scipy.linalg import null_space

from src.config import settings
from src.errors import DegenerateFrame, DimMismatch, NotOnQuadric, NotTangent
from src.kernel.calculus import lie_bracket
from src.kernel.charts import ChartMap, Jet, as_point, fd_derivative
from src.kernel.linalg import signature_of

logger = logging.getLogger(__name__)

QUADRIC_TOL = 1e-10
TANGENT_TOL = 1e-10


def _halves(a) -> Tuple[np.ndarray, np.ndarray]:
    a = as_point(a)
    if a.size % 2:
        raise DimMismatch(f"Split vectors have even length, got {a.size}")
    m = a.size // 2
    return a[:m], a[m:]


def gram_matrix(m: int) -> np.ndarray:
    """Matrix Ĝ of ĝ on ℝᵐ ⊕ ℝᵐ."""
    return 0.5 * np.block([[np.zeros((m, m)), np.eye(m)], [np.eye(m), np.zeros((m, m))]])


def phat_matrix(m: int) -> np.ndarray:
    return np.diag(np.concatenate([np.ones(m), -np.ones(m)]))


def omega_matrix(m: int) -> np.ndarray:
    """Matrix of ω̂(a, b) = ĝ(a, P̂b)."""
    return gram_matrix(m) @ phat_matrix(m)


@dataclass
class QuadricPoint:
    """A point of the quadric ĝ(q, q) = kind."""

    vector: np.ndarray
    kind: int

    @property
    def m(self) -> int:
        return self.vector.size // 2

    @property
    def x(self) -> np.ndarray:
        return self.vector[: self.m]

    @property
    def y(self) -> np.ndarray:
        return self.vector[self.m:]


@dataclass
class TauPoint:
    """
    Gauged representative of an ℝ-orbit: ‖x‖ = ‖y‖, with the sign of the
    first significant entry of x as its projective class.
    """

    vector: np.ndarray
    kind: int
    sign: int

    @property
    def m(self) -> int:
        return self.vector.size // 2

    @property
    def x(self) -> np.ndarray:
        return self.vector[: self.m]

    @property
    def y(self) -> np.ndarray:
        return self.vector[self.m:]

    def distance(self, other: "TauPoint") -> float:
        """Euclidean distance between representatives, ignoring the sign class."""
        return float(min(
            np.linalg.norm(self.vector - other.vector),
            np.linalg.norm(self.vector + other.vector),
        ))


@dataclass
class ParaSasakiFrame:
    """
    Para-Sasaki data at a quadric point as ambient matrices.

    η(w) = eta·w, φ acts as phi @ w and g(u, w) = uᵀ·g·w on tangent vectors;
    `tangent` holds an orthonormal (Euclidean) basis of T_qQ.
    """

    point: QuadricPoint
    eta: np.ndarray
    zeta: np.ndarray
    phi: np.ndarray
    g: np.ndarray
    tangent: np.ndarray

    @property
    def restricted_metric(self) -> np.ndarray:
        return self.tangent.T @ self.g @ self.tangent


@dataclass
class ParaKahlerBase:
    """Para-Kähler data on the horizontal space at a gauged point."""

    basis: np.ndarray
    g: np.ndarray
    P: np.ndarray
    omega: np.ndarray
    signature: Tuple[int, int, int]
    closedness: float


class SplitSpaceService:
    """Service for the split space, its quadrics and their contact geometry."""

    @staticmethod
    def ghat(a, b) -> float:
        x, y = _halves(a)
        u, v = _halves(b)
        if x.size != u.size:
            raise DimMismatch(f"Split vectors of lengths {2 * x.size} and {2 * u.size}")
        return 0.5 * float(x @ v + y @ u)

    @staticmethod
    def phat(a) -> np.ndarray:
        x, y = _halves(a)
        return np.concatenate([x, -y])

    @staticmethod
    def omegahat(a, b) -> float:
        return SplitSpaceService.ghat(a, SplitSpaceService.phat(b))

    @staticmethod
    def model_isometry(x, y) -> np.ndarray:
        """
        Map the diagonal model ⟨(x, y), (x, y)⟩ = |x|² − |y|² into the ĝ model.

        Returns:
            (x + y, x − y), whose ĝ-norm equals the diagonal norm
        """
        x = as_point(x)
        y = as_point(y)
        if x.size != y.size:
            raise DimMismatch(f"Halves have dimensions {x.size} and {y.size}")
        return np.concatenate([x + y, x - y])

    @staticmethod
    def anti_isometry_F(a) -> np.ndarray:
        """(x, y) ↦ (−x, y); reverses ĝ and commutes with P̂."""
        x, y = _halves(a)
        return np.concatenate([-x, y])

    @staticmethod
    def r_action(t: float, a) -> np.ndarray:
        """Ψ_t(x, y) = (eᵗx, e⁻ᵗy)."""
        x, y = _halves(a)
        return np.concatenate([np.exp(t) * x, np.exp(-t) * y])

    @staticmethod
    def quadric_point(a, kind: Optional[int] = None, tol: float = QUADRIC_TOL) -> QuadricPoint:
        """
        Validate a quadric point, inferring the kind from ĝ(a, a) when absent.

        Raises:
            NotOnQuadric: when |ĝ(a, a) − kind| exceeds tol
        """
        a = as_point(a)
        norm = SplitSpaceService.ghat(a, a)
        if kind is None:
            kind = 1 if norm > 0 else -1
        if abs(norm - kind) > tol:
            raise NotOnQuadric(f"ĝ(q, q) = {norm:.12g} differs from {kind}", value=norm)
        return QuadricPoint(vector=a.copy(), kind=kind)

    @staticmethod
    def normalize(a) -> np.ndarray:
        """Radial rescale of a non-null vector onto the quadric ĝ = ±1."""
        a = as_point(a)
        norm = SplitSpaceService.ghat(a, a)
        if abs(norm) < QUADRIC_TOL:
            raise NotOnQuadric("Cannot normalize a null vector", value=norm)
        return a / np.sqrt(abs(norm))

    @staticmethod
    def tau_project(q: QuadricPoint) -> TauPoint:
        """
        Gauge a quadric point along its ℝ-orbit to ‖x‖ = ‖y‖.

        The gauge time is t* = ½ ln(‖y‖/‖x‖).
        """
        x_norm = float(np.linalg.norm(q.x))
        y_norm = float(np.linalg.norm(q.y))
        t_star = 0.5 * np.log(y_norm / x_norm)
        vector = SplitSpaceService.r_action(t_star, q.vector)
        x = vector[: q.m]
        significant = np.flatnonzero(np.abs(x) > 1e-12 * np.max(np.abs(x)))
        sign = 1 if x[significant[0]] > 0 else -1
        return TauPoint(vector=vector, kind=q.kind, sign=sign)

    @staticmethod
    def projective_incidence(tp: TauPoint):
        """
        Projective model ([x], [y]) ∈ ℙⁿ × (ℙⁿ)* of a gauged point.

        Returns:
            (x̂, ŷ, y(x)) with unit representatives, x̂ carrying a positive
            first significant entry and ŷ the matching sign
        """
        x = tp.sign * tp.x
        y = tp.sign * tp.y
        x_hat = x / np.linalg.norm(x)
        y_hat = y / np.linalg.norm(y)
        return x_hat, y_hat, float(x_hat @ y_hat)

    @staticmethod
    def incidence_to_tau(x_hat, y_hat, kind: int) -> TauPoint:
        """
        Inverse of projective_incidence for a non-incident pair.

        Raises:
            NotOnQuadric: when y(x) vanishes
        """
        x_hat = as_point(x_hat)
        y_hat = as_point(y_hat)
        pairing = float(x_hat @ y_hat)
        if abs(pairing) < QUADRIC_TOL or np.sign(pairing) != np.sign(kind):
            raise NotOnQuadric(f"Pair with y(x) = {pairing:.3e} is not on the κ={kind} quadric")
        vector = np.concatenate([x_hat, kind * y_hat / pairing])
        return SplitSpaceService.tau_project(SplitSpaceService.quadric_point(vector, kind, tol=1e-9))

    @staticmethod
    def _check_tangent(q: QuadricPoint, w) -> np.ndarray:
        w = as_point(w)
        pairing = SplitSpaceService.ghat(w, q.vector)
        if abs(pairing) > TANGENT_TOL * max(1.0, np.linalg.norm(w) * np.linalg.norm(q.vector)):
            raise NotTangent(f"Vector is not tangent to the quadric (ĝ(w, q) = {pairing:.3e})", value=pairing)
        return w

    @staticmethod
    def tangent_projection(q: QuadricPoint, w) -> np.ndarray:
        w = as_point(w)
        return w - SplitSpaceService.ghat(w, q.vector) * q.vector / q.kind

    @staticmethod
    def contact_eta(q: QuadricPoint, w) -> float:
        """
        η_q(w) = ω̂(q, w)/κ.

        Raises:
            NotTangent: when w is not tangent at q
        """
        w = SplitSpaceService._check_tangent(q, w)
        return SplitSpaceService.omegahat(q.vector, w) / q.kind

    @staticmethod
    def d_eta(q: QuadricPoint, u, w) -> float:
        """dη(u, w) = ω̂(u, w)/κ, with dη(X, Y) = ½(Xη(Y) − Yη(X) − η[X, Y])."""
        return SplitSpaceService.omegahat(u, w) / q.kind

    @staticmethod
    def reeb(q: QuadricPoint) -> np.ndarray:
        """ζ = P̂q, tangent with η(ζ) = 1."""
        return SplitSpaceService.phat(q.vector)

    @staticmethod
    def tangent_basis(q: QuadricPoint) -> np.ndarray:
        return null_space((gram_matrix(q.m) @ q.vector)[None, :])

    @staticmethod
    def contact_condition(q: QuadricPoint, frame) -> float:
        """
        Antisymmetrized evaluation of η ∧ (dη)ⁿ on 2n+1 tangent vectors.

        The value is the unnormalized sum over permutations
        Σ sgn(σ) η(v_σ1) dη(v_σ2, v_σ3) ⋯ dη(v_σ2n, v_σ2n+1).

        Args:
            q: Quadric point
            frame: Columns are tangent vectors

        Raises:
            DegenerateFrame: when the frame does not have 2n+1 columns
            NotTangent: when a column is not tangent at q
        """
        frame = np.asarray(frame, dtype=float)
        count = 2 * q.m - 1
        if frame.ndim != 2 or frame.shape != (2 * q.m, count):
            raise DegenerateFrame(f"Expected {count} tangent vectors of length {2 * q.m}, got {frame.shape}")
        vectors = [SplitSpaceService._check_tangent(q, column) for column in frame.T]
        eta = np.array([SplitSpaceService.contact_eta(q, v) for v in vectors])
        d_eta = (np.array(vectors) @ omega_matrix(q.m) @ np.array(vectors).T) / q.kind
        total = 0.0
        for permutation in itertools.permutations(range(count)):
            term = eta[permutation[0]]
            if term == 0.0:
                continue
            for k in range(1, count, 2):
                term *= d_eta[permutation[k], permutation[k + 1]]
            total += _parity(permutation) * term
        return total

    @staticmethod
    def contact_certificate(q: QuadricPoint, frame) -> float:
        """|η ∧ (dη)ⁿ|·‖q‖ divided by the Euclidean volume of the frame; equals n!."""
        frame = np.asarray(frame, dtype=float)
        volume = float(np.sqrt(abs(np.linalg.det(frame.T @ frame))))
        if volume == 0.0:
            raise DegenerateFrame("Frame has zero volume")
        value = SplitSpaceService.contact_condition(q, frame)
        return abs(value) * float(np.linalg.norm(q.vector)) / volume

    @staticmethod
    def _horizontal_projector(a: np.ndarray) -> np.ndarray:
        m = a.size // 2
        G = gram_matrix(m)
        level = float(a @ G @ a)
        zeta = phat_matrix(m) @ a
        return (
            np.eye(2 * m)
            - np.outer(a, G @ a) / level
            + np.outer(zeta, G @ zeta) / level
        )

    @staticmethod
    def _phi_matrix(a: np.ndarray) -> np.ndarray:
        return -SplitSpaceService._horizontal_projector(a) @ phat_matrix(a.size // 2)

    @staticmethod
    def para_sasaki_frame(q: QuadricPoint) -> ParaSasakiFrame:
        """
        Para-Sasaki structure (φ, ζ, η, g) at q with g = −κĝ.

        φ(Y) = −pr_H(P̂Y), where pr_H removes the q and ζ components.

        ĝ carries the factor ½ (ĝ(a, b) = ½(x·y' + y·x')), so the forms here are
        φ = −pr_H∘P̂ and g = −κĝ rather than pr_H∘P̂ with g restricted from ĝ,
        and d_eta is ω̂/κ, the exterior derivative taken with the ½ convention
        dη(X, Y) = ½(Xη(Y) − Yη(X) − η[X, Y]). Normality then reads
        N_φ = 2dη ⊗ ζ (see nijenhuis_residual).

        Raises:
            NotOnQuadric: when q is off its quadric
        """
        q = SplitSpaceService.quadric_point(q.vector, q.kind)
        m = q.m
        return ParaSasakiFrame(
            point=q,
            eta=(omega_matrix(m).T @ q.vector) / q.kind,
            zeta=SplitSpaceService.reeb(q),
            phi=SplitSpaceService._phi_matrix(q.vector),
            g=-q.kind * gram_matrix(m),
            tangent=SplitSpaceService.tangent_basis(q),
        )

    @staticmethod
    def _extension(w: np.ndarray) -> ChartMap:
        """Ambient field a ↦ w − ĝ(w, a)a/ĝ(a, a), tangent to every level set."""
        m = w.size // 2
        G = gram_matrix(m)
        return ChartMap.from_function(
            lambda a: w - (w @ G @ a) / (a @ G @ a) * a,
            2 * m,
            2 * m,
        )

    @staticmethod
    def _phi_field(field: ChartMap) -> ChartMap:
        return ChartMap.from_function(
            lambda a: SplitSpaceService._phi_matrix(a) @ field(a),
            field.domain_dim,
            field.target_dim,
        )

    @staticmethod
    def nijenhuis_residual(q: QuadricPoint, u, w) -> float:
        """
        |N_φ(X, Y) − 2dη(X, Y)ζ| for the ambient extensions of u and w.

        N_φ(X, Y) = φ²[X, Y] + [φX, φY] − φ[φX, Y] − φ[X, φY].
        """
        X = SplitSpaceService._extension(as_point(u))
        Y = SplitSpaceService._extension(as_point(w))
        phi_X = SplitSpaceService._phi_field(X)
        phi_Y = SplitSpaceService._phi_field(Y)
        phi = SplitSpaceService._phi_matrix(q.vector)
        nijenhuis = (
            phi @ phi @ lie_bracket(X, Y, q.vector)
            + lie_bracket(phi_X, phi_Y, q.vector)
            - phi @ lie_bracket(phi_X, Y, q.vector)
            - phi @ lie_bracket(X, phi_Y, q.vector)
        )
        normal = 2.0 * SplitSpaceService.d_eta(q, u, w) * SplitSpaceService.reeb(q)
        return float(np.linalg.norm(nijenhuis - normal))

    @staticmethod
    def random_tangent(q: QuadricPoint, rng: np.random.Generator, count: int) -> np.ndarray:
        """Columns of random tangent vectors at q."""
        return np.column_stack([
            SplitSpaceService.tangent_projection(q, rng.standard_normal(2 * q.m))
            for _ in range(count)
        ])

    @staticmethod
    def axioms_report(q: QuadricPoint, vectors=None, seed: int = 0) -> Dict[str, float]:
        """
        Residuals of the para-Sasaki axioms and the normality condition.

        Args:
            q: Quadric point
            vectors: Tangent vectors as columns, random when absent

        Returns:
            Dict with phi_zeta, eta_phi, phi_squared, metric, d_eta, nijenhuis
        """
        frame = SplitSpaceService.para_sasaki_frame(q)
        if vectors is None:
            vectors = SplitSpaceService.random_tangent(q, np.random.default_rng(seed), 3)
        vectors = [SplitSpaceService._check_tangent(q, v) for v in np.asarray(vectors, dtype=float).T]
        report = {
            "phi_zeta": float(np.linalg.norm(frame.phi @ frame.zeta)),
            "eta_phi": 0.0,
            "phi_squared": 0.0,
            "metric": 0.0,
            "d_eta": 0.0,
            "nijenhuis": 0.0,
        }
        for u in vectors:
            report["eta_phi"] = max(report["eta_phi"], abs(float(frame.eta @ frame.phi @ u)))
            squared = frame.phi @ frame.phi @ u - (u - (frame.eta @ u) * frame.zeta)
            report["phi_squared"] = max(report["phi_squared"], float(np.linalg.norm(squared)))
            for w in vectors:
                compat = (
                    (frame.phi @ u) @ frame.g @ (frame.phi @ w)
                    + u @ frame.g @ w
                    - (frame.eta @ u) * (frame.eta @ w)
                )
                report["metric"] = max(report["metric"], abs(float(compat)))
                contact = SplitSpaceService.d_eta(q, u, w) - u @ frame.g @ frame.phi @ w
                report["d_eta"] = max(report["d_eta"], abs(float(contact)))
        for u, w in itertools.combinations(vectors, 2):
            report["nijenhuis"] = max(report["nijenhuis"], SplitSpaceService.nijenhuis_residual(q, u, w))
        logger.debug(f"Para-Sasaki residuals at κ={q.kind}: {report}")
        return report

    @staticmethod
    def conjugation_residuals(q: QuadricPoint, vectors) -> Dict[str, float]:
        """
        Compare the para-Sasaki data at q with the data at F(q).

        η and φ are F-conjugate and g = −κĝ is preserved, while ĝ itself
        changes sign.
        """
        image = SplitSpaceService.quadric_point(SplitSpaceService.anti_isometry_F(q.vector), -q.kind)
        here = SplitSpaceService.para_sasaki_frame(q)
        there = SplitSpaceService.para_sasaki_frame(image)
        F = np.diag(np.concatenate([-np.ones(q.m), np.ones(q.m)]))
        columns = np.asarray(vectors, dtype=float)
        mapped = F @ columns
        return {
            "eta": float(np.max(np.abs(there.eta @ mapped - here.eta @ columns))),
            "zeta": float(np.linalg.norm(there.zeta - F @ here.zeta)),
            "phi": float(np.max(np.abs(there.phi @ mapped - F @ here.phi @ columns))),
            "metric": float(np.max(np.abs(mapped.T @ there.g @ mapped - columns.T @ here.g @ columns))),
            "ghat": float(np.max(np.abs(
                mapped.T @ gram_matrix(q.m) @ mapped + columns.T @ gram_matrix(q.m) @ columns
            ))),
        }

    @staticmethod
    def flow_invariance_residual(q: QuadricPoint, vectors, t: float) -> float:
        """|η_{Ψ_t q}(Ψ_t w) − η_q(w)| over the given tangent vectors."""
        image = SplitSpaceService.quadric_point(SplitSpaceService.r_action(t, q.vector), q.kind, tol=1e-9)
        worst = 0.0
        for w in np.asarray(vectors, dtype=float).T:
            moved = SplitSpaceService.r_action(t, w)
            worst = max(worst, abs(SplitSpaceService.contact_eta(image, moved) - SplitSpaceService.contact_eta(q, w)))
        return worst

    @staticmethod
    def para_kahler_base(tp: TauPoint, step: Optional[float] = None) -> ParaKahlerBase:
        """
        Para-Kähler structure on the horizontal space H = {q, ζ}^⊥ at a gauged point.

        𝐠 and 𝐏 are ĝ and P̂ in an orthonormal basis of H, 𝛚 = 𝐠𝐏, and the
        closedness residual is the cyclic sum of derivatives of the pulled-back
        ω̂ through the gauged chart c ↦ τ(normalize(q + Bc)).
        """
        step = step or settings.FD_STEP
        m = tp.m
        G = gram_matrix(m)
        zeta = phat_matrix(m) @ tp.vector
        basis = null_space(np.vstack([G @ tp.vector, G @ zeta]))
        g = basis.T @ G @ basis
        P = basis.T @ phat_matrix(m) @ basis
        omega = g @ P

        def gauged(c):
            point = SplitSpaceService.normalize(tp.vector + basis @ c)
            return SplitSpaceService.tau_project(QuadricPoint(point, tp.kind)).vector

        def pulled_back(c):
            jacobian = fd_derivative(gauged, c, step)
            return jacobian.T @ omega_matrix(m) @ jacobian

        derivative = fd_derivative(pulled_back, np.zeros(basis.shape[1]), step)
        # derivative[j, k, i] = ∂_i Ω_jk
        cyclic = (
            np.einsum("jki->ijk", derivative)
            + np.einsum("kij->ijk", derivative)
            + np.einsum("ijk->ijk", derivative)
        )
        return ParaKahlerBase(
            basis=basis,
            g=0.5 * (g + g.T),
            P=P,
            omega=omega,
            signature=signature_of(0.5 * (g + g.T)),
            closedness=float(np.max(np.abs(cyclic))),
        )

    @staticmethod
    def flowed_chart(chart: ChartMap) -> ChartMap:
        """
        Chart (p, t) ↦ Ψ_t(chart(p)) on the product domain, with analytic jets
        whenever the input chart has them.
        """
        n = chart.domain_dim
        m = chart.target_dim // 2
        if chart.target_dim % 2:
            raise DimMismatch(f"Flowed charts need split targets, got dimension {chart.target_dim}")

        def weights(t):
            return np.concatenate([np.exp(t) * np.ones(m), np.exp(-t) * np.ones(m)])

        def func(c):
            return weights(c[n]) * chart(c[:n])

        def jet_func(c, order):
            base = chart.jet(c[:n], order)
            w = weights(c[n])
            flip = phat_matrix(m).diagonal()
            first = np.column_stack([w[:, None] * base.J, w * flip * base.value])
            second = None
            if order == 2:
                second = np.zeros((2 * m, n + 1, n + 1))
                second[:, :n, :n] = w[:, None, None] * base.H
                mixed = (w * flip)[:, None] * base.J
                second[:, :n, n] = mixed
                second[:, n, :n] = mixed
                second[:, n, n] = w * base.value
            return Jet(w * base.value, first, second)

        domain = None
        if chart.domain is not None:
            domain = lambda c: chart.domain(c[:n])  # noqa: E731
        return ChartMap(
            func,
            n + 1,
            chart.target_dim,
            jet_func=jet_func,
            step=chart.step,
            domain=domain,
            mode=chart.mode,
            name=f"flowed[{chart.name}]",
        )


def _parity(permutation) -> int:
    sign = 1
    seen = [False] * len(permutation)
    for start in range(len(permutation)):
        if seen[start]:
            continue
        length = 0
        index = start
        while not seen[index]:
            seen[index] = True
            index = permutation[index]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign
