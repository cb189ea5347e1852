"""
Exception hierarchy for the geometry services.

Every error is a ValueError so callers that only know the service contract
(routes, the suite driver) can catch a single type.
"""
from typing import Optional


class GeometryError(ValueError):
    """Base class for geometric and numerical contract violations."""

    def __init__(self, message: str, value: Optional[float] = None):
        super().__init__(message)
        self.value = value


class OutOfDomain(GeometryError):
    """Point (or its finite-difference stencil) leaves the chart domain."""


class NonFiniteValue(GeometryError):
    """A chart or field produced NaN or infinite entries."""


class DimMismatch(GeometryError):
    """Operands have incompatible dimensions."""


class SingularMatrix(GeometryError):
    """Linear system is numerically singular; `value` holds the determinant."""


class SingularSystem(GeometryError):
    """Decomposition system could not be solved to the reconstruction tolerance."""


class NotSymmetric(GeometryError):
    """A bilinear form expected to be symmetric is not."""


class DegenerateMetric(GeometryError):
    """Metric is degenerate at the requested point."""


class DegenerateInducedMetric(DegenerateMetric):
    """Induced metric of an immersion is degenerate."""


class TransversalityLost(GeometryError):
    """Transversal field lies in the tangent hyperplane; `value` holds det."""


class IndefiniteMetric(GeometryError):
    """A definite affine metric was required."""


class NonConstantRescale(GeometryError):
    """Blaschke rescaling factor varies across samples."""


class NotCentroaffine(GeometryError):
    """Transversal field is not parallel to the position vector."""


class NotTangent(GeometryError):
    """Vector is not tangent to the quadric."""


class NotOnQuadric(GeometryError):
    """Point does not satisfy the quadric equation."""


class DegenerateFrame(GeometryError):
    """Frame does not span the tangent space."""


class DegenerateShapeOperator(GeometryError):
    """Shape operator is singular, so the sigma map is degenerate."""


class RankDeficient(GeometryError):
    """Differential of an immersion drops rank."""


class DegenerateLift(GeometryError):
    """Lift has a vanishing slot."""


class NotClosed(GeometryError):
    """Path integrals of a 1-form disagree beyond the path tolerance."""


class NotHorizontal(GeometryError):
    """Lift is not horizontal for the contact distribution."""


class NotPositive(GeometryError):
    """A positive definite form was required."""


class NotHyperbolicSphere(GeometryError):
    """Input cannot be lifted to the symmetric space of inner products."""


class FrameNotUnimodular(GeometryError):
    """Adapted frame does not have unit determinant."""


class SingularM(SingularMatrix):
    """Group element is not invertible."""


class NoConvergence(GeometryError):
    """Projective Cauchy test failed along a ray."""


class UnsupportedCone(GeometryError):
    """Cone kind has no membership oracle."""


class NotStrictlyConvex(GeometryError):
    """Boundary graph requires a strictly convex cone."""


class UnknownExample(GeometryError):
    """Example name is not registered."""


class BadDimension(GeometryError):
    """Example does not exist in the requested dimension."""
