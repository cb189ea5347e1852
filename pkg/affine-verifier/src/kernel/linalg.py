"""
Signature-aware dense linear algebra.
"""
import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy import linalg

from src.config import settings
from src.errors import DegenerateMetric, NotPositive, NotSymmetric, SingularMatrix

logger = logging.getLogger(__name__)

SYMMETRY_TOL = 1e-12


def solve(A, b, singular_tol: Optional[float] = None) -> np.ndarray:
    """
    Solve A·x = b for a square, well-conditioned A.

    A is singular when its smallest singular value falls below
    singular_tol relative to the largest one.

    Args:
        A: Square matrix
        b: Right-hand side vector or matrix of stacked right-hand sides
        singular_tol: Relative singularity threshold, defaults to SINGULAR_TOL

    Returns:
        Solution with the shape of b
    """
    tol = settings.SINGULAR_TOL if singular_tol is None else singular_tol
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    singular_values = np.linalg.svd(A, compute_uv=False)
    if singular_values[0] == 0.0 or singular_values[-1] < tol * singular_values[0]:
        determinant = float(np.linalg.det(A))
        raise SingularMatrix(
            f"Matrix is numerically singular (det={determinant:.3e})",
            value=determinant,
        )
    x = linalg.solve(A, b)
    residual = np.linalg.norm(A @ x - b)
    bound = 1e-10 * (np.linalg.norm(A) * np.linalg.norm(x) + np.linalg.norm(b))
    if residual > bound:
        logger.warning(f"Linear solve residual {residual:.3e} exceeds {bound:.3e}")
    return x


def _check_symmetric(matrix: np.ndarray, tol: float = SYMMETRY_TOL) -> None:
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise NotSymmetric(f"Expected a square matrix, got shape {matrix.shape}")
    scale = max(1.0, float(np.max(np.abs(matrix))))
    asymmetry = float(np.max(np.abs(matrix - matrix.T)))
    if asymmetry > tol * scale:
        raise NotSymmetric(f"Matrix is not symmetric (max asymmetry {asymmetry:.3e})", value=asymmetry)


def signature_of(form, singular_tol: Optional[float] = None) -> Tuple[int, int, int]:
    """
    Count positive, negative and zero eigenvalues of a symmetric form.

    Eigenvalues with |λ| below singular_tol relative to the spectral radius
    (or absolutely, for forms of norm below one) count as zero.

    Args:
        form: BilinearForm or symmetric matrix

    Returns:
        Tuple (p, q, z)
    """
    tol = settings.SINGULAR_TOL if singular_tol is None else singular_tol
    matrix = form.matrix if isinstance(form, BilinearForm) else np.asarray(form, dtype=float)
    _check_symmetric(matrix)
    eigenvalues = np.linalg.eigvalsh(0.5 * (matrix + matrix.T))
    band = tol * max(1.0, float(np.max(np.abs(eigenvalues))))
    positive = int(np.sum(eigenvalues > band))
    negative = int(np.sum(eigenvalues < -band))
    return positive, negative, int(eigenvalues.size - positive - negative)


@dataclass
class BilinearForm:
    """A symmetric bilinear form with its signature."""

    matrix: np.ndarray
    signature: Tuple[int, int, int] = field(init=False)

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=float)
        _check_symmetric(self.matrix)
        self.signature = signature_of(self.matrix)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def is_degenerate(self) -> bool:
        return self.signature[2] > 0

    def __call__(self, u, w) -> float:
        return float(np.asarray(u) @ self.matrix @ np.asarray(w))


def indefinite_gram_schmidt(
    G,
    basis: Optional[np.ndarray] = None,
    tol: Optional[float] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    ε-orthonormalize a basis with respect to a non-degenerate symmetric form.

    At every step the remaining vector of largest |G(v, v)| is taken as pivot;
    when all remaining vectors are isotropic a pair with G(u, w) ≠ 0 is merged
    into u ± w.

    Args:
        G: Symmetric form matrix
        basis: Columns to orthonormalize, defaults to the identity
        tol: Degeneracy threshold relative to max|G|

    Returns:
        (E, eps) with Eᵀ·G·E = diag(eps) and eps entries ±1
    """
    tol = settings.SINGULAR_TOL if tol is None else tol
    G = np.asarray(G, dtype=float)
    _check_symmetric(G, tol=1e-9)
    vectors = [column.copy() for column in (np.eye(G.shape[0]) if basis is None else np.asarray(basis, dtype=float)).T]
    scale = tol * max(1.0, float(np.max(np.abs(G))))
    frame = []
    signs = []
    while vectors:
        for index, vector in enumerate(vectors):
            for e, s in zip(frame, signs):
                vector = vector - s * (e @ G @ vector) * e
            vectors[index] = vector
        norms = np.array([v @ G @ v for v in vectors])
        pivot = int(np.argmax(np.abs(norms)))
        if abs(norms[pivot]) <= scale:
            merged = False
            for a in range(len(vectors)):
                for b in range(a + 1, len(vectors)):
                    pairing = vectors[a] @ G @ vectors[b]
                    if abs(pairing) > scale:
                        vectors[a] = vectors[a] + np.sign(pairing) * vectors[b]
                        merged = True
                        break
                if merged:
                    break
            if not merged:
                raise DegenerateMetric("Form is degenerate on the given basis")
            continue
        vector = vectors.pop(pivot)
        norm = norms[pivot]
        frame.append(vector / np.sqrt(abs(norm)))
        signs.append(1.0 if norm > 0 else -1.0)
    return np.column_stack(frame), np.array(signs)


def inv_sqrt_spd(matrix) -> np.ndarray:
    """Symmetric inverse square root of a positive definite matrix."""
    matrix = np.asarray(matrix, dtype=float)
    eigenvalues, eigenvectors = np.linalg.eigh(0.5 * (matrix + matrix.T))
    if np.min(eigenvalues) <= 0:
        raise NotPositive(
            f"Matrix is not positive definite (min eigenvalue {np.min(eigenvalues):.3e})",
            value=float(np.min(eigenvalues)),
        )
    return (eigenvectors / np.sqrt(eigenvalues)) @ eigenvectors.T


def is_positive_definite(matrix) -> bool:
    matrix = np.asarray(matrix, dtype=float)
    return bool(np.min(np.linalg.eigvalsh(0.5 * (matrix + matrix.T))) > 0)
