"""Dense symmetric and generalized symmetric-definite eigendecompositions.

All solvers return eigenvalues in descending order with a deterministic
sign convention: the largest-magnitude component of each eigenvector is
made positive.  Inside a numerically degenerate eigenvalue block only the
spanned projector is contractual, not the individual vectors.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import SingularCovarianceError, ValidationError

SYMMETRY_ATOL = 1e-12


def _as_square_matrix(m, name="matrix"):
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError(f"{name} must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValidationError(f"{name} contains non-finite entries")
    return m


def validate_symmetric(m, name="matrix"):
    """Return ``m`` as a float array after checking symmetry and finiteness."""
    m = _as_square_matrix(m, name)
    scale = max(1.0, float(np.abs(m).max()))
    if np.abs(m - m.T).max() > SYMMETRY_ATOL * scale:
        raise ValidationError(f"{name} is not symmetric within tolerance")
    return m


def _fix_signs(vectors):
    """Flip column signs so the largest-magnitude component is positive."""
    idx = np.abs(vectors).argmax(axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def _descending(values, vectors):
    order = np.argsort(-values, kind="stable")
    return values[order], vectors[:, order]


@dataclass(frozen=True)
class EigenPair:
    """Eigenvalues (descending) and orthonormal eigenvectors, by column."""

    values: np.ndarray
    vectors: np.ndarray


@dataclass(frozen=True)
class GeneralizedEigenPair:
    """Generalized eigenvalues (descending) and B-orthonormal eigenvectors."""

    values: np.ndarray
    vectors: np.ndarray


def sym_eig(m) -> EigenPair:
    """Eigendecomposition of a symmetric matrix, descending and sign-fixed."""
    m = validate_symmetric(m)
    values, vectors = np.linalg.eigh(0.5 * (m + m.T))
    values, vectors = _descending(values, vectors)
    return EigenPair(values=values, vectors=_fix_signs(vectors))


def gen_sym_eig(a, b) -> GeneralizedEigenPair:
    """Solve A v = lambda B v for symmetric A and positive definite B.

    Reduction via the Cholesky factor B = L L^T: the standard problem is
    solved for L^-1 A L^-T and back-transformed, which yields B-orthonormal
    eigenvectors (V^T B V = I).
    """
    a = validate_symmetric(a, "a")
    b = validate_symmetric(b, "b")
    if a.shape != b.shape:
        raise ValidationError("a and b must have identical shapes")
    try:
        lower = scipy.linalg.cholesky(b, lower=True)
    except scipy.linalg.LinAlgError as exc:
        raise SingularCovarianceError("matrix b is not positive definite") from exc
    # L^-1 A L^-T, kept symmetric against accumulation error
    tmp = scipy.linalg.solve_triangular(lower, a, lower=True)
    reduced = scipy.linalg.solve_triangular(lower, tmp.T, lower=True).T
    values, vectors = np.linalg.eigh(0.5 * (reduced + reduced.T))
    vectors = scipy.linalg.solve_triangular(lower.T, vectors, lower=False)
    values, vectors = _descending(values, vectors)
    return GeneralizedEigenPair(values=values, vectors=_fix_signs(vectors))


def projector_distance(w1, w2, j) -> float:
    """Frobenius distance between the rank-``j`` column-span projectors."""
    w1 = np.atleast_2d(np.asarray(w1, dtype=float))
    w2 = np.atleast_2d(np.asarray(w2, dtype=float))
    if w1.ndim != 2 or w2.ndim != 2:
        raise ValidationError("w1 and w2 must be matrices")
    if not (1 <= j <= min(w1.shape[1], w2.shape[1])):
        raise ValidationError(f"rank j={j} out of range for the given matrices")
    if w1.shape[0] != w2.shape[0]:
        raise ValidationError("w1 and w2 must act on the same space")
    a = w1[:, :j]
    b = w2[:, :j]
    for name, cols in (("w1", a), ("w2", b)):
        gram = cols.T @ cols
        if np.abs(gram - np.eye(j)).max() > 1e-8:
            raise ValidationError(f"first {j} columns of {name} are not orthonormal")
    return float(np.linalg.norm(a @ a.T - b @ b.T, ord="fro"))
