"""Input distributions, deterministic sampling, and the box-warping map.

Sampling-space points live either on R^d (standard normal) or [-1, 1]^d
(symmetric uniform).  ``warp_to_box`` carries a sampling-space point into a
problem's box: a sigmoid for the normal distribution and the affine map
(x + 1) / 2 for the uniform one, clamped because projected points
W W^T x can leave [-1, 1]^d.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ValidationError
from .linalg import validate_symmetric

STANDARD_NORMAL = "standard-normal"
UNIFORM_SYMMETRIC = "uniform-symmetric"
_KINDS = (STANDARD_NORMAL, UNIFORM_SYMMETRIC)

_MASK64 = (1 << 64) - 1


def mix64(x: int) -> int:
    """SplitMix64 finalizer; a fixed, portable 64-bit mixer."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (x ^ (x >> 31)) & _MASK64


def derive_seed(seed: int, *indices: int) -> int:
    """Sub-stream seed: base seed XOR-ed with mixed stream indices."""
    out = seed & _MASK64
    for i, idx in enumerate(indices):
        out ^= mix64((idx & _MASK64) + i)
    return out


def make_rng(seed: int) -> np.random.Generator:
    """Seeded PCG64 generator; portable and splittable via derive_seed."""
    return np.random.Generator(np.random.PCG64(seed & _MASK64))


@dataclass(frozen=True)
class Distribution:
    """Sampling distribution: kind, dimension, optional normal covariance."""

    kind: str
    dim: int
    sigma: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValidationError(f"unknown distribution kind {self.kind!r}; expected one of {_KINDS}")
        if self.dim < 1:
            raise ValidationError("dim must be a positive integer")
        if self.sigma is not None:
            if self.kind != STANDARD_NORMAL:
                raise ValidationError("a covariance is only supported for the normal distribution")
            sigma = validate_symmetric(self.sigma, "sigma")
            if sigma.shape != (self.dim, self.dim):
                raise ValidationError("sigma shape does not match dim")
            try:
                scipy.linalg.cholesky(sigma, lower=True)
            except scipy.linalg.LinAlgError as exc:
                raise ValidationError("sigma must be positive definite") from exc
            object.__setattr__(self, "sigma", sigma)


@dataclass(frozen=True)
class BoxDomain:
    """Axis-aligned box [lower_i, upper_i] per coordinate."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float)
        upper = np.asarray(self.upper, dtype=float)
        if lower.shape != upper.shape or lower.ndim != 1:
            raise ValidationError("lower and upper must be vectors of equal length")
        if not np.all(lower < upper):
            raise ValidationError("box requires lower_i < upper_i for all i")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def dim(self) -> int:
        return self.lower.shape[0]


def unit_box(dim: int) -> BoxDomain:
    return BoxDomain(np.zeros(dim), np.ones(dim))


@dataclass(frozen=True)
class SampleSet:
    """An n x d matrix of sampling-space points with provenance metadata."""

    points: np.ndarray
    distribution: Distribution
    seed: int

    def __post_init__(self):
        points = np.asarray(self.points, dtype=float)
        if points.ndim != 2 or points.shape[1] != self.distribution.dim:
            raise ValidationError("points must be n x d with d matching the distribution")
        if not np.all(np.isfinite(points)):
            raise ValidationError("sample points must be finite")
        if self.distribution.kind == UNIFORM_SYMMETRIC and np.abs(points).max(initial=0.0) > 1.0:
            raise ValidationError("uniform-symmetric samples must lie in [-1, 1]^d")
        object.__setattr__(self, "points", points)

    @property
    def n(self) -> int:
        return self.points.shape[0]


def sample_matrix(dist: Distribution, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw n raw points from ``dist`` using an existing generator."""
    if dist.kind == UNIFORM_SYMMETRIC:
        return rng.uniform(-1.0, 1.0, size=(n, dist.dim))
    z = rng.standard_normal(size=(n, dist.dim))
    if dist.sigma is not None:
        z = z @ scipy.linalg.cholesky(dist.sigma, lower=True).T
    return z


def draw_samples(dist: Distribution, n: int, seed: int) -> SampleSet:
    """Deterministically draw ``n`` points; identical output for identical input."""
    if n < 1:
        raise ValidationError("n must be >= 1")
    points = sample_matrix(dist, n, make_rng(seed))
    return SampleSet(points=points, distribution=dist, seed=seed)


def warp_to_box(x, dist: Distribution, box: BoxDomain) -> np.ndarray:
    """Map sampling-space point(s) into the box; clamped, monotone per coordinate."""
    x = np.asarray(x, dtype=float)
    if dist.kind == UNIFORM_SYMMETRIC:
        t = np.clip((x + 1.0) / 2.0, 0.0, 1.0)
    else:
        t = 1.0 / (1.0 + np.exp(-x))
    return t * (box.upper - box.lower) + box.lower


def warp_derivative(x, dist: Distribution, box: BoxDomain) -> np.ndarray:
    """Diagonal of the warp Jacobian at ``x`` (zero where the uniform clamp binds)."""
    x = np.asarray(x, dtype=float)
    width = box.upper - box.lower
    if dist.kind == UNIFORM_SYMMETRIC:
        inside = (np.abs(x) <= 1.0).astype(float)
        return 0.5 * width * inside
    s = 1.0 / (1.0 + np.exp(-x))
    return s * (1.0 - s) * width
