"""Jacobian evaluation over a sample and assembly of the per-objective
gradient outer-product matrices.

Gradients are taken of the composed map sampling space -> box -> outputs,
so the warp chain rule is included.  With normalization enabled, Jacobian
row k is divided by the std of the raw outputs of objective k computed on
the same sample.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (DomainError, NearConstantOutputWarning, StencilError,
                     ValidationError)
from .problems import DatasetProblem, VectorProblem
from .sampling import SampleSet, warp_to_box

DEFAULT_REL_STEP = float(np.finfo(float).eps ** (1.0 / 3.0))
STD_FLOOR = 1e-12


@dataclass(frozen=True)
class OutputStats:
    """Per-objective mean and std of the raw outputs on one sample."""

    mean: np.ndarray
    std: np.ndarray


@dataclass(frozen=True)
class JacobianSet:
    """Stacked per-sample C x d Jacobians of the composed map.

    ``sample`` is None for dataset-backed Jacobians, which carry no
    sampling-space provenance.
    """

    jacobians: np.ndarray          # n x C x d
    sample: SampleSet | None
    outputs: np.ndarray            # n x C raw outputs at the sample points
    normalized: bool = False

    def __post_init__(self):
        jac = np.asarray(self.jacobians, dtype=float)
        out = np.asarray(self.outputs, dtype=float)
        if jac.ndim != 3:
            raise ValidationError("jacobians must be n x C x d")
        if self.sample is not None and (
                jac.shape[0] != self.sample.n or jac.shape[2] != self.sample.points.shape[1]):
            raise ValidationError("jacobians must be consistent with the sample")
        if out.shape != jac.shape[:2]:
            raise ValidationError("outputs must be n x C, consistent with the jacobians")
        if not (np.all(np.isfinite(jac)) and np.all(np.isfinite(out))):
            raise ValidationError("jacobians and outputs must be finite")
        object.__setattr__(self, "jacobians", jac)
        object.__setattr__(self, "outputs", out)

    @property
    def n(self) -> int:
        return self.jacobians.shape[0]

    @property
    def output_dim(self) -> int:
        return self.jacobians.shape[1]

    @property
    def input_dim(self) -> int:
        return self.jacobians.shape[2]


@dataclass(frozen=True)
class SpdCollection:
    """The C per-objective d x d gradient outer-product averages."""

    matrices: np.ndarray   # C x d x d
    weights: np.ndarray    # C group sample counts

    def __post_init__(self):
        mats = np.asarray(self.matrices, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if mats.ndim != 3 or mats.shape[1] != mats.shape[2]:
            raise ValidationError("matrices must be C x d x d")
        if weights.shape != (mats.shape[0],) or np.any(weights <= 0):
            raise ValidationError("weights must be positive, one per matrix")
        object.__setattr__(self, "matrices", mats)
        object.__setattr__(self, "weights", weights)

    @property
    def count(self) -> int:
        return self.matrices.shape[0]

    @property
    def dim(self) -> int:
        return self.matrices.shape[1]


def jacobian_fd(func, x, out_dim=None, rel_step=DEFAULT_REL_STEP):
    """Central-difference Jacobian of ``func`` at ``x``.

    Per coordinate the step is rel_step * max(1, |x_i|); a DomainError at a
    stencil point shrinks the step once by 10x before failing with
    StencilError.  Exact for affine maps up to rounding.
    """
    if rel_step <= 0:
        raise ValidationError("rel_step must be positive")
    if isinstance(func, VectorProblem):
        func = func.evaluate
    x = np.asarray(x, dtype=float)
    if out_dim is None:
        out_dim = np.atleast_1d(np.asarray(func(x), dtype=float)).shape[0]
    d = x.shape[0]
    jac = np.empty((out_dim, d))
    for i in range(d):
        h = rel_step * max(1.0, abs(x[i]))
        for attempt in range(2):
            xp = x.copy()
            xm = x.copy()
            xp[i] += h
            xm[i] -= h
            try:
                fp = np.atleast_1d(np.asarray(func(xp), dtype=float))
                fm = np.atleast_1d(np.asarray(func(xm), dtype=float))
            except DomainError:
                if attempt == 0:
                    h /= 10.0
                    continue
                raise StencilError(
                    f"stencil for coordinate {i} failed after step shrink", coordinate=i
                ) from None
            jac[:, i] = (fp - fm) / (2.0 * h)
            break
    return jac


def output_stats(outputs) -> OutputStats:
    """Mean/std (ddof=1) per objective; stds floored at 1e-12 with a warning."""
    outputs = np.asarray(outputs, dtype=float)
    mean = outputs.mean(axis=0)
    std = outputs.std(axis=0, ddof=1) if outputs.shape[0] > 1 else np.zeros(outputs.shape[1])
    low = std < STD_FLOOR
    if np.any(low):
        warnings.warn(
            f"objectives {np.flatnonzero(low).tolist()} are near-constant; std floored",
            NearConstantOutputWarning,
            stacklevel=2,
        )
        std = np.where(low, STD_FLOOR, std)
    return OutputStats(mean=mean, std=std)


def composed_map(problem: VectorProblem, distribution, box=None):
    """The sampling-space to outputs map: warp into the box, then evaluate."""
    box = problem.box if box is None else box

    def evaluate(z):
        return problem.evaluate(warp_to_box(z, distribution, box))

    return evaluate


def build_jacobian_set(problem: VectorProblem, samples: SampleSet, normalize=False,
                       rel_step=DEFAULT_REL_STEP):
    """FD Jacobians of the composed map on every sample point.

    Returns (JacobianSet, OutputStats).  StencilError and DomainError
    propagate with the failing sample index attached.
    """
    func = composed_map(problem, samples.distribution)
    n = samples.n
    outputs = np.empty((n, problem.output_dim))
    jacobians = np.empty((n, problem.output_dim, problem.input_dim))
    for i, z in enumerate(samples.points):
        try:
            outputs[i] = func(z)
            jacobians[i] = jacobian_fd(func, z, out_dim=problem.output_dim, rel_step=rel_step)
        except (DomainError, StencilError) as exc:
            if isinstance(exc, StencilError):
                exc.sample_index = i
                raise
            raise StencilError(f"evaluation failed at sample {i}: {exc}", sample_index=i) from exc
    stats = output_stats(outputs)
    if normalize:
        jacobians = jacobians / stats.std[None, :, None]
    return (
        JacobianSet(jacobians=jacobians, sample=samples, outputs=outputs, normalized=normalize),
        stats,
    )


def jacobian_set_from_dataset(dataset: DatasetProblem, normalize=False):
    """Wrap dataset Jacobians in a JacobianSet, optionally normalizing rows."""
    stats = output_stats(dataset.outputs)
    jac = dataset.jacobians / stats.std[None, :, None] if normalize else dataset.jacobians
    return (
        JacobianSet(jacobians=jac, sample=None, outputs=dataset.outputs, normalized=normalize),
        stats,
    )


def assemble_spd(js: JacobianSet) -> SpdCollection:
    """Average outer products of gradient rows, one PSD matrix per objective."""
    n = js.n
    mats = np.einsum("nki,nkj->kij", js.jacobians, js.jacobians) / n
    mats = 0.5 * (mats + mats.transpose(0, 2, 1))
    return SpdCollection(matrices=mats, weights=np.full(js.output_dim, float(n)))


def assemble_h(js: JacobianSet) -> np.ndarray:
    """Average of J^T J over the sample; equals the sum of the per-objective matrices."""
    n = js.n
    h = np.einsum("nki,nkj->ij", js.jacobians, js.jacobians) / n
    return 0.5 * (h + h.T)


def lee_augment(c, mean_grad) -> np.ndarray:
    """Add the mean-gradient outer product to a gradient covariance matrix."""
    c = np.asarray(c, dtype=float)
    z = np.asarray(mean_grad, dtype=float)
    if c.shape != (z.shape[0], z.shape[0]):
        raise ValidationError("mean_grad length must match the matrix dimension")
    return c + np.outer(z, z)
