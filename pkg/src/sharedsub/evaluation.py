"""Reconstruction of function values on projected inputs and the summed
root-mean-square reconstruction error.

Projection happens in sampling space; the projected point then passes
through the same warp -> evaluate (-> normalize) pipeline as the original
data.  Points whose projection leaves the evaluator's domain are excluded
from the error and counted, never clamped in output space.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, EmptyEvaluationError, ValidationError
from .gradients import OutputStats, composed_map
from .methods import RidgeProjector, SharedBasis
from .problems import VectorProblem
from .sampling import SampleSet, make_rng, sample_matrix


@dataclass(frozen=True)
class ReconstructionResult:
    """Reconstructed outputs; excluded rows hold NaN and are listed by index."""

    values: np.ndarray          # n x C
    excluded: tuple


@dataclass(frozen=True)
class RmseRecord:
    """One reconstruction-error row of the experiment report."""

    method: str
    repetition: int
    j: int
    objective: int              # 1-based
    rmse: float
    excluded_points: int


@dataclass(frozen=True)
class SummaryPlotTable:
    """Per-sample leading active coordinate with original and rank-1/2 outputs."""

    as1: np.ndarray             # n
    original: np.ndarray        # n x C
    rank1: np.ndarray           # n x C, NaN where excluded
    rank2: np.ndarray           # n x C, NaN where excluded


def _basis_matrix(basis):
    if isinstance(basis, SharedBasis):
        return basis.basis
    return np.asarray(basis, dtype=float)


def _apply_stats(values, stats: OutputStats | None):
    if stats is None:
        return values
    return (values - stats.mean) / stats.std


def _evaluate_projected(problem: VectorProblem, samples: SampleSet, project, stats):
    func = composed_map(problem, samples.distribution)
    n = samples.n
    values = np.full((n, problem.output_dim), np.nan)
    excluded = []
    for i, z in enumerate(samples.points):
        try:
            values[i] = func(project(z))
        except DomainError:
            excluded.append(i)
    keep = np.setdiff1d(np.arange(n), excluded)
    values[keep] = _apply_stats(values[keep], stats)
    return ReconstructionResult(values=values, excluded=tuple(excluded))


def reconstruct_projection(problem: VectorProblem, basis, j: int, samples: SampleSet,
                           stats: OutputStats | None = None) -> ReconstructionResult:
    """Evaluate the pipeline at W_j W_j^T x for every sample point."""
    w = _basis_matrix(basis)
    if not (1 <= j <= w.shape[1]):
        raise ValidationError(f"rank j={j} out of range")
    projector = w[:, :j] @ w[:, :j].T
    return _evaluate_projected(problem, samples, lambda z: projector @ z, stats)


def reconstruct_linear_map(problem: VectorProblem, matrix, samples: SampleSet,
                           stats: OutputStats | None = None) -> ReconstructionResult:
    """Evaluate the pipeline at M x (projector-only reconstruction path)."""
    matrix = np.asarray(matrix, dtype=float)
    return _evaluate_projected(problem, samples, lambda z: matrix @ z, stats)


def reconstruct_condexp(problem: VectorProblem, projector: RidgeProjector,
                        samples: SampleSet, n_mc: int, seed: int,
                        stats: OutputStats | None = None) -> ReconstructionResult:
    """Conditional-expectation reconstruction over a shared complement sample.

    The same n_mc shift points are drawn once and reused for every x; a
    domain failure at any shifted point excludes the whole row.
    """
    if n_mc < 1:
        raise ValidationError("n_mc must be >= 1")
    p = projector.projector
    shifts = sample_matrix(samples.distribution, n_mc, make_rng(seed))
    complement = np.eye(p.shape[0]) - p
    func = composed_map(problem, samples.distribution)
    n = samples.n
    values = np.full((n, problem.output_dim), np.nan)
    excluded = []
    for i, z in enumerate(samples.points):
        base = p @ z
        try:
            acc = np.zeros(problem.output_dim)
            for shift in shifts:
                acc += func(base + complement @ shift)
            values[i] = acc / n_mc
        except DomainError:
            excluded.append(i)
    keep = np.setdiff1d(np.arange(n), excluded)
    values[keep] = _apply_stats(values[keep], stats)
    return ReconstructionResult(values=values, excluded=tuple(excluded))


def rmse_sum(original, reconstructed, exclusions=()):
    """Per-objective RMSE over the non-excluded rows, and its sum."""
    original = np.asarray(original, dtype=float)
    reconstructed = np.asarray(reconstructed, dtype=float)
    if original.shape != reconstructed.shape:
        raise ValidationError("original and reconstructed shapes differ")
    mask = np.ones(original.shape[0], dtype=bool)
    mask[list(exclusions)] = False
    if not mask.any():
        raise EmptyEvaluationError("all rows were excluded from the evaluation")
    diff = original[mask] - reconstructed[mask]
    per_objective = np.sqrt(np.mean(diff * diff, axis=0))
    return per_objective, float(per_objective.sum())


def summary_plot_data(problem: VectorProblem, basis, samples: SampleSet,
                      stats: OutputStats | None = None) -> SummaryPlotTable:
    """Leading active coordinate plus original, rank-1, and rank-2 outputs."""
    w = _basis_matrix(basis)
    if w.shape[1] < 2:
        raise ValidationError("summary plots need input dimension >= 2")
    func = composed_map(problem, samples.distribution)
    original = np.array([func(z) for z in samples.points])
    original = _apply_stats(original, stats)
    rank1 = reconstruct_projection(problem, w, 1, samples, stats)
    rank2 = reconstruct_projection(problem, w, 2, samples, stats)
    return SummaryPlotTable(
        as1=samples.points @ w[:, 0],
        original=original,
        rank1=rank1.values,
        rank2=rank2.values,
    )


def write_summary_csv(table: SummaryPlotTable, path) -> None:
    """CSV with header as1, f_1.., rec1_f_1.., rec2_f_1..; NaN marks exclusions."""
    c = table.original.shape[1]
    header = (["as1"] + [f"f_{k}" for k in range(1, c + 1)]
              + [f"rec1_f_{k}" for k in range(1, c + 1)]
              + [f"rec2_f_{k}" for k in range(1, c + 1)])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for i in range(table.as1.shape[0]):
            row = [repr(float(table.as1[i]))]
            for block in (table.original, table.rank1, table.rank2):
                row += [repr(float(v)) for v in block[i]]
            writer.writerow(row)


def write_rmse_csv(records, path) -> None:
    """CSV with header method,repetition,j,objective,rmse,excluded_points."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["method", "repetition", "j", "objective", "rmse", "excluded_points"])
        for r in records:
            writer.writerow([r.method, r.repetition, r.j, r.objective,
                             repr(float(r.rmse)), r.excluded_points])
