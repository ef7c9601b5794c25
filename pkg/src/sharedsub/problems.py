"""Vector-valued problems: the rotated two-objective synthetic benchmark and
a dataset-backed problem for functions evaluated elsewhere.

The synthetic benchmark composes, per objective k, a rotation of the unit
cube, the affine map b = (15 x1 - 5, 15 x2, x3), and a Branin-style /
square-root objective pair.  The second objective's square root is only
defined where (10.5 - b1)(b1 + 5.5)(b2 + 0.5) >= 0; outside, evaluation
raises DomainError (or clamps the radicand to zero in "clamp" mode).
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError, ValidationError
from .sampling import BoxDomain, unit_box

ROTATION_1 = np.array([
    [-0.71, 0.34, 0.62],
    [0.28, 0.94, -0.2],
    [-0.65, 0.032, -0.76],
])
ROTATION_2 = np.array([
    [-0.32, 0.84, -0.44],
    [0.76, -0.058, -0.65],
    [0.57, 0.54, 0.62],
])

_Q = 5.1 / (4.0 * math.pi ** 2)   # quadratic coefficient 5.1/(2*pi)^2 rewritten
_C8 = 1.0 - 1.0 / (8.0 * math.pi)


@dataclass(frozen=True)
class VectorProblem:
    """A vector-valued function on a box, with an optional analytic Jacobian."""

    name: str
    input_dim: int
    output_dim: int
    box: BoxDomain
    evaluate: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray] | None = None


def _f1_value(b1, b2, b3):
    a = b2 - _Q * b1 * b1 + (5.0 / math.pi) * b1 - 6.0
    return a * a + 10.0 * (_C8 * math.cos(b1) + 1.0) + math.sin(math.pi * b3)


def _f2_value(b1, b2, b3, clamp_radicand=False):
    rad = (10.5 - b1) * (b1 + 5.5) * (b2 + 0.5)
    if rad < 0.0:
        if not clamp_radicand:
            raise DomainError(
                f"negative radicand {rad:.6g} in second objective at b1={b1:.6g}, b2={b2:.6g}"
            )
        rad = 0.0
    quad = b2 - _Q * b1 * b1 - 6.0
    return (-math.sqrt(rad) - quad * quad / 30.0
            - (_C8 * math.cos(b1) + 1.0) / 3.0 - math.cos(2.0 * math.pi * b3))


def eval_synthetic_core(b) -> np.ndarray:
    """Both objective formulas at a shared b-point (no rotation, no x-to-b map)."""
    b = np.asarray(b, dtype=float)
    if b.shape != (3,) or not np.all(np.isfinite(b)):
        raise ValidationError("b must be a finite 3-vector")
    b1, b2, b3 = b
    return np.array([_f1_value(b1, b2, b3), _f2_value(b1, b2, b3)])


def _f1_grad_b(b1, b2, b3):
    a = b2 - _Q * b1 * b1 + (5.0 / math.pi) * b1 - 6.0
    return np.array([
        2.0 * a * (-2.0 * _Q * b1 + 5.0 / math.pi) - 10.0 * _C8 * math.sin(b1),
        2.0 * a,
        math.pi * math.cos(math.pi * b3),
    ])


def _f2_grad_b(b1, b2, b3, clamp_radicand=False):
    rad = (10.5 - b1) * (b1 + 5.5) * (b2 + 0.5)
    quad = b2 - _Q * b1 * b1 - 6.0
    if rad <= 0.0 and not clamp_radicand:
        # at rad == 0 the value exists but the gradient does not
        raise DomainError(f"radicand {rad:.6g} leaves the second objective gradient undefined")
    if rad <= 0.0:
        d_sqrt_b1 = 0.0   # clamp mode: flat beyond the boundary
        d_sqrt_b2 = 0.0
    else:
        root = math.sqrt(rad)
        d_sqrt_b1 = (5.0 - 2.0 * b1) * (b2 + 0.5) / (2.0 * root)
        d_sqrt_b2 = (10.5 - b1) * (b1 + 5.5) / (2.0 * root)
    return np.array([
        -d_sqrt_b1 + quad * (4.0 * _Q * b1) / 30.0 + _C8 * math.sin(b1) / 3.0,
        -d_sqrt_b2 - 2.0 * quad / 30.0,
        2.0 * math.pi * math.sin(2.0 * math.pi * b3),
    ])


def synthetic_problem(
    rotations=None,
    rotate_third_coordinate: bool = True,
    transpose_rotations: bool = False,
    radicand: str = "error",
) -> VectorProblem:
    """The 3-input / 2-objective rotated benchmark on the unit cube.

    ``rotations`` replaces the built-in pair (test hook, e.g. identities).
    ``rotate_third_coordinate=False`` feeds the unrotated x3 into the
    oscillatory terms.   ``radicand="clamp"`` replaces DomainError with a
    sqrt(max(., 0)) guard.
    """
    if radicand not in ("error", "clamp"):
        raise ValidationError("radicand must be 'error' or 'clamp'")
    if rotations is None:
        rotations = (ROTATION_1, ROTATION_2)
    rots = tuple(np.asarray(r, dtype=float) for r in rotations)
    if len(rots) != 2 or any(r.shape != (3, 3) for r in rots):
        raise ValidationError("rotations must be two 3x3 matrices")
    if transpose_rotations:
        rots = tuple(r.T for r in rots)
    clamp = radicand == "clamp"

    def b_point(r, x):
        xt = r @ x
        b3 = xt[2] if rotate_third_coordinate else x[2]
        return 15.0 * xt[0] - 5.0, 15.0 * xt[1], b3

    def evaluate(x):
        x = np.asarray(x, dtype=float)
        f1 = _f1_value(*b_point(rots[0], x))
        f2 = _f2_value(*b_point(rots[1], x), clamp_radicand=clamp)
        return np.array([f1, f2])

    def _chain_row(r, g):
        # chain rule through b = (15 xt1 - 5, 15 xt2, b3)
        row = 15.0 * g[0] * r[0] + 15.0 * g[1] * r[1]
        return row + g[2] * (r[2] if rotate_third_coordinate else np.array([0.0, 0.0, 1.0]))

    def jacobian(x):
        x = np.asarray(x, dtype=float)
        g1 = _f1_grad_b(*b_point(rots[0], x))
        g2 = _f2_grad_b(*b_point(rots[1], x), clamp_radicand=clamp)
        return np.vstack([_chain_row(rots[0], g1), _chain_row(rots[1], g2)])

    return VectorProblem(
        name="synthetic",
        input_dim=3,
        output_dim=2,
        box=unit_box(3),
        evaluate=evaluate,
        jacobian=jacobian,
    )


@dataclass(frozen=True)
class DatasetProblem:
    """Pre-evaluated points, outputs, and Jacobians loaded from a file."""

    points: np.ndarray      # n x d
    outputs: np.ndarray     # n x C
    jacobians: np.ndarray   # n x C x d

    def __post_init__(self):
        points = np.asarray(self.points, dtype=float)
        outputs = np.asarray(self.outputs, dtype=float)
        jacobians = np.asarray(self.jacobians, dtype=float)
        n, d = points.shape
        if outputs.shape[0] != n or jacobians.shape != (n, outputs.shape[1], d):
            raise ValidationError("inconsistent dataset dimensions")
        for name, arr in (("points", points), ("outputs", outputs), ("jacobians", jacobians)):
            if not np.all(np.isfinite(arr)):
                raise ValidationError(f"dataset {name} contain non-finite values")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "outputs", outputs)
        object.__setattr__(self, "jacobians", jacobians)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def input_dim(self) -> int:
        return self.points.shape[1]

    @property
    def output_dim(self) -> int:
        return self.outputs.shape[1]


def _dataset_header(d, c):
    cols = [f"x_{i}" for i in range(1, d + 1)]
    cols += [f"f_{k}" for k in range(1, c + 1)]
    for k in range(1, c + 1):
        cols += [f"g_{k}_{i}" for i in range(1, d + 1)]
    return cols


def load_dataset_problem(path) -> DatasetProblem:
    """Load a dataset CSV: header x_1..x_d, f_1..f_C, g_1_1..g_C_d."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValidationError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        d = sum(1 for h in header if h.startswith("x_"))
        c = sum(1 for h in header if h.startswith("f_"))
        if d == 0 or c == 0:
            raise ValidationError(f"{path}: header must contain x_* and f_* columns")
        expected = _dataset_header(d, c)
        if header != expected:
            missing = [col for col in expected if col not in header]
            if missing:
                raise ValidationError(f"{path}: missing columns {missing}")
            raise ValidationError(f"{path}: columns must be ordered {expected}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(expected):
                raise ValidationError(f"{path}: row {lineno} has {len(row)} fields, expected {len(expected)}")
            try:
                values = [float(v) for v in row]
            except ValueError as exc:
                raise ValidationError(f"{path}: row {lineno}: {exc}") from None
            for col, v in zip(expected, values):
                if not math.isfinite(v):
                    raise ValidationError(f"{path}: non-finite value at row {lineno}, column {col}")
            rows.append(values)
    if not rows:
        raise ValidationError(f"{path}: no data rows")
    data = np.array(rows)
    points = data[:, :d]
    outputs = data[:, d:d + c]
    jacobians = data[:, d + c:].reshape(len(rows), c, d)
    return DatasetProblem(points=points, outputs=outputs, jacobians=jacobians)


def save_dataset_problem(dataset: DatasetProblem, path) -> None:
    """Write a dataset CSV that loads back bitwise-identically."""
    d, c = dataset.input_dim, dataset.output_dim
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(_dataset_header(d, c))
        for i in range(dataset.n):
            row = [repr(float(v)) for v in dataset.points[i]]
            row += [repr(float(v)) for v in dataset.outputs[i]]
            row += [repr(float(v)) for v in dataset.jacobians[i].ravel()]
            writer.writerow(row)
