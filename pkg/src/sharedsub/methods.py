"""The seven shared-subspace constructions.

Gradient-level: average of gradients (ag), minimum-norm convex-hull point
(mch), per-coordinate linear projection (lp).  SPD-level: sum of matrices
(sspd), iterative pairwise joint diagonalization (fg), stepwise extraction
(see).  Distribution-aware: the generalized-eigenvector ridge projector
(zahm).
"""
from __future__ import annotations

import csv
import itertools
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (DegenerateSpectrumWarning, NonConvergenceError,
                     SampleCountWarning, SingularCovarianceError,
                     SingularMatrixError, ValidationError, ZeroColumnWarning)
from .gradients import JacobianSet, SpdCollection
from .linalg import _fix_signs, gen_sym_eig, sym_eig, validate_symmetric

METHOD_TAGS = ("ag", "mch", "lp", "sspd", "fg", "see", "zahm")


@dataclass(frozen=True)
class SharedBasis:
    """Orthonormal basis ordered by decreasing importance, plus method metadata."""

    basis: np.ndarray                 # d x d, columns ordered by importance
    importance: np.ndarray            # d, non-increasing
    method: str
    per_objective_values: np.ndarray | None = None   # C x d, fg/see only


@dataclass(frozen=True)
class RidgeProjector:
    """Rank-r projector built from generalized eigenvectors."""

    projector: np.ndarray   # d x d
    rank: int
    vectors: np.ndarray     # d x r


@dataclass(frozen=True)
class HullPoint:
    """Minimum-norm element of the gradient convex hull with its coefficients."""

    point: np.ndarray
    coefficients: np.ndarray


def _eig_basis(matrix, method, warn_if_zero=False):
    pair = sym_eig(matrix)
    scale = float(np.abs(pair.values).max(initial=0.0))
    if warn_if_zero and scale <= 1e-300:
        warnings.warn(
            f"{method}: aggregated gradient matrix is zero; basis is arbitrary",
            DegenerateSpectrumWarning, stacklevel=3,
        )
    else:
        ties = np.flatnonzero(-np.diff(pair.values) < 1e-12 * max(scale, 1e-300))
        if ties.size:
            warnings.warn(
                f"{method}: eigenvalue ties at positions {ties.tolist()}; "
                "only projectors are contractual inside a tied block",
                DegenerateSpectrumWarning, stacklevel=3,
            )
    return SharedBasis(basis=pair.vectors, importance=pair.values, method=method)


def method_ag(js: JacobianSet) -> SharedBasis:
    """Average the Jacobian rows at each point, then eigendecompose."""
    u = js.jacobians.mean(axis=1)
    return _eig_basis(u.T @ u / js.n, "ag", warn_if_zero=True)


def _project_simplex(v):
    """Euclidean projection onto the probability simplex."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    rho = np.flatnonzero(u - css / np.arange(1, len(v) + 1) > 0)[-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def _min_norm_exact(rows, gram):
    """Enumerate simplex faces; exact for small C."""
    c = rows.shape[0]
    best = None
    best_norm = np.inf
    for size in range(1, c + 1):
        for subset in itertools.combinations(range(c), size):
            idx = list(subset)
            g = gram[np.ix_(idx, idx)]
            kkt = np.zeros((size + 1, size + 1))
            kkt[:size, :size] = 2.0 * g
            kkt[:size, size] = 1.0
            kkt[size, :size] = 1.0
            rhs = np.zeros(size + 1)
            rhs[size] = 1.0
            sol = np.linalg.lstsq(kkt, rhs, rcond=None)[0]
            alpha_s = sol[:size]
            if alpha_s.min() < -1e-10 or abs(alpha_s.sum() - 1.0) > 1e-8:
                continue
            alpha = np.zeros(c)
            alpha[idx] = np.maximum(alpha_s, 0.0)
            alpha /= alpha.sum()
            norm2 = float(alpha @ gram @ alpha)
            if norm2 < best_norm - 1e-15:
                best_norm = norm2
                best = alpha
    return best


def _min_norm_pgd(rows, gram, gap_tol=1e-10, max_iter=50_000):
    """Projected gradient descent on the simplex, duality-gap stopping."""
    c = rows.shape[0]
    scale = max(1.0, float(np.diag(gram).max()))
    lip = 2.0 * float(np.linalg.eigvalsh(gram)[-1])
    step = 1.0 / max(lip, 1e-30)
    alpha = np.full(c, 1.0 / c)
    for _ in range(max_iter):
        grad = 2.0 * gram @ alpha
        value = float(alpha @ gram @ alpha)
        gap = value - float((gram @ alpha).min())
        if gap <= gap_tol * scale:
            return alpha
        alpha = _project_simplex(alpha - step * grad)
    raise NonConvergenceError("min-norm hull solver did not reach the duality gap", last_change=gap)


def min_norm_hull_point(jac) -> HullPoint:
    """Minimum Euclidean-norm element of the convex hull of the Jacobian rows."""
    rows = np.atleast_2d(np.asarray(jac, dtype=float))
    if not np.all(np.isfinite(rows)):
        raise ValidationError("Jacobian rows must be finite")
    c = rows.shape[0]
    if c == 1:
        return HullPoint(point=rows[0].copy(), coefficients=np.ones(1))
    gram = rows @ rows.T
    alpha = _min_norm_exact(rows, gram) if c <= 3 else _min_norm_pgd(rows, gram)
    if alpha is None:   # every face rejected numerically; fall back to descent
        alpha = _min_norm_pgd(rows, gram)
    return HullPoint(point=alpha @ rows, coefficients=alpha)


def method_mch(js: JacobianSet) -> SharedBasis:
    """Per-point minimum-norm hull vectors, then eigendecompose their average."""
    u = np.array([min_norm_hull_point(jac).point for jac in js.jacobians])
    return _eig_basis(u.T @ u / js.n, "mch", warn_if_zero=True)


def method_lp(js: JacobianSet, sign: str = "mean") -> SharedBasis:
    """Rank-1 projection of all objectives' derivatives per input coordinate.

    ``sign`` picks the per-coordinate eigenvector orientation: "mean" aligns
    with the column-mean of the derivative matrix, "dominant" makes the
    largest-magnitude component positive (coherent across coordinates).
    """
    if sign not in ("mean", "dominant"):
        raise ValidationError("sign must be 'mean' or 'dominant'")
    n, c, d = js.jacobians.shape
    if n < c:
        warnings.warn(f"n={n} below the number of objectives C={c}", SampleCountWarning,
                      stacklevel=2)
    a = np.empty((n, d))
    for j in range(d):
        cols = js.jacobians[:, :, j]              # n x C derivatives wrt coordinate j
        if np.abs(cols).max(initial=0.0) == 0.0:
            warnings.warn(f"derivative column {j} is zero; using e_1", ZeroColumnWarning,
                          stacklevel=2)
            w = np.zeros(c)
            w[0] = 1.0
        else:
            w = sym_eig(cols.T @ cols / n).vectors[:, 0]
            if sign == "mean":
                if w @ cols.mean(axis=0) < 0:
                    w = -w
            elif w[np.abs(w).argmax()] < 0:
                w = -w
        a[:, j] = cols @ w
    return _eig_basis(a.T @ a / n, "lp")


def method_sspd(spd: SpdCollection) -> SharedBasis:
    """Eigendecomposition of the summed per-objective matrices."""
    return _eig_basis(spd.matrices.sum(axis=0), "sspd")


def _ridged(spd: SpdCollection):
    """PD ridge eps = 1e-10 * trace / d so log/det objectives are defined."""
    d = spd.dim
    mats = []
    for m in spd.matrices:
        tr = float(np.trace(m))
        eps = 1e-10 * (tr / d if tr > 0 else 1.0)
        mats.append(m + eps * np.eye(d))
    return np.array(mats)


def _closest_rotation(evecs):
    """Proper rotation assembled from a 2x2 eigenbasis, closest to identity."""
    best = None
    best_trace = -np.inf
    for perm in ((0, 1), (1, 0)):
        v = evecs[:, perm]
        for s0 in (1.0, -1.0):
            for s1 in (1.0, -1.0):
                q = v * np.array([s0, s1])
                if q[0, 0] * q[1, 1] - q[0, 1] * q[1, 0] > 0.0:
                    tr = q[0, 0] + q[1, 1]
                    if tr > best_trace:
                        best_trace = tr
                        best = q
    return best


def _fg_pair_rotation(t_mats, weights, max_inner=200):
    """Fixed-point iteration for one column pair's 2x2 rotation."""
    q = np.eye(2)
    for _ in range(max_inner):
        d1 = np.einsum("i,kij,j->k", q[:, 0], t_mats, q[:, 0])
        d2 = np.einsum("i,kij,j->k", q[:, 1], t_mats, q[:, 1])
        m = np.einsum("k,kij->ij", weights * (d1 - d2) / (d1 * d2), t_mats)
        evecs = np.linalg.eigh(0.5 * (m + m.T))[1]
        q_new = _closest_rotation(evecs)
        if np.abs(q_new - q).max() < 1e-14:
            return q_new
        q = q_new
    return q


def method_fg(spd: SpdCollection, max_sweeps: int = 100, angle_tol: float = 1e-10) -> SharedBasis:
    """Joint diagonalization via cyclic pairwise rotation sweeps.

    Each pair's rotation comes from a fixed-point iteration on the 2x2
    weighted eigenproblem of the restricted matrices; sweeps stop when the
    largest applied rotation angle falls below ``angle_tol``.  Columns are
    ordered by the summed quadratic forms.
    """
    mats = _ridged(spd)
    weights = spd.weights
    d = spd.dim
    w = np.eye(d)
    converged = False
    max_angle = np.inf
    for _ in range(max_sweeps):
        max_angle = 0.0
        for i in range(d - 1):
            for j in range(i + 1, d):
                pair = w[:, [i, j]]
                t_mats = np.einsum("pi,kpq,qj->kij", pair, mats, pair)
                t_mats = 0.5 * (t_mats + t_mats.transpose(0, 2, 1))
                q = _fg_pair_rotation(t_mats, weights)
                max_angle = max(max_angle, abs(float(np.arctan2(q[1, 0], q[0, 0]))))
                w[:, i] = pair @ q[:, 0]
                w[:, j] = pair @ q[:, 1]
        if max_angle < angle_tol:
            converged = True
            break
    if not converged:
        raise NonConvergenceError(
            f"fg did not converge within {max_sweeps} sweeps", last_change=max_angle)
    return _order_by_sum(w, spd, "fg")


def _order_by_sum(w, spd: SpdCollection, method: str) -> SharedBasis:
    diag = np.einsum("ip,kij,jp->kp", w, spd.matrices, w)
    sums = diag.sum(axis=0)
    order = np.argsort(-sums, kind="stable")
    return SharedBasis(
        basis=_fix_signs(w[:, order]),
        importance=sums[order],
        method=method,
        per_objective_values=diag[:, order],
    )


def fg_deviation(spd: SpdCollection, w) -> float:
    """Product over objectives of (det diag / det) of the rotated matrices.

    At least 1 by Hadamard's inequality, and exactly 1 iff every rotated
    matrix is diagonal.  May overflow to inf for large weights; the log-sum
    is evaluated first.
    """
    w = np.asarray(w, dtype=float)
    d = spd.dim
    if w.shape != (d, d) or np.abs(w.T @ w - np.eye(d)).max() > 1e-8:
        raise ValidationError("w must be an orthogonal d x d matrix")
    log_total = 0.0
    for matrix, weight in zip(spd.matrices, spd.weights):
        s = validate_symmetric(w.T @ matrix @ w)
        diag = np.diag(s)
        if np.any(diag <= 0.0):
            raise SingularMatrixError("rotated matrix has a non-positive diagonal")
        sign, logdet = np.linalg.slogdet(s)
        if sign <= 0:
            raise SingularMatrixError("rotated matrix is singular")
        log_total += weight * (np.log(diag).sum() - logdet)
    return float(np.exp(log_total))


def _complement_basis(columns, d):
    """Orthonormal basis of the complement of already-extracted columns."""
    if not columns:
        return np.eye(d)
    chosen = np.column_stack(columns)
    u = np.linalg.svd(chosen, full_matrices=True)[0]
    return u[:, chosen.shape[1]:]


def method_see(spd: SpdCollection, descending: bool = True, max_iter: int = 500,
               tol: float = 1e-10) -> SharedBasis:
    """Stepwise extraction of shared directions, each orthogonal to its
    predecessors.

    Every step runs the fixed-point iteration
    w <- normalize(P (sum_k n_k / (w^T C_k w) C_k) w) restricted to the
    complement of the extracted columns, initialized at the leading
    eigenvector of the restricted sum.  ``descending=False`` extracts the
    smallest stationary directions first (inverse iteration).
    """
    mats = _ridged(spd)
    weights = spd.weights
    d = spd.dim
    total = mats.sum(axis=0)
    columns = []
    for _ in range(d):
        basis = _complement_basis(columns, d)
        reduced_total = basis.T @ total @ basis
        eig = sym_eig(reduced_total)
        y = eig.vectors[:, 0 if descending else -1]
        reduced = np.einsum("pi,kpq,qj->kij", basis, mats, basis)
        converged = False
        change = np.inf
        for _ in range(max_iter):
            deltas = np.einsum("i,kij,j->k", y, reduced, y)
            m = np.einsum("k,kij->ij", weights / deltas, reduced)
            z = np.linalg.solve(m, y) if not descending else m @ y
            y_new = z / np.linalg.norm(z)
            change = float(np.linalg.norm(np.outer(y_new, y_new) - np.outer(y, y)))
            y = y_new
            if change < tol:
                converged = True
                break
        if not converged:
            raise NonConvergenceError(
                "see fixed point did not converge", last_change=change)
        columns.append(basis @ y)
    w = np.column_stack(columns)
    diag = np.einsum("ip,kij,jp->kp", w, spd.matrices, w)
    sums = diag.sum(axis=0)
    order = np.argsort(-sums, kind="stable") if descending else np.arange(d)
    return SharedBasis(
        basis=_fix_signs(w[:, order]),
        importance=sums[order],
        method="see",
        per_objective_values=diag[:, order],
    )


def method_zahm(h, sigma, r: int) -> RidgeProjector:
    """Rank-r ridge projector from the generalized eigenvectors of (H, Sigma^-1)."""
    h = validate_symmetric(h, "h")
    sigma = validate_symmetric(sigma, "sigma")
    d = h.shape[0]
    if not (1 <= r <= d):
        raise ValidationError(f"rank r={r} out of range 1..{d}")
    try:
        sigma_inv = np.linalg.inv(sigma)
    except np.linalg.LinAlgError as exc:
        raise SingularCovarianceError("sigma is singular") from exc
    pair = gen_sym_eig(h, 0.5 * (sigma_inv + sigma_inv.T))
    vectors = pair.vectors[:, :r]
    projector = (vectors @ vectors.T) @ (0.5 * (sigma_inv + sigma_inv.T))
    return RidgeProjector(projector=projector, rank=r, vectors=vectors)


def save_shared_basis(basis: SharedBasis, path) -> None:
    """CSV matrix dump with a one-line `method,d,ordering=descending` header."""
    d = basis.basis.shape[0]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([basis.method, str(d), "ordering=descending"])
        for row in basis.basis:
            writer.writerow([repr(float(v)) for v in row])


def load_shared_basis(path) -> SharedBasis:
    """Read back a basis dump; importance is not stored and returns as NaN."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        method, d = header[0], int(header[1])
        rows = [[float(v) for v in row] for row in reader if row]
    basis = np.array(rows)
    if basis.shape != (d, d):
        raise ValidationError(f"{path}: expected a {d}x{d} matrix")
    return SharedBasis(basis=basis, importance=np.full(d, np.nan), method=method)
