"""Dense tensor primitives used by every other module.

Thin, contract-checked wrappers around numpy/LAPACK: pairwise tensor
contraction, truncated SVD, and leading-eigenvalue extraction (dense for
small problems, two-vector orthogonal iteration for large linear
operators that are only available as a matvec).

Conventions: all tensors are numpy arrays in row-major (C) order; axis
multi-indices flatten with the first axis slowest.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from .errors import ConvergenceError, DimensionMismatchError

__all__ = [
    "SpectralResult",
    "contract",
    "svd_truncate",
    "eig_dense",
    "dominant_eig",
]


@dataclass
class SpectralResult:
    """Outcome of an eigen-solve ordered by descending |eigenvalue|.

    ``gap_ratio`` is |lambda_1| / |lambda_0| (0.0 for one-dimensional
    problems); values close to 1 signal a near-degenerate leading pair.
    ``leading_left`` satisfies ``l @ m = lambda_0 * l`` (no conjugation),
    which is the orientation transfer-matrix contractions need.
    """

    eigenvalues: np.ndarray
    leading_right: np.ndarray
    leading_left: np.ndarray | None = None
    gap_ratio: float = 0.0
    residual: float = 0.0
    iterations: int = 0
    converged: bool = True
    diagnostics: dict = field(default_factory=dict)

    @property
    def leading(self) -> complex:
        return self.eigenvalues[0]


def contract(a: np.ndarray, b: np.ndarray, pairs: Sequence[tuple[int, int]]) -> np.ndarray:
    """Contract ``a`` with ``b`` over the given (axis_of_a, axis_of_b) pairs.

    The result keeps the unpaired axes of ``a`` (in order) followed by the
    unpaired axes of ``b``.  Raises DimensionMismatchError when a paired
    extent disagrees, naming the offending axes.
    """
    pairs = list(pairs)
    for ax_a, ax_b in pairs:
        if not (-a.ndim <= ax_a < a.ndim) or not (-b.ndim <= ax_b < b.ndim):
            raise DimensionMismatchError(
                f"axis pair ({ax_a}, {ax_b}) out of range for shapes {a.shape}, {b.shape}"
            )
        if a.shape[ax_a] != b.shape[ax_b]:
            raise DimensionMismatchError(
                f"cannot contract axis {ax_a} (extent {a.shape[ax_a]}) of {a.shape} "
                f"with axis {ax_b} (extent {b.shape[ax_b]}) of {b.shape}"
            )
    if not pairs:
        return np.tensordot(a, b, axes=0)
    ax_a, ax_b = zip(*pairs)
    return np.tensordot(a, b, axes=(list(ax_a), list(ax_b)))


def svd_truncate(
    m: np.ndarray,
    max_rank: int | None = None,
    cutoff: float = 0.0,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    """Truncated SVD ``m ~ U @ diag(s) @ V``.

    Singular values come back in descending order.  Values below
    ``cutoff * ||s||_2`` are dropped, then the rank is capped at
    ``max_rank``; at least one singular value is always kept.

    Returns (U, s, V, discarded_weight) where ``discarded_weight`` is the
    sum of squared dropped singular values (the Frobenius error^2).
    """
    if m.ndim != 2:
        raise DimensionMismatchError(f"svd_truncate expects a matrix, got shape {m.shape}")
    try:
        u, s, vh = np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError:
        # gesdd occasionally fails to converge; gesvd is slower but robust
        u, s, vh = scipy.linalg.svd(m, full_matrices=False, lapack_driver="gesvd")
    norm = float(np.linalg.norm(s))
    keep = len(s)
    if cutoff > 0.0 and norm > 0.0:
        keep = int(np.count_nonzero(s >= cutoff * norm))
    if max_rank is not None:
        keep = min(keep, int(max_rank))
    keep = max(keep, 1)
    discarded = float(np.sum(s[keep:] ** 2))
    return u[:, :keep], s[:keep], vh[:keep], discarded


def _left_eigvec_for(m: np.ndarray, lam: complex) -> np.ndarray:
    """Left eigenvector of ``m`` for the eigenvalue closest to ``lam``."""
    vals, vecs = np.linalg.eig(m.T)
    k = int(np.argmin(np.abs(vals - lam)))
    v = vecs[:, k]
    return v / np.linalg.norm(v)


def eig_dense(m: np.ndarray, want_left: bool = True) -> SpectralResult:
    """Full dense eigendecomposition, sorted by descending |eigenvalue|."""
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatchError(f"eig_dense expects a square matrix, got {m.shape}")
    vals, vecs = np.linalg.eig(m)
    order = np.argsort(-np.abs(vals), kind="stable")
    vals = vals[order]
    vecs = vecs[:, order]
    lam0 = vals[0]
    right = vecs[:, 0] / np.linalg.norm(vecs[:, 0])
    residual = float(np.linalg.norm(m @ right - lam0 * right))
    gap = float(np.abs(vals[1]) / np.abs(lam0)) if len(vals) > 1 and np.abs(lam0) > 0 else 0.0
    left = _left_eigvec_for(m, lam0) if want_left else None
    return SpectralResult(
        eigenvalues=vals,
        leading_right=right,
        leading_left=left,
        gap_ratio=gap,
        residual=residual,
        iterations=0,
        converged=True,
    )


def dominant_eig(
    apply: Callable[[np.ndarray], np.ndarray],
    dim: int,
    tol: float = 1e-12,
    max_iter: int = 5000,
    seed: int = 0,
) -> SpectralResult:
    """Leading eigenpair of a linear operator given only as a matvec.

    Runs two-vector orthogonal (subspace) iteration so that a second Ritz
    value is available to estimate the spectral gap.  Deterministic for a
    fixed ``seed``.  To obtain the *left* eigenvector, call again with the
    transposed operator.

    Raises ConvergenceError after ``max_iter`` sweeps, with the best
    estimate attached as ``err.best``.
    """
    if dim < 1:
        raise DimensionMismatchError("operator dimension must be >= 1")
    if dim == 1:
        lam = complex(np.asarray(apply(np.ones(1))).ravel()[0])
        return SpectralResult(
            eigenvalues=np.array([lam]),
            leading_right=np.ones(1),
            leading_left=np.ones(1),
            gap_ratio=0.0,
            residual=0.0,
            iterations=1,
            converged=True,
        )
    rng = np.random.default_rng(seed)
    block = min(2, dim)
    v = rng.standard_normal((dim, block))
    v, _ = np.linalg.qr(v)
    theta0 = 0.0 + 0.0j
    result = None
    for it in range(1, max_iter + 1):
        w = np.column_stack([np.asarray(apply(v[:, j])).ravel() for j in range(block)])
        # Rayleigh-Ritz on the current subspace
        q, _ = np.linalg.qr(w)
        b = q.conj().T @ np.column_stack(
            [np.asarray(apply(q[:, j])).ravel() for j in range(block)]
        )
        ritz, ritz_vecs = np.linalg.eig(b)
        order = np.argsort(-np.abs(ritz))
        ritz = ritz[order]
        ritz_vecs = ritz_vecs[:, order]
        theta0 = ritz[0]
        x0 = q @ ritz_vecs[:, 0]
        x0 = x0 / np.linalg.norm(x0)
        residual = float(np.linalg.norm(np.asarray(apply(x0)).ravel() - theta0 * x0))
        gap = float(np.abs(ritz[1]) / np.abs(theta0)) if block > 1 and np.abs(theta0) > 0 else 0.0
        result = SpectralResult(
            eigenvalues=np.array(ritz),
            leading_right=x0,
            leading_left=None,
            gap_ratio=gap,
            residual=residual,
            iterations=it,
            converged=residual <= tol * max(1.0, float(np.abs(theta0))),
        )
        if result.converged:
            return result
        v = q
    raise ConvergenceError(
        f"dominant_eig: no convergence after {max_iter} iterations "
        f"(residual {result.residual:.3e}, gap_ratio {result.gap_ratio:.6f})",
        best=result,
    )
