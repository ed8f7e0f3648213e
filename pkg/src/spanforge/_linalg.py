"""Dense linear algebra helpers with explicit rank tolerances.

Every rank decision in the package goes through this module so that the
zero-cutoff convention is applied uniformly: a singular value counts as zero
iff it is at most rank_rtol times the largest singular value.  Callers that
know the structural scale of a product (for example projector times
orthonormal basis, whose genuine singular values are at most 1) pass it as
`scale`, which floors the reference so an all-noise matrix is treated as
exactly zero instead of having its noise inverted.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np


@dataclass(frozen=True)
class Tolerances:
    """Numerical policy shared by all witness computations.

    rank_rtol: a singular value sigma counts as zero iff sigma <= rank_rtol * reference.
    membership_rtol: v is in col(M) iff ||M M^+ v - v|| <= membership_rtol * ||v||.
    """

    rank_rtol: float = 1e-10
    membership_rtol: float = 1e-8


DEFAULT_TOLS = Tolerances()


def _reference(s: np.ndarray, scale: Optional[float]) -> float:
    top = float(s[0]) if s.size else 0.0
    return max(top, scale) if scale is not None else top


def singular_values(mat: np.ndarray) -> np.ndarray:
    """All singular values of mat, descending."""
    mat = np.atleast_2d(np.asarray(mat, dtype=float))
    if mat.size == 0:
        return np.zeros(0)
    return np.linalg.svd(mat, compute_uv=False)


def numerical_rank(
    mat: np.ndarray, tols: Tolerances = DEFAULT_TOLS, scale: Optional[float] = None
) -> int:
    s = singular_values(mat)
    ref = _reference(s, scale)
    if ref == 0.0:
        return 0
    return int(np.sum(s > tols.rank_rtol * ref))


def nonzero_singular_values(
    mat: np.ndarray, tols: Tolerances = DEFAULT_TOLS, scale: Optional[float] = None
) -> np.ndarray:
    s = singular_values(mat)
    return s[: numerical_rank(mat, tols, scale)]


def sigma_max(mat: np.ndarray) -> float:
    s = singular_values(mat)
    return float(s[0]) if s.size else 0.0


def sigma_min_nonzero(
    mat: np.ndarray, tols: Tolerances = DEFAULT_TOLS, scale: Optional[float] = None
) -> float:
    """Smallest nonzero singular value; raises on the zero matrix."""
    s = nonzero_singular_values(mat, tols, scale)
    if s.size == 0:
        raise ValueError("matrix has no nonzero singular value")
    return float(s[-1])


def pinv(
    mat: np.ndarray, tols: Tolerances = DEFAULT_TOLS, scale: Optional[float] = None
) -> np.ndarray:
    """Moore-Penrose pseudo-inverse with the package's rank cutoff."""
    mat = np.atleast_2d(np.asarray(mat, dtype=float))
    if mat.size == 0:
        return np.zeros(mat.shape[::-1])
    u, s, vt = np.linalg.svd(mat, full_matrices=False)
    ref = _reference(s, scale)
    if ref == 0.0:
        return np.zeros(mat.shape[::-1])
    keep = s > tols.rank_rtol * ref
    inv = np.zeros_like(s)
    inv[keep] = 1.0 / s[keep]
    return (vt.T * inv) @ u.T


def in_column_space(
    mat: np.ndarray,
    vec: np.ndarray,
    tols: Tolerances = DEFAULT_TOLS,
    scale: Optional[float] = None,
) -> bool:
    vec = np.asarray(vec, dtype=float)
    nv = np.linalg.norm(vec)
    if nv == 0.0:
        return True
    resid = mat @ (pinv(mat, tols, scale) @ vec) - vec
    return bool(np.linalg.norm(resid) <= tols.membership_rtol * nv)


def column_space_basis(
    mat: np.ndarray, tols: Tolerances = DEFAULT_TOLS, scale: Optional[float] = None
) -> np.ndarray:
    """Orthonormal basis of col(mat) as columns; shape (rows, rank)."""
    mat = np.atleast_2d(np.asarray(mat, dtype=float))
    if mat.size == 0:
        return np.zeros((mat.shape[0], 0))
    u, s, _ = np.linalg.svd(mat, full_matrices=False)
    ref = _reference(s, scale)
    r = int(np.sum(s > tols.rank_rtol * ref)) if ref > 0 else 0
    return u[:, :r]


def kernel_basis(
    mat: np.ndarray, tols: Tolerances = DEFAULT_TOLS, scale: Optional[float] = None
) -> np.ndarray:
    """Orthonormal basis of ker(mat) (right null space) as columns."""
    mat = np.atleast_2d(np.asarray(mat, dtype=float))
    ncols = mat.shape[1]
    if ncols == 0:
        return np.zeros((0, 0))
    u, s, vt = np.linalg.svd(mat, full_matrices=True)
    ref = _reference(s, scale)
    if ref == 0.0:
        return np.eye(ncols)
    r = int(np.sum(s > tols.rank_rtol * ref))
    return vt[r:].T


def projector_onto_columns(
    mat: np.ndarray, tols: Tolerances = DEFAULT_TOLS, scale: Optional[float] = None
) -> np.ndarray:
    """Orthogonal projector onto col(mat)."""
    basis = column_space_basis(mat, tols, scale)
    return basis @ basis.T


def is_orthogonal_projector(mat: np.ndarray, tol: float = 1e-10) -> bool:
    mat = np.asarray(mat, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        return False
    return bool(
        np.max(np.abs(mat - mat.T)) <= tol and np.max(np.abs(mat @ mat - mat)) <= tol
    )


def unit_singular_count(mat: np.ndarray, tol: float = 1e-8) -> int:
    """Number of singular values within tol of 1 (dimension of exact overlap)."""
    s = singular_values(mat)
    return int(np.sum(np.abs(s - 1.0) <= tol))


def intersection_dims(pi_a: np.ndarray, pi_b: np.ndarray, tol: float = 1e-8) -> dict:
    """Dimensions of the four intersections of the subspaces behind two projectors."""
    dim = pi_a.shape[0]
    ca = np.eye(dim) - pi_a
    cb = np.eye(dim) - pi_b
    return {
        "a_and_b": unit_singular_count(pi_a @ pi_b, tol),
        "a_and_bperp": unit_singular_count(pi_a @ cb, tol),
        "aperp_and_b": unit_singular_count(ca @ pi_b, tol),
        "aperp_and_bperp": unit_singular_count(ca @ cb, tol),
    }


def freeze(arr: np.ndarray) -> np.ndarray:
    """Return a read-only float array (shared values are never mutated)."""
    out = np.array(arr, dtype=float)
    out.setflags(write=False)
    return out
