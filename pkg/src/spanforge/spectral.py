"""Reflection-product unitaries for span programs and their exact phase structure.

U(P, x) is the product of the reflection about ker(A) with the reflection
about H(x); U'(P, x) swaps in the reflection about T = ker(A) + span{w0}.
Both are real orthogonal, so their spectra decompose into an invariant
subspace per phase, phases coming in +/- pairs.  The decomposition is
computed from the real Schur form, which is block diagonal for orthogonal
matrices: 2x2 rotation blocks carry the nontrivial phases and 1x1 blocks
carry +/-1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from ._linalg import (
    DEFAULT_TOLS,
    Tolerances,
    freeze,
    is_orthogonal_projector,
    nonzero_singular_values,
    pinv,
    sigma_max,
    sigma_min_nonzero,
)
from .spanprog import SpanProgram, minimal_witness, subspace_projector

PHASE_ROUND_TOL = 1e-9   # phases this close to 0 or pi are snapped
PHASE_CLUSTER_TOL = 1e-9  # phases this close together share an eigenspace


@dataclass(frozen=True)
class PhaseCluster:
    """One invariant subspace: unsigned phase theta in [0, pi] and an
    orthonormal basis of the real invariant subspace (both signs combined)."""

    theta: float
    basis: np.ndarray

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.T


@dataclass(frozen=True)
class UnitaryDecomposition:
    """A real orthogonal matrix with its full phase decomposition.

    clusters are sorted by unsigned phase; a cluster at theta in (0, pi)
    represents the conjugate pair e^{+/- i theta} and has even dimension.
    query_cost is the number of input-oracle queries charged per application
    (2 for U and U': the input-dependent reflection needs two queries).
    """

    matrix: np.ndarray
    clusters: tuple[PhaseCluster, ...]
    query_cost: int = 2

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def phases(self) -> list[float]:
        """Signed phases in (-pi, pi], one per complexified eigenvector."""
        out: list[float] = []
        for cl in self.clusters:
            if cl.theta == 0.0 or cl.theta == math.pi:
                out.extend([cl.theta] * cl.dim)
            else:
                out.extend([cl.theta] * (cl.dim // 2))
                out.extend([-cl.theta] * (cl.dim // 2))
        return sorted(out)

    def small_phase_projector(self, theta_max: float) -> np.ndarray:
        """Projector onto the span of eigenspaces with |phase| <= theta_max."""
        if not 0.0 <= theta_max < math.pi:
            raise ValueError("theta_max must lie in [0, pi)")
        proj = np.zeros((self.dim, self.dim))
        for cl in self.clusters:
            if cl.theta <= theta_max:
                proj += cl.projector()
        return proj

    def fixed_projector(self) -> np.ndarray:
        return self.small_phase_projector(0.0)

    def phase_gap(self) -> float:
        """Smallest nonzero |phase|; inf when the matrix is the identity."""
        nonzero = [cl.theta for cl in self.clusters if cl.theta > 0.0]
        return min(nonzero) if nonzero else math.inf

    def minus_one_projector(self) -> np.ndarray:
        for cl in self.clusters:
            if cl.theta == math.pi:
                return cl.projector()
        return np.zeros((self.dim, self.dim))

    def complex_eigenpairs(self) -> list[tuple[float, np.ndarray]]:
        """(signed phase, complex unit eigenvector) pairs, for verification."""
        pairs: list[tuple[float, np.ndarray]] = []
        for cl in self.clusters:
            if cl.theta == 0.0 or cl.theta == math.pi:
                for k in range(cl.dim):
                    pairs.append((cl.theta, cl.basis[:, k].astype(complex)))
                continue
            for k in range(0, cl.dim, 2):
                q1, q2 = cl.basis[:, k], cl.basis[:, k + 1]
                s = float(q2 @ (self.matrix @ q1))
                v = (q1 - 1j * q2) / math.sqrt(2.0)
                if s < 0:  # orient the pair so v carries e^{+i theta}
                    v = np.conj(v)
                pairs.append((cl.theta, v))
                pairs.append((-cl.theta, np.conj(v)))
        return pairs


@dataclass(frozen=True)
class DiscriminantReport:
    """D = Pi_A Pi_B with its singular values (descending) and the smallest
    nonzero one; sigma_min is None when D = 0."""

    d_mat: np.ndarray
    singular_values: np.ndarray
    sigma_min: Optional[float]

    def expected_rotation_phases(self, tol: float = 1e-8) -> list[float]:
        """Unsigned phases 2*arccos(sigma) predicted for the reflection
        product, one per singular value strictly inside (0, 1)."""
        out = []
        for s in self.singular_values:
            if tol < s < 1.0 - tol:
                out.append(2.0 * math.acos(min(1.0, float(s))))
        return sorted(out)


def decompose_orthogonal(u_mat: np.ndarray, query_cost: int = 2) -> UnitaryDecomposition:
    """Full phase decomposition of a real orthogonal matrix via real Schur form."""
    u_mat = np.asarray(u_mat, dtype=float)
    dim = u_mat.shape[0]
    ortho_defect = np.max(np.abs(u_mat.T @ u_mat - np.eye(dim)))
    if ortho_defect > 1e-8:
        raise ValueError(f"matrix is not orthogonal (defect {ortho_defect:.2e})")

    t_mat, q_mat = scipy.linalg.schur(u_mat, output="real")

    raw: list[tuple[float, list[int]]] = []
    i = 0
    while i < dim:
        if i + 1 < dim and abs(t_mat[i + 1, i]) > 1e-8:
            c = 0.5 * (t_mat[i, i] + t_mat[i + 1, i + 1])
            s = 0.5 * (t_mat[i + 1, i] - t_mat[i, i + 1])
            theta = abs(math.atan2(s, c))
            raw.append((theta, [i, i + 1]))
            i += 2
        else:
            theta = 0.0 if t_mat[i, i] > 0.0 else math.pi
            raw.append((theta, [i]))
            i += 1

    snapped = []
    for theta, cols in raw:
        if theta <= PHASE_ROUND_TOL:
            theta = 0.0
        elif math.pi - theta <= PHASE_ROUND_TOL:
            theta = math.pi
        snapped.append((theta, cols))
    snapped.sort(key=lambda item: item[0])

    clusters: list[PhaseCluster] = []
    group_theta: Optional[float] = None
    group_cols: list[int] = []
    for theta, cols in snapped:
        if group_theta is None or theta - group_theta > PHASE_CLUSTER_TOL:
            if group_theta is not None:
                clusters.append(
                    PhaseCluster(theta=group_theta, basis=freeze(q_mat[:, group_cols]))
                )
            group_theta, group_cols = theta, list(cols)
        else:
            group_cols.extend(cols)
    if group_theta is not None:
        clusters.append(PhaseCluster(theta=group_theta, basis=freeze(q_mat[:, group_cols])))

    return UnitaryDecomposition(
        matrix=freeze(u_mat), clusters=tuple(clusters), query_cost=query_cost
    )


def kernel_projector(program: SpanProgram, tols: Tolerances = DEFAULT_TOLS) -> np.ndarray:
    """Orthogonal projector onto ker(A)."""
    a_pinv = pinv(program.a_mat, tols)
    return np.eye(program.dim_h) - a_pinv @ program.a_mat


def build_U(
    program: SpanProgram, x: Sequence[int], tols: Tolerances = DEFAULT_TOLS
) -> UnitaryDecomposition:
    """U(P, x) = (2 Pi_ker(A) - I)(2 Pi_H(x) - I); one application costs 2 queries."""
    pi_ker = kernel_projector(program, tols)
    pi_hx = subspace_projector(program, x, tols)
    u = (2.0 * pi_ker - np.eye(program.dim_h)) @ (2.0 * pi_hx - np.eye(program.dim_h))
    return decompose_orthogonal(u, query_cost=2)


def build_Uprime(
    program: SpanProgram, x: Sequence[int], tols: Tolerances = DEFAULT_TOLS
) -> UnitaryDecomposition:
    """U'(P, x) = (2 Pi_H(x) - I)(2 Pi_T - I) with T = ker(A) + span{w0}.

    Also verifies the factorization U' = U^T (I - 2 w0 w0^T / ||w0||^2) against
    a direct matrix product before returning.
    """
    mw = minimal_witness(program, tols)
    w0_hat = np.asarray(mw.w0) / math.sqrt(mw.n_plus)
    pi_ker = kernel_projector(program, tols)
    pi_t = pi_ker + np.outer(w0_hat, w0_hat)
    pi_hx = subspace_projector(program, x, tols)
    eye = np.eye(program.dim_h)
    u_prime = (2.0 * pi_hx - eye) @ (2.0 * pi_t - eye)

    u = (2.0 * pi_ker - eye) @ (2.0 * pi_hx - eye)
    alt = u.T @ (eye - 2.0 * np.outer(w0_hat, w0_hat))
    defect = np.max(np.abs(u_prime - alt))
    if defect > 1e-10:
        raise RuntimeError(f"U' factorization identity violated (defect {defect:.2e})")

    return decompose_orthogonal(u_prime, query_cost=2)


def projector_small_phase(dec: UnitaryDecomposition, theta_max: float) -> np.ndarray:
    return dec.small_phase_projector(theta_max)


def phase_gap(dec: UnitaryDecomposition) -> float:
    return dec.phase_gap()


def discriminant(
    pi_a: np.ndarray, pi_b: np.ndarray, tols: Tolerances = DEFAULT_TOLS
) -> DiscriminantReport:
    """Discriminant D = Pi_A Pi_B of the reflection product (2Pi_A - I)(2Pi_B - I)."""
    for name, mat in (("Pi_A", pi_a), ("Pi_B", pi_b)):
        if not is_orthogonal_projector(mat):
            raise ValueError(f"{name} is not an orthogonal projector")
    d_mat = pi_a @ pi_b
    svals = np.linalg.svd(d_mat, compute_uv=False) if d_mat.size else np.zeros(0)
    nz = nonzero_singular_values(d_mat, tols, scale=1.0)  # projector product: scale 1
    sigma_min = float(nz[-1]) if nz.size else None
    return DiscriminantReport(
        d_mat=freeze(d_mat), singular_values=freeze(svals), sigma_min=sigma_min
    )


def kappa_bound(
    program: SpanProgram, x: Sequence[int], tols: Tolerances = DEFAULT_TOLS
) -> tuple[float, float]:
    """Phase-gap lower bound 2 sigma_min(A(x)) / sigma_max(A), valid for both
    U(P, x) and (when x is positive) U'(P, x); returned once per unitary."""
    ax = program.a_mat @ subspace_projector(program, x, tols)
    a_scale = sigma_max(program.a_mat)
    if sigma_max(ax) <= tols.rank_rtol * a_scale:
        raise ValueError("A(x) = 0: the phase-gap bound is degenerate")
    bound = 2.0 * sigma_min_nonzero(ax, tols, scale=a_scale) / a_scale
    return bound, bound
