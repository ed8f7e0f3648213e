"""Span programs over the reals and exact computation of all witness quantities.

A span program is a tuple (H, V, tau, A): H splits into coordinate blocks
H_1, ..., H_n, H_true, H_false, and each input position j carries subspaces
H_{j,a} of H_j, one per alphabet symbol a.  An input string x selects
H(x) = H_{1,x_1} + ... + H_{n,x_n} + H_true, and x is positive exactly when
some w in H(x) satisfies A w = tau.

All six witness quantities (exact and min-error, both signs) are computed by
finite-dimensional constrained least squares; infeasible sizes are math.inf.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ._linalg import (
    DEFAULT_TOLS,
    Tolerances,
    freeze,
    in_column_space,
    kernel_basis,
    numerical_rank,
    pinv,
    projector_onto_columns,
    sigma_max,
)


class SpanProgramError(ValueError):
    """Base class for span program errors."""


class StructuralError(SpanProgramError):
    """The object is malformed (dimension/shape inconsistencies)."""


class GloballyInfeasibleError(SpanProgramError):
    """tau is not in the column space of A: no input has a positive witness."""


@dataclass(frozen=True)
class SpanProgram:
    """Immutable span program data.

    blocks are index tuples into the dim_h standard coordinates; they must be
    disjoint and cover everything.  subspaces[(j, a)] is a matrix whose columns
    span H_{j,a}, written in H_j's local coordinates (len(input_blocks[j]) rows).
    Subspaces for different symbols of one position may overlap and need not
    be orthogonal; all that matters is that together they span H_j.
    """

    n: int
    q: int
    dim_h: int
    dim_v: int
    input_blocks: tuple[tuple[int, ...], ...]
    true_block: tuple[int, ...]
    false_block: tuple[int, ...]
    subspaces: dict[tuple[int, int], np.ndarray]
    a_mat: np.ndarray
    tau: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "a_mat", freeze(np.atleast_2d(self.a_mat)))
        object.__setattr__(self, "tau", freeze(np.asarray(self.tau, dtype=float)))
        object.__setattr__(
            self,
            "subspaces",
            {k: freeze(np.atleast_2d(v)) for k, v in self.subspaces.items()},
        )
        if self.n < 0 or self.q < 1:
            raise StructuralError("need n >= 0 input positions and q >= 1 symbols")
        if self.a_mat.shape != (self.dim_v, self.dim_h):
            raise StructuralError(
                f"A has shape {self.a_mat.shape}, expected {(self.dim_v, self.dim_h)}"
            )
        if self.tau.shape != (self.dim_v,):
            raise StructuralError(f"tau has shape {self.tau.shape}, expected ({self.dim_v},)")
        if len(self.input_blocks) != self.n:
            raise StructuralError("one coordinate block required per input position")
        for (j, a), mat in self.subspaces.items():
            if not (0 <= j < self.n and 0 <= a < self.q):
                raise StructuralError(f"subspace key {(j, a)} out of range")
            rows = len(self.input_blocks[j])
            if mat.shape[0] != rows and mat.size > 0:
                raise StructuralError(
                    f"subspace ({j},{a}) has {mat.shape[0]} rows, block has {rows} coordinates"
                )

    # -- basic geometry -------------------------------------------------

    def block_of(self, j: int) -> tuple[int, ...]:
        return self.input_blocks[j]

    def subspace_basis_global(self, j: int, a: int) -> np.ndarray:
        """Columns spanning H_{j,a} embedded in the full dim_h coordinates."""
        local = self.subspaces.get((j, a))
        block = self.input_blocks[j]
        if local is None or local.size == 0:
            return np.zeros((self.dim_h, 0))
        out = np.zeros((self.dim_h, local.shape[1]))
        out[list(block), :] = local
        return out

    def check_input(self, x: Sequence[int]) -> tuple[int, ...]:
        x = tuple(int(s) for s in x)
        if len(x) != self.n:
            raise StructuralError(f"input has length {len(x)}, expected {self.n}")
        if any(not (0 <= s < self.q) for s in x):
            raise StructuralError(f"input symbols must lie in [0, {self.q})")
        return x


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[tuple[str, bool, str], ...]

    @property
    def ok(self) -> bool:
        return all(passed for _, passed, _ in self.checks)

    def failures(self) -> list[str]:
        return [f"{name}: {detail}" for name, passed, detail in self.checks if not passed]


@dataclass(frozen=True)
class MinimalWitness:
    """Global minimal positive witness w0 = A^+ tau and the norms N_+/N_-."""

    w0: np.ndarray
    n_plus: float
    n_minus: float


@dataclass(frozen=True)
class WitnessReport:
    """All six witness quantities for one (P, x) pair.

    Exactly one of w_plus/w_minus is finite.  witness_vec is the optimal exact
    positive witness when x is positive, otherwise the optimal min-error
    positive witness.  neg_witness_row is omega A in H coordinates (exact when
    x is negative, min-error otherwise).
    """

    w_plus: float
    w_minus: float
    e_plus: float
    e_minus: float
    w_tilde_plus: float
    w_tilde_minus: float
    witness_vec: np.ndarray
    neg_witness_row: np.ndarray


def validate(program: SpanProgram, tols: Tolerances = DEFAULT_TOLS) -> ValidationReport:
    """Check the model invariants: disjoint covering blocks and spanning subspaces."""
    checks: list[tuple[str, bool, str]] = []

    all_blocks = list(program.input_blocks) + [program.true_block, program.false_block]
    seen: list[int] = []
    for blk in all_blocks:
        seen.extend(blk)
    disjoint = len(seen) == len(set(seen))
    covering = sorted(set(seen)) == list(range(program.dim_h))
    checks.append(
        (
            "blocks-disjoint-cover",
            disjoint and covering,
            "H_1..H_n, H_true, H_false must partition the dim_h coordinates",
        )
    )

    for j in range(program.n):
        rows = len(program.input_blocks[j])
        stacked = np.hstack(
            [program.subspace_basis_global(j, a)[list(program.input_blocks[j]), :]
             for a in range(program.q)]
        ) if rows else np.zeros((0, 0))
        spanning = numerical_rank(stacked, tols) == rows
        checks.append(
            (
                f"subspaces-span-H_{j}",
                spanning,
                "H_{j,1} + ... + H_{j,q} must equal H_j",
            )
        )

    return ValidationReport(tuple(checks))


def subspace_projector(
    program: SpanProgram, x: Sequence[int], tols: Tolerances = DEFAULT_TOLS
) -> np.ndarray:
    """Orthogonal projector onto H(x) = H_{1,x_1} + ... + H_{n,x_n} + H_true.

    Block diagonal across the coordinate blocks; the H_false block is zero.
    """
    x = program.check_input(x)
    proj = np.zeros((program.dim_h, program.dim_h))
    for j, sym in enumerate(x):
        block = list(program.input_blocks[j])
        if not block:
            continue
        local = program.subspaces.get((j, sym))
        if local is None or local.size == 0:
            continue
        local_proj = projector_onto_columns(local, tols)
        proj[np.ix_(block, block)] = local_proj
    for idx in program.true_block:
        proj[idx, idx] = 1.0
    return proj


def minimal_witness(program: SpanProgram, tols: Tolerances = DEFAULT_TOLS) -> MinimalWitness:
    """w0 = A^+ tau, N_+ = ||w0||^2, and N_- = 1/N_+ (the reciprocal identity)."""
    if not in_column_space(program.a_mat, program.tau, tols):
        raise GloballyInfeasibleError("tau is not in col(A); no positive witness exists")
    w0 = pinv(program.a_mat, tols) @ program.tau
    n_plus = float(w0 @ w0)
    if n_plus == 0.0:
        raise GloballyInfeasibleError("tau = 0 gives a degenerate program")
    return MinimalWitness(w0=freeze(w0), n_plus=n_plus, n_minus=1.0 / n_plus)


def positive_witness(
    program: SpanProgram, x: Sequence[int], tols: Tolerances = DEFAULT_TOLS
) -> tuple[Optional[np.ndarray], float]:
    """Optimal exact positive witness (A Pi_{H(x)})^+ tau, or (None, inf)."""
    proj = subspace_projector(program, x, tols)
    ax = program.a_mat @ proj
    a_scale = sigma_max(program.a_mat)  # A(x) = A Pi inherits A's scale
    if not in_column_space(ax, program.tau, tols, scale=a_scale):
        return None, math.inf
    w = pinv(ax, tols, scale=a_scale) @ program.tau
    w = proj @ w  # clean any component the pseudo-inverse left outside H(x)
    return freeze(w), float(w @ w)


def _min_norm_under_linear_constraint(
    gram: np.ndarray,
    c: np.ndarray,
    tols: Tolerances,
    scale: Optional[float] = None,
    gram_scale: Optional[float] = None,
) -> tuple[Optional[np.ndarray], float]:
    """Minimize nu^T G nu subject to nu . c = 1 for symmetric PSD G.

    Returns (nu, value); (None, inf) when c vanishes (relative to scale, which
    defaults to ||c|| itself so only exact zero counts), and (nu, 0.0) when c
    has a kernel component of G (the objective can be made exactly zero).
    """
    c_norm = float(np.linalg.norm(c))
    floor = tols.membership_rtol * scale if scale is not None else 0.0
    if c_norm <= floor:
        return None, math.inf
    g_pinv = pinv(gram, tols, scale=gram_scale)
    in_range = gram @ (g_pinv @ c)
    kernel_part = c - in_range
    if np.linalg.norm(kernel_part) > tols.membership_rtol * np.linalg.norm(c):
        nu = kernel_part / float(kernel_part @ c)
        return nu, 0.0
    denom = float(c @ (g_pinv @ c))
    nu = (g_pinv @ c) / denom
    return nu, 1.0 / denom


def negative_witness(
    program: SpanProgram, x: Sequence[int], tols: Tolerances = DEFAULT_TOLS
) -> tuple[Optional[np.ndarray], float]:
    """Optimal exact negative witness for x.

    Solves min ||omega A||^2 subject to omega A Pi_{H(x)} = 0 and omega tau = 1
    by restricting omega to the orthocomplement of col(A Pi_{H(x)}).  Returns
    (omega A as a length-dim_h row, w_minus); (None, inf) when x is positive.
    """
    proj = subspace_projector(program, x, tols)
    ax = program.a_mat @ proj
    a_scale = sigma_max(program.a_mat)
    q_perp = np.eye(program.dim_v) - projector_onto_columns(ax, tols, scale=a_scale)
    b = q_perp @ program.a_mat
    c = q_perp @ program.tau
    gram = b @ b.T
    # c = tau - (projection onto col A(x)), so the infeasibility test below is
    # the same membership test positive_witness applies, keeping the partition
    # of inputs exact.
    nu, value = _min_norm_under_linear_constraint(
        gram,
        c,
        tols,
        scale=float(np.linalg.norm(program.tau)),
        gram_scale=a_scale * a_scale,
    )
    if nu is None:
        return None, math.inf
    omega = q_perp @ nu
    row = omega @ program.a_mat
    return freeze(row), value


def min_error_positive(
    program: SpanProgram, x: Sequence[int], tols: Tolerances = DEFAULT_TOLS
) -> tuple[np.ndarray, float, float]:
    """Optimal min-error positive witness: (w_tilde, e_plus, w_tilde_plus).

    Stage one minimizes ||Pi_{H(x)^perp} w||^2 over {w : A w = tau}; stage two
    minimizes ||w||^2 over the stage-one minimizers.  The solution set of
    A w = tau is parametrized as w0 + ker(A).
    """
    mw = minimal_witness(program, tols)
    proj = subspace_projector(program, x, tols)
    perp = np.eye(program.dim_h) - proj
    kern = kernel_basis(program.a_mat, tols)

    if kern.shape[1] == 0:
        w = np.asarray(mw.w0, dtype=float)
    else:
        m1 = perp @ kern  # projector times isometry: genuine singular values are O(1)
        z_star = -pinv(m1, tols, scale=1.0) @ (perp @ mw.w0)
        w1 = mw.w0 + kern @ z_star
        null1 = kernel_basis(m1, tols, scale=1.0)
        if null1.shape[1] == 0:
            w = w1
        else:
            free = kern @ null1  # orthonormal columns: both factors are isometries
            y = -(free.T @ w1)
            w = w1 + free @ y

    err = perp @ w
    return freeze(w), float(err @ err), float(w @ w)


def min_error_negative(
    program: SpanProgram, x: Sequence[int], tols: Tolerances = DEFAULT_TOLS
) -> tuple[np.ndarray, float, float]:
    """Optimal min-error negative witness: (omega_tilde A, e_minus, w_tilde_minus).

    Mirrors min_error_positive: stage one minimizes ||omega A Pi_{H(x)}||^2
    over {omega : omega tau = 1}, stage two minimizes ||omega A||^2 among the
    stage-one minimizers.
    """
    tau_norm2 = float(program.tau @ program.tau)
    if tau_norm2 == 0.0:
        raise StructuralError("tau = 0: no functional maps tau to 1")
    proj = subspace_projector(program, x, tols)
    omega_p = program.tau / tau_norm2
    z_basis = kernel_basis(program.tau[None, :], tols)  # orthonormal basis of tau^perp

    # Stage one in the coefficient vector y: omega = omega_p + Z y.
    a_scale = sigma_max(program.a_mat)
    m1 = proj @ program.a_mat.T @ z_basis
    r1 = proj @ program.a_mat.T @ omega_p
    if z_basis.shape[1] == 0:
        omega = omega_p
    else:
        y_star = -pinv(m1, tols, scale=a_scale) @ r1
        null1 = kernel_basis(m1, tols, scale=a_scale)
        if null1.shape[1] == 0:
            omega = omega_p + z_basis @ y_star
        else:
            m2 = program.a_mat.T @ z_basis @ null1
            r2 = program.a_mat.T @ (omega_p + z_basis @ y_star)
            v = -pinv(m2, tols, scale=a_scale) @ r2
            omega = omega_p + z_basis @ (y_star + null1 @ v)

    row = omega @ program.a_mat
    on_x = row @ proj
    return freeze(row), float(on_x @ on_x), float(row @ row)


def witness_report(
    program: SpanProgram, x: Sequence[int], tols: Tolerances = DEFAULT_TOLS
) -> WitnessReport:
    """Compute all six witness quantities and the optimal witness vectors."""
    w_vec, w_plus = positive_witness(program, x, tols)
    neg_row, w_minus = negative_witness(program, x, tols)

    if math.isinf(w_plus):
        tilde_vec, e_plus, w_tilde_plus = min_error_positive(program, x, tols)
        witness_vec = tilde_vec
    else:
        e_plus, w_tilde_plus = 0.0, w_plus
        witness_vec = w_vec

    if math.isinf(w_minus):
        tilde_row, e_minus, w_tilde_minus = min_error_negative(program, x, tols)
        neg_witness_row = tilde_row
    else:
        e_minus, w_tilde_minus = 0.0, w_minus
        neg_witness_row = neg_row

    return WitnessReport(
        w_plus=w_plus,
        w_minus=w_minus,
        e_plus=e_plus,
        e_minus=e_minus,
        w_tilde_plus=w_tilde_plus,
        w_tilde_minus=w_tilde_minus,
        witness_vec=witness_vec,
        neg_witness_row=neg_witness_row,
    )


def minimal_negative_value(program: SpanProgram, tols: Tolerances = DEFAULT_TOLS) -> tuple[np.ndarray, float]:
    """Global minimal negative witness: min ||omega A||^2 over omega tau = 1.

    Independent of any input; tested against 1/N_+ and (omega0 A)^dag = w0/N_+.
    """
    gram = program.a_mat @ program.a_mat.T
    a_scale = sigma_max(program.a_mat)
    nu, value = _min_norm_under_linear_constraint(
        gram, program.tau, tols, gram_scale=a_scale * a_scale
    )
    if nu is None:
        raise StructuralError("tau = 0: no functional maps tau to 1")
    return freeze(nu @ program.a_mat), value


def rescale_target(program: SpanProgram, factor: float) -> SpanProgram:
    """Replace tau by factor * tau (positive witnesses scale by factor)."""
    if factor <= 0:
        raise ValueError("target rescaling factor must be positive")
    return SpanProgram(
        n=program.n,
        q=program.q,
        dim_h=program.dim_h,
        dim_v=program.dim_v,
        input_blocks=program.input_blocks,
        true_block=program.true_block,
        false_block=program.false_block,
        subspaces=dict(program.subspaces),
        a_mat=program.a_mat,
        tau=factor * program.tau,
    )


def normalize(program: SpanProgram, tols: Tolerances = DEFAULT_TOLS) -> SpanProgram:
    """Rescale the target by 1/sqrt(N_+) so the minimal witness has unit norm.

    Positive witness sizes scale by 1/N_+, negative ones by N_+.
    """
    mw = minimal_witness(program, tols)
    return rescale_target(program, 1.0 / math.sqrt(mw.n_plus))


def scale(program: SpanProgram, beta: float, tols: Tolerances = DEFAULT_TOLS) -> SpanProgram:
    """Augmented scaling construction: normalized program with witnesses scaled by beta.

    Appends coordinate h0 (false side) then h1 (true side) as the last two H
    coordinates, and h1 as the last V coordinate:

        A_beta = beta * A + tau <h0| + (sqrt(beta^2 + N)/beta) |h1><h1|
        tau_beta = tau + |h1>

    For positive x, w+ becomes w+/beta^2 + beta^2/(N + beta^2); for negative x,
    w- becomes beta^2 w- + 1; the new minimal witness has unit norm.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    mw = minimal_witness(program, tols)
    n_val = mw.n_plus

    dim_h = program.dim_h + 2
    dim_v = program.dim_v + 1
    h0_idx, h1_idx = program.dim_h, program.dim_h + 1
    v1_idx = program.dim_v

    a_new = np.zeros((dim_v, dim_h))
    a_new[: program.dim_v, : program.dim_h] = beta * program.a_mat
    a_new[: program.dim_v, h0_idx] = program.tau
    a_new[v1_idx, h1_idx] = math.sqrt(beta * beta + n_val) / beta

    tau_new = np.zeros(dim_v)
    tau_new[: program.dim_v] = program.tau
    tau_new[v1_idx] = 1.0

    return SpanProgram(
        n=program.n,
        q=program.q,
        dim_h=dim_h,
        dim_v=dim_v,
        input_blocks=program.input_blocks,
        true_block=program.true_block + (h1_idx,),
        false_block=program.false_block + (h0_idx,),
        subspaces=dict(program.subspaces),
        a_mat=a_new,
        tau=tau_new,
    )


def or_span_program(n: int) -> SpanProgram:
    """The canonical OR program: H = R^n, H_{j,1} = span{e_j}, H_{j,0} = {0},
    V = R, A the all-ones row, tau = 1.  w_+(x) = 1/|x| and w_-(0...0) = n.
    """
    if n < 1:
        raise ValueError("OR needs at least one input bit")
    subspaces = {}
    for j in range(n):
        subspaces[(j, 0)] = np.zeros((1, 0))
        subspaces[(j, 1)] = np.ones((1, 1))
    return SpanProgram(
        n=n,
        q=2,
        dim_h=n,
        dim_v=1,
        input_blocks=tuple((j,) for j in range(n)),
        true_block=(),
        false_block=(),
        subspaces=subspaces,
        a_mat=np.ones((1, n)),
        tau=np.array([1.0]),
    )
