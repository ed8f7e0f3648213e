"""Seeded property suites checking the package's theorem-level identities.

Each suite draws its instances from per-task substreams ((seed, task index)
seeded generators), aggregates worst-case residuals, and returns a flat list
of checks; the CLI turns them into a report and its exit code.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._linalg import DEFAULT_TOLS, Tolerances, intersection_dims, sigma_max, sigma_min_nonzero
from .generators import (
    all_inputs,
    random_graph,
    random_projector_pair,
    random_span_program,
)
from .resistance import (
    build_st_span_program,
    exact_resistance,
    flow_resistance_bruteforce,
    graph_input,
    lambda2,
    verify_reflection_factorization,
    witness_equals_half_resistance,
)
from .spanprog import (
    minimal_negative_value,
    minimal_witness,
    normalize,
    scale,
    subspace_projector,
    witness_report,
)
from .spectral import build_U, build_Uprime, decompose_orthogonal, discriminant, kappa_bound

THETA_GRID = [0.05 * k for k in range(1, 31)]


@dataclass(frozen=True)
class Check:
    """One verified claim: observed worst-case quantity against its tolerance."""

    name: str
    passed: bool
    observed: float
    tolerance: float
    detail: str = ""


def _rng(seed: int, task: int) -> np.random.Generator:
    return np.random.default_rng([seed, task])


def _residual_check(name: str, observed: float, tol: float, detail: str = "") -> Check:
    return Check(name=name, passed=bool(observed <= tol), observed=float(observed),
                 tolerance=float(tol), detail=detail)


def suite_duality(trials: int, seed: int, tols: Tolerances = DEFAULT_TOLS) -> list[Check]:
    """Witness-size/error reciprocity and the optimal-witness vector identities
    on random programs, every input enumerated."""
    worst_neg = worst_pos = worst_vec_neg = worst_vec_pos = 0.0
    worst_nn = worst_mwvec = 0.0
    partition_violations = 0
    for trial in range(trials):
        program = random_span_program(_rng(seed, trial))
        mw = minimal_witness(program, tols)
        row0, n_minus = minimal_negative_value(program, tols)
        worst_nn = max(worst_nn, abs(mw.n_plus * n_minus - 1.0))
        worst_mwvec = max(
            worst_mwvec,
            float(np.max(np.abs(np.asarray(row0) - np.asarray(mw.w0) / mw.n_plus))),
        )
        for x in all_inputs(program):
            rep = witness_report(program, x, tols)
            if math.isinf(rep.w_plus) == math.isinf(rep.w_minus):
                partition_violations += 1
                continue
            proj = subspace_projector(program, x, tols)
            if math.isfinite(rep.w_minus):
                worst_neg = max(worst_neg, abs(rep.w_minus * rep.e_plus - 1.0) / rep.w_minus)
                err = (np.eye(program.dim_h) - proj) @ np.asarray(rep.witness_vec)
                pred = err / float(err @ err)
                worst_vec_neg = max(
                    worst_vec_neg,
                    float(np.max(np.abs(np.asarray(rep.neg_witness_row) - pred))),
                )
            else:
                worst_pos = max(worst_pos, abs(rep.w_plus * rep.e_minus - 1.0) / rep.w_plus)
                row = np.asarray(rep.neg_witness_row)
                on_x = row @ proj
                pred = (proj @ row) / float(on_x @ on_x)
                worst_vec_pos = max(
                    worst_vec_pos,
                    float(np.max(np.abs(np.asarray(rep.witness_vec) - pred))),
                )
    return [
        Check("duality/partition", partition_violations == 0, float(partition_violations), 0.0,
              "exactly one of w+, w- finite per input"),
        _residual_check("duality/neg-size-times-pos-error", worst_neg, 1e-8,
                        "relative deviation of w- * e+ from 1 on negative inputs"),
        _residual_check("duality/pos-size-times-neg-error", worst_pos, 1e-8,
                        "relative deviation of w+ * e- from 1 on positive inputs"),
        _residual_check("duality/neg-witness-vector-identity", worst_vec_neg, 1e-8,
                        "(omega A)^dag vs normalized off-subspace error of the min-error witness"),
        _residual_check("duality/pos-witness-vector-identity", worst_vec_pos, 1e-8,
                        "w_x vs normalized on-subspace part of the min-error negative witness"),
        _residual_check("duality/minimal-witness-reciprocal", worst_nn, 1e-8,
                        "N+ * N- = 1 with N- from the global quadratic program"),
        _residual_check("duality/minimal-witness-vector", worst_mwvec, 1e-8,
                        "(omega0 A)^dag = w0 / N+"),
    ]


def suite_spectral(trials: int, seed: int, tols: Tolerances = DEFAULT_TOLS) -> list[Check]:
    """Fixed-space overlaps and the effective-spectral-gap inequalities on
    normalized random programs, plus the raw two-reflection overlap lemma."""
    worst_p0_neg = worst_p0_pos = 0.0
    worst_th_neg = worst_th_pos = -math.inf
    worst_raw = -math.inf
    for trial in range(trials):
        rng = _rng(seed, trial)
        program = normalize(random_span_program(rng), tols)
        w0 = np.asarray(minimal_witness(program, tols).w0)
        for x in all_inputs(program):
            rep = witness_report(program, x, tols)
            dec = build_U(program, x, tols)
            decp = build_Uprime(program, x, tols)
            inv_wm = 0.0 if math.isinf(rep.w_minus) else 1.0 / rep.w_minus
            inv_wp = 0.0 if math.isinf(rep.w_plus) else 1.0 / rep.w_plus
            worst_p0_neg = max(
                worst_p0_neg, abs(float(w0 @ dec.fixed_projector() @ w0) - inv_wm)
            )
            worst_p0_pos = max(
                worst_p0_pos, abs(float(w0 @ decp.fixed_projector() @ w0) - inv_wp)
            )
            for theta in THETA_GRID:
                lhs = float(w0 @ dec.small_phase_projector(theta) @ w0)
                worst_th_neg = max(
                    worst_th_neg, lhs - (theta**2 / 4.0 * rep.w_tilde_plus + inv_wm)
                )
                lhs = float(w0 @ decp.small_phase_projector(theta) @ w0)
                worst_th_pos = max(
                    worst_th_pos, lhs - (theta**2 / 4.0 * rep.w_tilde_minus + inv_wp)
                )
        # raw overlap lemma on a random reflection pair from the same stream
        dim = int(rng.integers(3, 9))
        pi_a, pi_b = random_projector_pair(rng, dim)
        u_dec = decompose_orthogonal(
            (2.0 * pi_a - np.eye(dim)) @ (2.0 * pi_b - np.eye(dim)), query_cost=0
        )
        vec = rng.standard_normal(dim)
        vec -= pi_a @ vec  # now Pi_A vec = 0
        if np.linalg.norm(vec) > 1e-9:
            for theta in THETA_GRID:
                lhs = float(
                    np.linalg.norm(u_dec.small_phase_projector(theta) @ (pi_b @ vec))
                )
                worst_raw = max(worst_raw, lhs - theta / 2.0 * float(np.linalg.norm(vec)))
    return [
        _residual_check("spectral/fixed-space-neg", worst_p0_neg, 1e-8,
                        "||Pi_0 w0||^2 = 1/w- for U(P, x)"),
        _residual_check("spectral/fixed-space-pos", worst_p0_pos, 1e-8,
                        "||Pi_0 w0||^2 = 1/w+ for U'(P, x)"),
        _residual_check("spectral/small-phase-neg", worst_th_neg, 1e-8,
                        "||Pi_Theta w0||^2 <= Theta^2/4 wt+ + 1/w- over the Theta grid"),
        _residual_check("spectral/small-phase-pos", worst_th_pos, 1e-8,
                        "||Pi_Theta w0||^2 <= Theta^2/4 wt- + 1/w+ over the Theta grid"),
        _residual_check("spectral/two-reflection-overlap", worst_raw, 1e-8,
                        "||Pi_Theta Pi_B u|| <= Theta/2 ||u|| when Pi_A u = 0"),
    ]


def suite_scaling(trials: int, seed: int, tols: Tolerances = DEFAULT_TOLS) -> list[Check]:
    """Equalities and inequalities of the beta-scaling construction, plus
    normalization idempotence."""
    betas = (0.25, 1.0, 4.0)
    worst_eq = 0.0
    worst_ineq = -math.inf
    worst_unit = 0.0
    worst_idem = 0.0
    for trial in range(trials):
        program = random_span_program(_rng(seed, trial))
        n_plus = minimal_witness(program, tols).n_plus
        w0 = np.asarray(minimal_witness(program, tols).w0)
        normalized = normalize(program, tols)
        renormalized = normalize(normalized, tols)
        worst_idem = max(
            worst_idem,
            float(np.max(np.abs(np.asarray(renormalized.tau) - np.asarray(normalized.tau)))),
        )
        for beta in betas:
            scaled = scale(program, beta, tols)
            mws = minimal_witness(scaled, tols)
            worst_unit = max(worst_unit, abs(mws.n_plus - 1.0))
            expect_w0 = np.zeros(program.dim_h + 2)
            expect_w0[: program.dim_h] = beta / (beta**2 + n_plus) * w0
            expect_w0[program.dim_h] = n_plus / (beta**2 + n_plus)
            expect_w0[program.dim_h + 1] = beta / math.sqrt(beta**2 + n_plus)
            worst_eq = max(worst_eq, float(np.max(np.abs(np.asarray(mws.w0) - expect_w0))))
            for x in all_inputs(program):
                rep = witness_report(program, x, tols)
                rep_s = witness_report(scaled, x, tols)
                if math.isfinite(rep.w_minus):
                    expect = beta**2 * rep.w_minus + 1.0
                    worst_eq = max(worst_eq, abs(rep_s.w_minus - expect) / expect)
                    worst_ineq = max(
                        worst_ineq,
                        rep_s.w_tilde_plus - (rep.w_tilde_plus / beta**2 + 2.0),
                    )
                else:
                    expect = rep.w_plus / beta**2 + beta**2 / (n_plus + beta**2)
                    worst_eq = max(worst_eq, abs(rep_s.w_plus - expect) / expect)
                    worst_ineq = max(
                        worst_ineq,
                        rep_s.w_tilde_minus - (beta**2 * rep.w_tilde_minus + 2.0),
                    )
    return [
        _residual_check("scaling/equalities", worst_eq, 1e-8,
                        "scaled witness sizes and minimal witness vector (beta in {1/4, 1, 4})"),
        _residual_check("scaling/min-error-inequalities", worst_ineq, 1e-8,
                        "wt+/wt- growth bounds under scaling"),
        _residual_check("scaling/unit-minimal-witness", worst_unit, 1e-8,
                        "scaled program is normalized"),
        _residual_check("scaling/normalize-idempotent", worst_idem, 1e-8,
                        "normalizing twice changes nothing"),
    ]


def suite_szegedy(trials: int, dims: int, seed: int, tols: Tolerances = DEFAULT_TOLS) -> list[Check]:
    """Spectrum correspondence between a product of reflections and its
    discriminant, and the +/-1-eigenspace dimension count."""
    worst_phase = 0.0
    worst_dims = 0
    worst_gap = -math.inf
    for trial in range(trials):
        rng = _rng(seed, trial)
        dim = int(rng.integers(3, max(4, dims + 1)))
        forced = trial % 3 == 0
        pi_a, pi_b = random_projector_pair(
            rng,
            dim,
            shared=int(rng.integers(1, 3)) if forced else 0,
            a_only=int(rng.integers(0, 2)) if forced else 0,
        )
        u_mat = (2.0 * pi_a - np.eye(dim)) @ (2.0 * pi_b - np.eye(dim))
        dec = decompose_orthogonal(u_mat, query_cost=0)
        report = discriminant(pi_a, pi_b, tols)

        expected = report.expected_rotation_phases(tol=1e-8)
        actual = sorted(
            cl.theta
            for cl in dec.clusters
            if cl.theta not in (0.0, math.pi)
            for _ in range(cl.dim // 2)
        )
        if len(expected) != len(actual):
            worst_phase = max(worst_phase, math.inf)
        elif expected:
            worst_phase = max(
                worst_phase, float(np.max(np.abs(np.array(expected) - np.array(actual))))
            )

        dims_map = intersection_dims(pi_a, pi_b)
        plus_dim = sum(cl.dim for cl in dec.clusters if cl.theta == 0.0)
        minus_dim = sum(cl.dim for cl in dec.clusters if cl.theta == math.pi)
        if plus_dim != dims_map["a_and_b"] + dims_map["aperp_and_bperp"]:
            worst_dims += 1
        if minus_dim != dims_map["a_and_bperp"] + dims_map["aperp_and_b"]:
            worst_dims += 1

        minus_u = decompose_orthogonal(-u_mat, query_cost=0)
        if report.sigma_min is not None:
            worst_gap = max(worst_gap, 2.0 * report.sigma_min - minus_u.phase_gap())
    return [
        _residual_check("szegedy/phase-correspondence", worst_phase, 1e-8,
                        "non-trivial phases equal +/- 2 arccos(singular values of D)"),
        Check("szegedy/eigenspace-dimensions", worst_dims == 0, float(worst_dims), 0.0,
              "+/-1-eigenspace dimensions equal the four intersection dimensions"),
        _residual_check("szegedy/phase-gap-vs-discriminant", worst_gap, 1e-8,
                        "phase gap of -U is at least twice the smallest nonzero singular value of D"),
    ]


def suite_kappa(trials: int, seed: int, tols: Tolerances = DEFAULT_TOLS) -> list[Check]:
    """Phase-gap lower bounds on random programs and on graph instances,
    including the graph spectral identities the bound rests on."""
    worst_u = worst_up = -math.inf
    worst_sigma = worst_res = 0.0
    for trial in range(trials):
        rng = _rng(seed, trial)
        program = random_span_program(rng)
        for x in all_inputs(program):
            try:
                bound, _ = kappa_bound(program, x, tols)
            except ValueError:
                continue
            dec = build_U(program, x, tols)
            worst_u = max(worst_u, bound - dec.phase_gap())
            rep = witness_report(program, x, tols)
            if math.isfinite(rep.w_plus):
                decp = build_Uprime(program, x, tols)
                worst_up = max(worst_up, bound - decp.phase_gap())

        n = int(rng.integers(3, 8))
        g = random_graph(rng, n, edge_prob=0.6)
        program = build_st_span_program(g.n, g.s, g.t)
        x = graph_input(g)
        ax = np.asarray(program.a_mat) @ subspace_projector(program, x, tols)
        lam = lambda2(g)
        if lam > 1e-9:
            worst_sigma = max(
                worst_sigma,
                abs(sigma_min_nonzero(ax, tols, scale=sigma_max(program.a_mat))
                    - math.sqrt(2.0 * lam)),
            )
        worst_sigma = max(
            worst_sigma, abs(sigma_max(program.a_mat) - math.sqrt(2.0 * g.n))
        )
        res = exact_resistance(g)
        if math.isfinite(res) and len(g.edges) <= 8:
            worst_res = max(worst_res, abs(res - flow_resistance_bruteforce(g)))
        check = witness_equals_half_resistance(g, tols)
        if not check.ok:
            worst_res = math.inf
    return [
        _residual_check("kappa/gap-bound-U", worst_u, 1e-8,
                        "phase gap of U(P, x) is at least 2 sigma_min(A(x))/sigma_max(A)"),
        _residual_check("kappa/gap-bound-Uprime", worst_up, 1e-8,
                        "same bound for U'(P, x) on positive inputs"),
        _residual_check("kappa/graph-singular-values", worst_sigma, 1e-8,
                        "sigma_max(A) = sqrt(2n) and sigma_min(A(x)) = sqrt(2 lambda2)"),
        _residual_check("kappa/resistance-oracles", worst_res, 1e-8,
                        "Laplacian pseudo-inverse vs cycle-space flow minimization, and w+ = R/2"),
    ]


def suite_appendix_b(tols: Tolerances = DEFAULT_TOLS) -> list[Check]:
    """Reflection-factorization identities on the four-register space.

    The minus-one containment is exact.  A plus-one containment of the
    row-space image would require Y and Z to intersect, which they do not for
    n >= 3: the walk rotates the image of (ker A)^perp by
    2 arccos sqrt(n/(2(n-1))).  This suite verifies that rotation phase and
    reports the raw containment defect in the detail string.
    """
    checks: list[Check] = []
    for n in (3, 4, 5):
        fc = verify_reflection_factorization(n, tols)
        checks.append(_residual_check(
            f"appendixB/n{n}/isometries", max(fc.my_isometry_defect, fc.mz_isometry_defect),
            1e-12, "M_Y and M_Z have orthonormal columns"))
        checks.append(_residual_check(
            f"appendixB/n{n}/factorization", fc.factorization_defect, 1e-12,
            "M_Z^T M_Y = A / (2 sqrt(n-1))"))
        checks.append(_residual_check(
            f"appendixB/n{n}/minus-one-containment", fc.minus_one_defect, 1e-10,
            "M_Y maps ker A into the -1-eigenspace of the walk"))
        checks.append(_residual_check(
            f"appendixB/n{n}/row-image-rotation", abs(fc.rotation_phase - fc.predicted_rotation_phase),
            1e-8,
            f"the (ker A)^perp image is rotated by 2 arccos sqrt(n/(2(n-1))), not fixed; "
            f"literal +1-containment defect is {fc.plus_one_defect:.3e}"))
    return checks


SUITES = ("duality", "spectral", "scaling", "szegedy", "kappa", "appendixB")


def run_suite(
    name: str,
    trials: int = 50,
    dims: int = 8,
    seed: int = 0,
    tols: Tolerances = DEFAULT_TOLS,
) -> list[Check]:
    if name == "duality":
        return suite_duality(trials, seed, tols)
    if name == "spectral":
        return suite_spectral(max(1, trials // 4), seed, tols)
    if name == "scaling":
        return suite_scaling(max(1, trials // 4), seed, tols)
    if name == "szegedy":
        return suite_szegedy(trials, dims, seed, tols)
    if name == "kappa":
        return suite_kappa(max(1, trials // 4), seed, tols)
    if name == "appendixB":
        return suite_appendix_b(tols)
    if name == "all":
        out: list[Check] = []
        for sub in SUITES:
            out.extend(run_suite(sub, trials, dims, seed, tols))
        return out
    raise ValueError(f"unknown suite {name!r}")
