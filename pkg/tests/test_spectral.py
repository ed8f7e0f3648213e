"""Phase decompositions, discriminants, and the spectral lemmas.

The independent oracle for phase structure is numpy's complex
eigendecomposition; the library itself decomposes via the real Schur form.
"""

import math

import numpy as np
import pytest

from spanforge.generators import all_inputs, random_projector_pair, random_span_program
from spanforge.spanprog import (
    minimal_witness,
    negative_witness,
    normalize,
    or_span_program,
    positive_witness,
    witness_report,
)
from spanforge.spectral import (
    build_U,
    build_Uprime,
    decompose_orthogonal,
    discriminant,
    kappa_bound,
    kernel_projector,
    phase_gap,
    projector_small_phase,
)


def rotation(theta):
    return np.array([[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]])


def eig_phases_oracle(u_mat):
    """Sorted eigenphases from the complex eigendecomposition."""
    vals = np.linalg.eigvals(u_mat)
    return np.sort(np.angle(vals))


def test_decompose_simple_rotation():
    dec = decompose_orthogonal(rotation(0.3))
    assert phase_gap(dec) == pytest.approx(0.3, abs=1e-12)
    assert dec.phases == pytest.approx([-0.3, 0.3])


def test_decompose_identity_has_no_gap():
    dec = decompose_orthogonal(np.eye(4))
    assert math.isinf(phase_gap(dec))


def test_decompose_matches_eig_oracle():
    rng = np.random.default_rng(42)
    for _ in range(20):
        dim = int(rng.integers(2, 10))
        pi_a, pi_b = random_projector_pair(rng, dim)
        u_mat = (2 * pi_a - np.eye(dim)) @ (2 * pi_b - np.eye(dim))
        dec = decompose_orthogonal(u_mat)
        np.testing.assert_allclose(
            np.array(dec.phases), eig_phases_oracle(u_mat), atol=1e-8
        )
        # projectors resolve the identity
        total = sum(cl.projector() for cl in dec.clusters)
        np.testing.assert_allclose(total, np.eye(dim), atol=1e-10)
        # each complexified eigenvector is a true eigenvector
        for theta, vec in dec.complex_eigenpairs():
            assert np.linalg.norm(u_mat @ vec - np.exp(1j * theta) * vec) <= 1e-8


def test_decompose_rejects_non_orthogonal():
    with pytest.raises(ValueError):
        decompose_orthogonal(np.array([[1.0, 1.0], [0.0, 1.0]]))


def test_build_U_is_orthogonal_and_charges_two_queries():
    program = normalize(or_span_program(4))
    dec = build_U(program, (1, 0, 1, 0))
    u_mat = np.asarray(dec.matrix)
    np.testing.assert_allclose(u_mat.T @ u_mat, np.eye(4), atol=1e-10)
    assert dec.query_cost == 2


def test_build_U_fixes_exact_negative_witness():
    program = normalize(or_span_program(4))
    x = (0, 0, 0, 0)
    row, _ = negative_witness(program, x)
    dec = build_U(program, x)
    vec = np.asarray(row)
    np.testing.assert_allclose(dec.matrix @ vec, vec, atol=1e-10)


def test_build_U_all_zero_input_reduces_to_reflection_product():
    # H(x) = 0 so the second reflection is -I; oracle: direct matrix product
    program = or_span_program(3)
    dec = build_U(program, (0, 0, 0))
    pi_ker = kernel_projector(program)
    expected = (2 * pi_ker - np.eye(3)) @ (-np.eye(3))
    np.testing.assert_allclose(dec.matrix, expected, atol=1e-12)


def test_build_Uprime_fixes_optimal_positive_witness():
    program = normalize(or_span_program(4))
    x = (1, 1, 0, 0)
    vec, _ = positive_witness(program, x)
    dec = build_Uprime(program, x)
    np.testing.assert_allclose(dec.matrix @ np.asarray(vec), np.asarray(vec), atol=1e-10)
    u_mat = np.asarray(dec.matrix)
    np.testing.assert_allclose(u_mat.T @ u_mat, np.eye(4), atol=1e-10)


def test_uprime_factorization_identity_random():
    # U' = U^T (I - 2 w0 w0^T) for normalized programs, on random instances
    for seed in range(6):
        program = normalize(random_span_program(np.random.default_rng([seed, 201])))
        w0 = np.asarray(minimal_witness(program).w0)
        for x in list(all_inputs(program))[:4]:
            u = np.asarray(build_U(program, x).matrix)
            up = np.asarray(build_Uprime(program, x).matrix)
            alt = u.T @ (np.eye(program.dim_h) - 2.0 * np.outer(w0, w0))
            np.testing.assert_allclose(up, alt, atol=1e-10)


def test_small_phase_projector_bounds():
    dec = decompose_orthogonal(rotation(0.3))
    with pytest.raises(ValueError):
        projector_small_phase(dec, math.pi)
    with pytest.raises(ValueError):
        projector_small_phase(dec, -0.1)


def test_small_phase_projector_near_pi_is_identity_minus_pi_space():
    rng = np.random.default_rng(7)
    pi_a, pi_b = random_projector_pair(rng, 6, shared=1, a_only=1)
    u_mat = (2 * pi_a - np.eye(6)) @ (2 * pi_b - np.eye(6))
    dec = decompose_orthogonal(u_mat)
    just_below = math.pi - 1e-6
    proj = projector_small_phase(dec, just_below)
    np.testing.assert_allclose(
        proj, np.eye(6) - dec.minus_one_projector(), atol=1e-10
    )


def test_fixed_space_overlap_identities():
    program = normalize(or_span_program(4))
    w0 = np.asarray(minimal_witness(program).w0)
    # positive input: w0 has no overlap with the fixed space of U
    dec = build_U(program, (1, 1, 0, 0))
    assert float(w0 @ dec.fixed_projector() @ w0) == pytest.approx(0.0, abs=1e-8)
    # negative input: overlap is exactly 1/w-
    dec0 = build_U(program, (0, 0, 0, 0))
    rep = witness_report(program, (0, 0, 0, 0))
    assert float(w0 @ dec0.fixed_projector() @ w0) == pytest.approx(
        1.0 / rep.w_minus, abs=1e-8
    )
    # and for U': overlap is 1/w+
    decp = build_Uprime(program, (1, 1, 0, 0))
    rep1 = witness_report(program, (1, 1, 0, 0))
    assert float(w0 @ decp.fixed_projector() @ w0) == pytest.approx(
        1.0 / rep1.w_plus, abs=1e-8
    )


def test_two_reflection_overlap_lemma_direct():
    # for any u with Pi_A u = 0: ||Pi_Theta Pi_B u|| <= (Theta/2) ||u||
    rng = np.random.default_rng(23)
    for _ in range(10):
        dim = int(rng.integers(3, 9))
        pi_a, pi_b = random_projector_pair(rng, dim)
        u_mat = (2 * pi_a - np.eye(dim)) @ (2 * pi_b - np.eye(dim))
        dec = decompose_orthogonal(u_mat)
        vec = rng.standard_normal(dim)
        vec -= pi_a @ vec
        if np.linalg.norm(vec) < 1e-9:
            continue
        for theta in (0.1, 0.4, 1.0, 1.5):
            lhs = np.linalg.norm(dec.small_phase_projector(theta) @ (pi_b @ vec))
            assert lhs <= theta / 2.0 * np.linalg.norm(vec) + 1e-8


def test_effective_gap_inequalities_random():
    thetas = [0.05 * k for k in range(1, 31)]
    for seed in range(6):
        program = normalize(random_span_program(np.random.default_rng([seed, 202])))
        w0 = np.asarray(minimal_witness(program).w0)
        for x in all_inputs(program):
            rep = witness_report(program, x)
            inv_wm = 0.0 if math.isinf(rep.w_minus) else 1.0 / rep.w_minus
            inv_wp = 0.0 if math.isinf(rep.w_plus) else 1.0 / rep.w_plus
            dec = build_U(program, x)
            decp = build_Uprime(program, x)
            for theta in thetas:
                lhs = float(w0 @ dec.small_phase_projector(theta) @ w0)
                assert lhs <= theta**2 / 4 * rep.w_tilde_plus + inv_wm + 1e-8
                lhs = float(w0 @ decp.small_phase_projector(theta) @ w0)
                assert lhs <= theta**2 / 4 * rep.w_tilde_minus + inv_wp + 1e-8


def test_discriminant_orthogonal_subspaces():
    pi_a = np.diag([1.0, 0.0, 0.0, 0.0])
    pi_b = np.diag([0.0, 1.0, 0.0, 0.0])
    report = discriminant(pi_a, pi_b)
    assert report.sigma_min is None
    assert report.expected_rotation_phases() == []


def test_discriminant_identical_subspaces():
    pi = np.diag([1.0, 1.0, 0.0])
    report = discriminant(pi, pi)
    np.testing.assert_allclose(report.singular_values[:2], [1.0, 1.0], atol=1e-12)
    assert report.sigma_min == pytest.approx(1.0, abs=1e-12)


def test_discriminant_rejects_non_projector():
    with pytest.raises(ValueError):
        discriminant(np.eye(3) * 2.0, np.eye(3))


def test_discriminant_singular_values_in_unit_interval():
    rng = np.random.default_rng(17)
    for _ in range(10):
        dim = int(rng.integers(2, 9))
        pi_a, pi_b = random_projector_pair(rng, dim)
        report = discriminant(pi_a, pi_b)
        assert np.all(report.singular_values <= 1.0 + 1e-10)
        assert np.all(report.singular_values >= -1e-12)
        if report.sigma_min is not None:
            assert report.sigma_min > 1e-10


def test_discriminant_phase_correspondence_random():
    rng = np.random.default_rng(11)
    for _ in range(15):
        dim = int(rng.integers(3, 9))
        pi_a, pi_b = random_projector_pair(rng, dim)
        u_mat = (2 * pi_a - np.eye(dim)) @ (2 * pi_b - np.eye(dim))
        dec = decompose_orthogonal(u_mat)
        report = discriminant(pi_a, pi_b)
        expected = report.expected_rotation_phases(tol=1e-8)
        actual = sorted(
            cl.theta
            for cl in dec.clusters
            if cl.theta not in (0.0, math.pi)
            for _ in range(cl.dim // 2)
        )
        assert len(expected) == len(actual)
        if expected:
            np.testing.assert_allclose(actual, expected, atol=1e-8)


def test_phase_gap_of_negated_product_vs_discriminant():
    rng = np.random.default_rng(13)
    for _ in range(15):
        dim = int(rng.integers(3, 9))
        pi_a, pi_b = random_projector_pair(rng, dim)
        u_mat = (2 * pi_a - np.eye(dim)) @ (2 * pi_b - np.eye(dim))
        report = discriminant(pi_a, pi_b)
        if report.sigma_min is None:
            continue
        gap = decompose_orthogonal(-u_mat).phase_gap()
        assert gap >= 2.0 * report.sigma_min - 1e-8


def test_kappa_bound_complete_graph_is_two():
    from spanforge.resistance import build_st_span_program, graph_input, complete_graph

    g = complete_graph(4)
    program = build_st_span_program(4, 0, 3)
    bound_u, bound_up = kappa_bound(program, graph_input(g))
    assert bound_u == pytest.approx(2.0, rel=1e-10)
    assert bound_up == pytest.approx(2.0, rel=1e-10)


def test_kappa_bound_degenerate_input():
    program = or_span_program(3)
    with pytest.raises(ValueError):
        kappa_bound(program, (0, 0, 0))


def test_kappa_bound_caps_phase_gap_random():
    for seed in range(8):
        program = random_span_program(np.random.default_rng([seed, 203]))
        for x in all_inputs(program):
            try:
                bound, _ = kappa_bound(program, x)
            except ValueError:
                continue
            assert build_U(program, x).phase_gap() >= bound - 1e-8
            _, w_plus = positive_witness(program, x)
            if math.isfinite(w_plus):
                assert build_Uprime(program, x).phase_gap() >= bound - 1e-8
