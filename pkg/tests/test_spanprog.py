"""Witness-quantity computations on the OR program, graph programs, and
random ensembles, cross-checked against the independent KKT oracles."""

import math

import numpy as np
import pytest

from spanforge._linalg import Tolerances
from spanforge.generators import all_inputs, random_span_program
from spanforge.spanprog import (
    GloballyInfeasibleError,
    SpanProgram,
    StructuralError,
    minimal_negative_value,
    minimal_witness,
    min_error_negative,
    min_error_positive,
    negative_witness,
    normalize,
    or_span_program,
    positive_witness,
    scale,
    subspace_projector,
    validate,
    witness_report,
)

from oracles import (
    oracle_min_error_negative,
    oracle_min_error_positive,
    oracle_negative_witness,
)


def test_validate_or_program():
    assert validate(or_span_program(3)).ok


def test_validate_allows_overlapping_symbol_subspaces():
    # H_{j,0} and H_{j,1} share a vector: allowed, only joint spanning matters
    program = SpanProgram(
        n=1, q=2, dim_h=2, dim_v=1,
        input_blocks=((0, 1),), true_block=(), false_block=(),
        subspaces={(0, 0): np.array([[1.0], [0.0]]),
                   (0, 1): np.array([[1.0, 0.0], [0.0, 1.0]])},
        a_mat=np.array([[1.0, 1.0]]), tau=np.array([1.0]),
    )
    assert validate(program).ok


def test_validate_reports_non_spanning_subspaces():
    program = SpanProgram(
        n=1, q=2, dim_h=2, dim_v=1,
        input_blocks=((0, 1),), true_block=(), false_block=(),
        subspaces={(0, 0): np.array([[1.0], [0.0]]),
                   (0, 1): np.array([[1.0], [0.0]])},
        a_mat=np.array([[1.0, 1.0]]), tau=np.array([1.0]),
    )
    report = validate(program)
    assert not report.ok
    assert any("span" in f for f in report.failures())


def test_wrong_a_shape_is_structural_error():
    with pytest.raises(StructuralError):
        SpanProgram(
            n=1, q=2, dim_h=1, dim_v=1,
            input_blocks=((0,),), true_block=(), false_block=(),
            subspaces={(0, 1): np.array([[1.0]])},
            a_mat=np.ones((1, 2)),  # dim_h + 1 columns
            tau=np.array([1.0]),
        )


def test_subspace_projector_or_examples():
    program = or_span_program(3)
    proj = subspace_projector(program, (1, 0, 1))
    np.testing.assert_allclose(proj, np.diag([1.0, 0.0, 1.0]), atol=1e-12)
    np.testing.assert_allclose(
        subspace_projector(program, (0, 0, 0)), np.zeros((3, 3)), atol=1e-12
    )


def test_subspace_projector_true_false_blocks():
    # H_true coordinates always selected, H_false never, independent of x
    program = SpanProgram(
        n=1, q=2, dim_h=3, dim_v=1,
        input_blocks=((0,),), true_block=(1,), false_block=(2,),
        subspaces={(0, 0): np.zeros((1, 0)), (0, 1): np.array([[1.0]])},
        a_mat=np.array([[1.0, 1.0, 1.0]]), tau=np.array([1.0]),
    )
    for x, want in [((0,), [0.0, 1.0, 0.0]), ((1,), [1.0, 1.0, 0.0])]:
        np.testing.assert_allclose(
            subspace_projector(program, x), np.diag(want), atol=1e-12
        )


def test_input_validation():
    program = or_span_program(3)
    with pytest.raises(StructuralError):
        subspace_projector(program, (1, 0))  # wrong length
    with pytest.raises(StructuralError):
        subspace_projector(program, (1, 0, 2))  # symbol out of range


def test_minimal_witness_or():
    program = or_span_program(5)
    mw = minimal_witness(program)
    np.testing.assert_allclose(np.asarray(mw.w0), np.full(5, 0.2), atol=1e-12)
    assert mw.n_plus == pytest.approx(0.2, abs=1e-12)
    assert mw.n_plus * mw.n_minus == pytest.approx(1.0, abs=1e-12)


def test_minimal_witness_globally_infeasible():
    # tau outside col(A): A maps onto the first coordinate only
    program = SpanProgram(
        n=1, q=2, dim_h=1, dim_v=2,
        input_blocks=((0,),), true_block=(), false_block=(),
        subspaces={(0, 0): np.zeros((1, 0)), (0, 1): np.array([[1.0]])},
        a_mat=np.array([[1.0], [0.0]]), tau=np.array([0.0, 1.0]),
    )
    with pytest.raises(GloballyInfeasibleError):
        minimal_witness(program)


def test_positive_witness_or():
    program = or_span_program(3)
    vec, w_plus = positive_witness(program, (1, 1, 0))
    assert w_plus == pytest.approx(0.5, rel=1e-12)
    np.testing.assert_allclose(np.asarray(vec), [0.5, 0.5, 0.0], atol=1e-12)
    # witness lies in H(x) and satisfies A w = tau exactly
    np.testing.assert_allclose(program.a_mat @ vec, program.tau, atol=1e-10)


def test_positive_witness_infeasible_is_inf():
    program = or_span_program(3)
    vec, w_plus = positive_witness(program, (0, 0, 0))
    assert vec is None and math.isinf(w_plus)


def test_negative_witness_or_all_zero():
    # frozen from the KKT oracle: w_- = n, omega A = the all-ones row
    program = or_span_program(4)
    row, w_minus = negative_witness(program, (0, 0, 0, 0))
    assert w_minus == pytest.approx(4.0, rel=1e-10)
    np.testing.assert_allclose(np.asarray(row), np.ones(4), atol=1e-10)


def test_negative_witness_positive_input_is_inf():
    program = or_span_program(4)
    row, w_minus = negative_witness(program, (0, 1, 0, 0))
    assert row is None and math.isinf(w_minus)


def test_min_error_positive_or_zero_string():
    # frozen from the KKT oracle: e_+ = 1/4 and the min-error witness is w0
    program = or_span_program(4)
    vec, e_plus, w_tilde = min_error_positive(program, (0, 0, 0, 0))
    assert e_plus == pytest.approx(0.25, rel=1e-10)
    assert w_tilde == pytest.approx(0.25, rel=1e-10)
    _, w_minus = negative_witness(program, (0, 0, 0, 0))
    assert w_minus * e_plus == pytest.approx(1.0, rel=1e-10)


def test_min_error_positive_on_positive_input_reduces_to_witness():
    program = or_span_program(4)
    vec, e_plus, w_tilde = min_error_positive(program, (1, 0, 1, 0))
    assert e_plus == pytest.approx(0.0, abs=1e-12)
    assert w_tilde == pytest.approx(0.5, rel=1e-10)


def test_min_error_negative_or():
    # frozen from the KKT oracle: e_- = |x| = 2, w_tilde_- = n = 4
    program = or_span_program(4)
    row, e_minus, w_tilde = min_error_negative(program, (1, 1, 0, 0))
    assert e_minus == pytest.approx(2.0, rel=1e-10)
    assert w_tilde == pytest.approx(4.0, rel=1e-10)
    _, w_plus = positive_witness(program, (1, 1, 0, 0))
    assert w_plus * e_minus == pytest.approx(1.0, rel=1e-10)


def test_min_error_negative_on_negative_input_reduces_to_witness():
    program = or_span_program(4)
    row, e_minus, w_tilde = min_error_negative(program, (0, 0, 0, 0))
    assert e_minus == pytest.approx(0.0, abs=1e-12)
    assert w_tilde == pytest.approx(4.0, rel=1e-10)


def test_min_error_negative_rejects_zero_target():
    program = SpanProgram(
        n=1, q=2, dim_h=1, dim_v=1,
        input_blocks=((0,),), true_block=(), false_block=(),
        subspaces={(0, 0): np.zeros((1, 0)), (0, 1): np.array([[1.0]])},
        a_mat=np.array([[1.0]]), tau=np.array([0.0]),
    )
    with pytest.raises(StructuralError):
        min_error_negative(program, (1,))


@pytest.mark.parametrize("seed", range(25))
def test_witness_quantities_match_kkt_oracles(seed):
    rng = np.random.default_rng([seed, 101])
    program = random_span_program(rng)
    for x in all_inputs(program):
        rep = witness_report(program, x)
        assert math.isinf(rep.w_plus) != math.isinf(rep.w_minus)
        e_plus, w_tilde_plus = oracle_min_error_positive(program, x)
        assert rep.e_plus == pytest.approx(e_plus, rel=1e-7, abs=1e-9)
        assert rep.w_tilde_plus == pytest.approx(w_tilde_plus, rel=1e-7, abs=1e-9)
        e_minus, w_tilde_minus = oracle_min_error_negative(program, x)
        assert rep.e_minus == pytest.approx(e_minus, rel=1e-7, abs=1e-9)
        assert rep.w_tilde_minus == pytest.approx(w_tilde_minus, rel=1e-7, abs=1e-9)
        w_minus = oracle_negative_witness(program, x)
        if math.isinf(w_minus):
            assert math.isinf(rep.w_minus)
        else:
            assert rep.w_minus == pytest.approx(w_minus, rel=1e-7, abs=1e-9)


@pytest.mark.parametrize("seed", range(10))
def test_duality_products_random(seed):
    rng = np.random.default_rng([seed, 102])
    program = random_span_program(rng)
    for x in all_inputs(program):
        rep = witness_report(program, x)
        if math.isfinite(rep.w_minus):
            assert abs(rep.w_minus * rep.e_plus - 1.0) <= 1e-8 * rep.w_minus
        else:
            assert abs(rep.w_plus * rep.e_minus - 1.0) <= 1e-8 * rep.w_plus


@pytest.mark.parametrize("seed", range(8))
def test_positive_witness_feasibility_residuals(seed):
    # the returned witness lies in H(x) and satisfies A w = tau coordinatewise
    rng = np.random.default_rng([seed, 105])
    program = random_span_program(rng)
    for x in all_inputs(program):
        vec, w_plus = positive_witness(program, x)
        if math.isinf(w_plus):
            continue
        proj = subspace_projector(program, x)
        assert np.max(np.abs(program.a_mat @ vec - program.tau)) <= 1e-10
        assert np.max(np.abs(vec - proj @ vec)) <= 1e-10


def test_global_minimal_negative_witness_identities():
    for seed in range(10):
        program = random_span_program(np.random.default_rng([seed, 103]))
        mw = minimal_witness(program)
        row, n_minus = minimal_negative_value(program)
        assert mw.n_plus * n_minus == pytest.approx(1.0, abs=1e-8)
        np.testing.assert_allclose(
            np.asarray(row), np.asarray(mw.w0) / mw.n_plus, atol=1e-8
        )


def test_normalize_or():
    program = or_span_program(4)
    normalized = normalize(program)
    assert minimal_witness(normalized).n_plus == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(normalized.tau, [2.0], atol=1e-12)  # tau / sqrt(1/4)
    # positive witness sizes scale by 1/N+
    _, w_before = positive_witness(program, (1, 0, 0, 0))
    _, w_after = positive_witness(normalized, (1, 0, 0, 0))
    assert w_after == pytest.approx(w_before / minimal_witness(program).n_plus, rel=1e-10)


def test_normalize_idempotent():
    program = normalize(or_span_program(5))
    again = normalize(program)
    np.testing.assert_allclose(again.tau, program.tau, atol=1e-12)


def test_scale_witness_relations():
    program = or_span_program(4)
    n_plus = minimal_witness(program).n_plus
    for beta in (0.25, 1.0, 4.0):
        scaled = scale(program, beta)
        mw = minimal_witness(scaled)
        assert mw.n_plus == pytest.approx(1.0, abs=1e-10)
        # fresh coordinates sit at the end: h0 then h1
        w0 = np.asarray(mw.w0)
        assert w0[program.dim_h] == pytest.approx(n_plus / (beta**2 + n_plus), rel=1e-10)
        assert w0[program.dim_h + 1] == pytest.approx(
            beta / math.sqrt(beta**2 + n_plus), rel=1e-10
        )
        _, w_minus = negative_witness(scaled, (0, 0, 0, 0))
        assert w_minus == pytest.approx(beta**2 * 4.0 + 1.0, rel=1e-8)
        _, w_plus = positive_witness(scaled, (1, 1, 0, 0))
        expect = 0.5 / beta**2 + beta**2 / (n_plus + beta**2)
        assert w_plus == pytest.approx(expect, rel=1e-8)


def test_scale_rejects_nonpositive_beta():
    with pytest.raises(ValueError):
        scale(or_span_program(2), 0.0)


def test_scale_min_error_inequalities_random():
    for seed in range(8):
        program = random_span_program(np.random.default_rng([seed, 104]))
        for beta in (0.25, 1.0, 4.0):
            scaled = scale(program, beta)
            for x in all_inputs(program):
                rep = witness_report(program, x)
                rep_s = witness_report(scaled, x)
                if math.isfinite(rep.w_minus):
                    assert rep_s.w_tilde_plus <= rep.w_tilde_plus / beta**2 + 2.0 + 1e-8
                else:
                    assert rep_s.w_tilde_minus <= beta**2 * rep.w_tilde_minus + 2.0 + 1e-8


def test_tolerance_override_changes_feasibility_cut():
    # a slightly perturbed target is accepted only under a loose tolerance
    program = or_span_program(3)
    perturbed = SpanProgram(
        n=3, q=2, dim_h=3, dim_v=2,
        input_blocks=program.input_blocks, true_block=(), false_block=(),
        subspaces=dict(program.subspaces),
        a_mat=np.vstack([np.ones(3), np.zeros(3)]),
        tau=np.array([1.0, 1e-6]),
    )
    _, w_strict = positive_witness(perturbed, (1, 1, 1))
    assert math.isinf(w_strict)
    loose = Tolerances(rank_rtol=1e-10, membership_rtol=1e-2)
    _, w_loose = positive_witness(perturbed, (1, 1, 1), tols=loose)
    assert math.isfinite(w_loose)
