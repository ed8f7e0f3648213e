"""Composite decision and estimation algorithms driven by phase estimation.

decide_threshold distinguishes small witness size from large with a
multiplicative gap lambda, by scaling the program, phase-estimating the
appropriate reflection product on the minimal witness, and running the
amplitude-gap primitive on the exact outcome-zero probability.

witness_estimate shrinks an interval around 1/w(x) by repeated threshold
decisions; gap_estimate and kappa_estimate trade the interval search for a
known phase-gap lower bound and a single amplitude estimation per precision
level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ._linalg import DEFAULT_TOLS, Tolerances
from .qsim import (
    QueryLedger,
    ae_outcome_distribution,
    ae_estimates,
    amp_gap_grid_size,
    amp_gap_threshold,
    amplitude_gap_decide,
    amplitude_gap_success_probability,
    outcome_zero_probability,
    pe_grid_size,
    pe_queries,
)
from .spanprog import (
    SpanProgram,
    GloballyInfeasibleError,
    minimal_witness,
    negative_witness,
    min_error_negative,
    min_error_positive,
    normalize,
    positive_witness,
    scale,
)
from .spectral import build_U, build_Uprime

POSITIVE = "positive"
NEGATIVE = "negative"

# Success floor used when amplifying a single threshold decision by majority
# vote; the amplitude-gap primitive actually succeeds with probability >= 3/4.
DECIDE_SUCCESS_FLOOR = 2.0 / 3.0

# A single amplitude estimation lands within the BHMT error bound with
# probability >= 8/pi^2; used when amplifying by median.
AE_SUCCESS_FLOOR = 8.0 / math.pi**2


@dataclass(frozen=True)
class ThresholdSpec:
    """Parameters of one threshold decision.

    side selects which witness size is thresholded; w_bound is the size bound
    for "small" inputs; inputs are promised either <= w_bound or
    >= w_bound / lam.  w_tilde_bound bounds the opposite-sign min-error
    witness size over the domain.
    """

    side: str
    lam: float
    w_bound: float
    w_tilde_bound: float

    def __post_init__(self):
        if self.side not in (POSITIVE, NEGATIVE):
            raise ValueError("side must be 'positive' or 'negative'")
        if not 0.0 < self.lam < 1.0:
            raise ValueError("lambda must lie in (0, 1)")
        if not (math.isfinite(self.w_bound) and self.w_bound > 0):
            raise ValueError("witness bound must be finite and positive")
        if not (math.isfinite(self.w_tilde_bound) and self.w_tilde_bound > 0):
            raise ValueError("min-error witness bound must be finite and positive")


@dataclass(frozen=True)
class EstimateResult:
    value: float
    epsilon: float
    queries: int
    rounds: int
    flags: tuple[str, ...] = ()


@dataclass(frozen=True)
class _DecisionContext:
    """Input-independent data for one threshold decision, reusable across
    repetitions: exact outcome-zero probability and gap parameters."""

    p_exact: float
    p0: float
    p1: float
    pe_grid: int
    flags: tuple[str, ...]


def _clamp01(value: float, name: str, flags: list[str]) -> float:
    if 0.0 < value < 1.0:
        return value
    flags.append(f"clamped:{name}={value!r}")
    return min(1.0 - 1e-12, max(1e-12, value))


def _scaled_parameters(
    program: SpanProgram, spec: ThresholdSpec, tols: Tolerances
) -> tuple[float, float, float, float]:
    """(beta, W, W_tilde, lam) for the scaled program.

    Negative side: beta = 1/sqrt(W-) gives W = 2 exactly and
    lam' = 2 lam/(1+lam).  Positive side mirrors it with beta = sqrt(W+),
    where the additive witness shift is c = beta^2/(N + beta^2).
    """
    n_val = minimal_witness(program, tols).n_plus
    if spec.side == NEGATIVE:
        beta = 1.0 / math.sqrt(spec.w_bound)
        w_new = 2.0
        lam_new = 2.0 * spec.lam / (1.0 + spec.lam)
        wt_new = spec.w_bound * spec.w_tilde_bound + 2.0
    else:
        beta = math.sqrt(spec.w_bound)
        shift = beta * beta / (n_val + beta * beta)
        w_new = 1.0 + shift
        lam_new = w_new / (1.0 / spec.lam + shift)
        wt_new = spec.w_bound * spec.w_tilde_bound + 2.0
    return beta, w_new, wt_new, lam_new


def decision_context(
    program: SpanProgram,
    x: Sequence[int],
    spec: ThresholdSpec,
    tols: Tolerances = DEFAULT_TOLS,
) -> _DecisionContext:
    """Build the scaled program, decompose the right unitary, and evaluate the
    exact probability of measuring outcome 0 after phase estimation."""
    flags: list[str] = []
    beta, w_new, wt_new, lam_new = _scaled_parameters(program, spec, tols)
    scaled = scale(program, beta, tols)

    theta = math.sqrt(4.0 * (1.0 - lam_new) / (3.0 * w_new * wt_new))
    eps_pe = _clamp01((1.0 - lam_new) / (6.0 * w_new), "eps_pe", flags)
    p0 = _clamp01(1.0 / w_new, "p0", flags)
    p1 = _clamp01(
        (1.0 + 2.0 * lam_new) / (3.0 * w_new) + (1.0 - lam_new) / (6.0 * w_new), "p1", flags
    )

    if spec.side == NEGATIVE:
        dec = build_U(scaled, x, tols)
    else:
        dec = build_Uprime(scaled, x, tols)
    w0 = minimal_witness(scaled, tols).w0  # unit norm by the scaling construction

    grid = pe_grid_size(theta, eps_pe)
    p_exact = outcome_zero_probability(dec, w0, grid)
    return _DecisionContext(
        p_exact=p_exact, p0=p0, p1=p1, pe_grid=grid, flags=tuple(flags)
    )


def decide_threshold(
    program: SpanProgram,
    x: Sequence[int],
    spec: ThresholdSpec,
    rng: np.random.Generator,
    ledger: QueryLedger,
    tols: Tolerances = DEFAULT_TOLS,
    cache: Optional[dict] = None,
) -> int:
    """Return 1 when the chosen witness size of x is small (<= spec.w_bound),
    0 when it is large (>= spec.w_bound / spec.lam); correct with probability
    >= 2/3 under that promise, arbitrary in the gap.

    cache, when given, memoizes the per-spec decision context so repeated
    decisions on the same (program, x) resample only the amplitude estimate.
    """
    key = (spec.side, spec.lam, spec.w_bound, spec.w_tilde_bound)
    if cache is not None and key in cache:
        ctx = cache[key]
    else:
        ctx = decision_context(program, x, spec, tols)
        if cache is not None:
            cache[key] = ctx
    return amplitude_gap_decide(
        ctx.p_exact,
        ctx.p0,
        ctx.p1,
        rng,
        ledger,
        query_cost_per_call=pe_queries(ctx.pe_grid),
    )


def decide_threshold_success_probability(
    program: SpanProgram,
    x: Sequence[int],
    spec: ThresholdSpec,
    tols: Tolerances = DEFAULT_TOLS,
) -> Optional[float]:
    """Exact probability that decide_threshold answers correctly on x,
    computed by outcome-distribution summation.  None when x falls in the
    promise gap (any answer is then acceptable)."""
    ctx = decision_context(program, x, spec, tols)
    if spec.side == POSITIVE:
        _, w_val = positive_witness(program, x, tols)
    else:
        _, w_val = negative_witness(program, x, tols)
    if w_val <= spec.w_bound * (1.0 + 1e-12):
        truth_high = True
    elif w_val >= spec.w_bound / spec.lam * (1.0 - 1e-12):
        truth_high = False
    else:
        return None
    return amplitude_gap_success_probability(ctx.p_exact, ctx.p0, ctx.p1, truth_high)


def majority_reps(err_budget: float, base_success: float = DECIDE_SUCCESS_FLOOR) -> int:
    """Smallest odd repetition count whose majority vote has error at most
    err_budget, by the Hoeffding bound exp(-2 k (base - 1/2)^2)."""
    margin = base_success - 0.5
    k = max(1, math.ceil(math.log(1.0 / err_budget) / (2.0 * margin * margin)))
    return k if k % 2 == 1 else k + 1


def _threshold_votes(
    program: SpanProgram,
    x: Sequence[int],
    spec: ThresholdSpec,
    reps: int,
    rng: np.random.Generator,
    ledger: QueryLedger,
    tols: Tolerances,
    cache: Optional[dict],
    flags: Optional[list[str]] = None,
) -> int:
    """Number of 1-votes among reps independent threshold decisions, sampled
    from one cached outcome distribution (equivalent to reps decide_threshold
    calls, charged identically)."""
    key = (spec.side, spec.lam, spec.w_bound, spec.w_tilde_bound, "votes")
    if cache is not None and key in cache:
        ctx, grid_ae, dist, high_mask = cache[key]
    else:
        ctx = decision_context(program, x, spec, tols)
        grid_ae = amp_gap_grid_size(ctx.p0, ctx.p1)
        dist = ae_outcome_distribution(ctx.p_exact, grid_ae)
        dist = dist / dist.sum()
        high_mask = ae_estimates(grid_ae) >= amp_gap_threshold(ctx.p0, ctx.p1)
        if cache is not None:
            cache[key] = (ctx, grid_ae, dist, high_mask)
    if flags is not None:
        for flag in ctx.flags:
            if flag not in flags:
                flags.append(flag)
    outcomes = rng.choice(grid_ae, size=reps, p=dist)
    ledger.charge(reps * grid_ae * pe_queries(ctx.pe_grid))
    return int(np.sum(high_mask[outcomes]))


def _assert_normalized(program: SpanProgram, tols: Tolerances) -> None:
    n_plus = minimal_witness(program, tols).n_plus
    if abs(n_plus - 1.0) > 1e-8:
        raise ValueError(f"program must be normalized (N+ = {n_plus!r}); call normalize() first")


def interval_probes(e_max: float, e_min: float) -> tuple[float, float]:
    """Third-point probes (e1, e0) of the current reciprocal interval."""
    return (
        (2.0 / 3.0) * e_max + (1.0 / 3.0) * e_min,
        (1.0 / 3.0) * e_max + (2.0 / 3.0) * e_min,
    )


def interval_update(e_max: float, e_min: float, decided_small: bool) -> tuple[float, float]:
    """Shrink the interval by 2/3: a "small witness" answer raises the floor
    to e0, the opposite answer lowers the ceiling to e1."""
    e1, e0 = interval_probes(e_max, e_min)
    return (e_max, e0) if decided_small else (e1, e_min)


def witness_estimate(
    program: SpanProgram,
    x: Sequence[int],
    eps: float,
    side: str,
    rng: np.random.Generator,
    ledger: QueryLedger,
    tols: Tolerances = DEFAULT_TOLS,
    w_tilde_bound: Optional[float] = None,
    cache: Optional[dict] = None,
    max_rounds: Optional[int] = None,
) -> EstimateResult:
    """Estimate w_side(x) of a normalized program to relative accuracy eps.

    Runs the interval-shrinking loop: the reciprocal 1/w(x) starts inside
    [0, 1]; each round a threshold decision at the upper third probe e1 with
    gap lambda = e0/e1 shrinks the interval by a factor 2/3, and the round-i
    decision is amplified to error at most (1/9)(2/3)^(i-1).  Terminates when
    e_max <= (1+eps) e_min and returns the reciprocal of the midpoint.

    w_tilde_bound may pass a domain-wide bound on the opposite-sign min-error
    witness size; by default the exact value for this x is used.
    """
    if side not in (POSITIVE, NEGATIVE):
        raise ValueError("side must be 'positive' or 'negative'")
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")

    if cache is not None and ("entry", side, w_tilde_bound) in cache:
        w_true, w_tilde_bound = cache[("entry", side, w_tilde_bound)]
    else:
        _assert_normalized(program, tols)
        key = ("entry", side, w_tilde_bound)
        if side == POSITIVE:
            _, w_true = positive_witness(program, x, tols)
            if math.isinf(w_true):
                raise GloballyInfeasibleError("x has no positive witness; cannot estimate w_+")
            if w_tilde_bound is None:
                _, _, w_tilde_bound = min_error_negative(program, x, tols)
        else:
            _, w_true = negative_witness(program, x, tols)
            if math.isinf(w_true):
                raise GloballyInfeasibleError("x has no negative witness; cannot estimate w_-")
            if w_tilde_bound is None:
                _, _, w_tilde_bound = min_error_positive(program, x, tols)
        if cache is not None:
            cache[key] = (w_true, w_tilde_bound)

    start_queries = ledger.total
    flags: list[str] = []
    e_max, e_min = 1.0, 0.0
    if max_rounds is None:
        max_rounds = math.ceil(math.log(w_true / eps, 1.5) + 1.0) + 60

    rounds = 0
    while True:
        rounds += 1
        if rounds > max_rounds:
            raise RuntimeError("witness_estimate failed to terminate (simulation anomaly)")
        e1, e0 = interval_probes(e_max, e_min)
        spec = ThresholdSpec(
            side=side, lam=e0 / e1, w_bound=1.0 / e1, w_tilde_bound=w_tilde_bound
        )
        reps = majority_reps((1.0 / 9.0) * (2.0 / 3.0) ** (rounds - 1))
        votes = _threshold_votes(program, x, spec, reps, rng, ledger, tols, cache, flags)
        e_max, e_min = interval_update(e_max, e_min, 2 * votes > reps)
        if e_max <= (1.0 + eps) * e_min:
            break

    e_tilde = 0.5 * (e_max + e_min)
    return EstimateResult(
        value=1.0 / e_tilde,
        epsilon=eps,
        queries=ledger.total - start_queries,
        rounds=rounds,
        flags=tuple(flags),
    )


def median_reps(err_budget: float, base_success: float = AE_SUCCESS_FLOOR) -> int:
    """Smallest odd repetition count whose median estimate violates the
    single-run error bound with probability at most err_budget."""
    margin = base_success - 0.5
    k = max(1, math.ceil(math.log(1.0 / err_budget) / (2.0 * margin * margin)))
    return k if k % 2 == 1 else k + 1


def _ae_grid_for_stage(eps: float, scale_floor: float) -> int:
    """Grid size guaranteeing |p_tilde - p| <= (eps/4) p for every p >=
    scale_floor (and <= (eps/4) scale_floor below it): M = ceil((pi/sqrt(floor))
    (8/eps + 1)) makes 2 pi sqrt(p)/M + pi^2/M^2 <= (eps/4) max(p, floor)."""
    return math.ceil(math.pi / math.sqrt(scale_floor) * (8.0 / eps + 1.0))


def _ae_sampler(p: float, grid_size: int) -> tuple[np.ndarray, np.ndarray]:
    dist = ae_outcome_distribution(p, grid_size)
    return dist / dist.sum(), ae_estimates(grid_size)


def _sample_ae_median(
    sampler: tuple[np.ndarray, np.ndarray],
    reps: int,
    rng: np.random.Generator,
    ledger: QueryLedger,
    queries_per_rep: int,
) -> float:
    dist, estimates = sampler
    outcomes = rng.choice(dist.size, size=reps, p=dist)
    ledger.charge(reps * queries_per_rep)
    return float(np.median(estimates[outcomes]))


def gap_estimate(
    program: SpanProgram,
    x: Sequence[int],
    eps: float,
    delta_lb: float,
    side: str,
    rng: np.random.Generator,
    ledger: QueryLedger,
    tols: Tolerances = DEFAULT_TOLS,
    cache: Optional[dict] = None,
) -> EstimateResult:
    """Estimate w_side(x) of a normalized program given a lower bound delta_lb
    on the phase gap of the relevant unitary at x.

    Phase estimation always runs at precision delta_lb; its error parameter
    starts at 1/2 and halves until the amplitude estimate of the outcome-zero
    probability exceeds 2(1 + eps/4) times it, at which point one final run at
    error (eps/8) times the current level yields the returned 1/p_tilde.
    """
    if side not in (POSITIVE, NEGATIVE):
        raise ValueError("side must be 'positive' or 'negative'")
    if delta_lb <= 0.0:
        raise ValueError("phase-gap lower bound must be positive")
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    _assert_normalized(program, tols)

    cache = cache if cache is not None else {}
    if ("unitary", side) in cache:
        dec, w0, w_true = cache[("unitary", side)]
    else:
        if side == POSITIVE:
            _, w_true = positive_witness(program, x, tols)
            if math.isinf(w_true):
                raise GloballyInfeasibleError("x has no positive witness; cannot estimate w_+")
            dec = build_Uprime(program, x, tols)
        else:
            _, w_true = negative_witness(program, x, tols)
            if math.isinf(w_true):
                raise GloballyInfeasibleError("x has no negative witness; cannot estimate w_-")
            dec = build_U(program, x, tols)
        w0 = minimal_witness(program, tols).w0
        cache[("unitary", side)] = (dec, w0, w_true)

    start_queries = ledger.total
    flags: list[str] = []
    eps_hat = 0.5
    stage = 0
    while True:
        if stage > 200:
            raise RuntimeError("gap_estimate failed to terminate (simulation anomaly)")
        key = ("stage", eps, eps_hat)
        if key in cache:
            grid_pe, grid_ae, sampler = cache[key]
        else:
            grid_pe = pe_grid_size(delta_lb, eps_hat)
            grid_ae = _ae_grid_for_stage(eps, eps_hat)
            sampler = _ae_sampler(outcome_zero_probability(dec, w0, grid_pe), grid_ae)
            cache[key] = (grid_pe, grid_ae, sampler)
        reps = median_reps((1.0 / 6.0) * 0.5 ** (stage + 1))
        p_tilde = _sample_ae_median(
            sampler, reps, rng, ledger, grid_ae * pe_queries(grid_pe)
        )
        if p_tilde > 2.0 * (1.0 + eps / 4.0) * eps_hat:
            key_fin = ("final", eps, eps_hat)
            if key_fin in cache:
                grid_pe2, sampler_fin = cache[key_fin]
            else:
                grid_pe2 = pe_grid_size(delta_lb, (eps / 8.0) * eps_hat)
                sampler_fin = _ae_sampler(
                    outcome_zero_probability(dec, w0, grid_pe2), grid_ae
                )
                cache[key_fin] = (grid_pe2, sampler_fin)
            reps_fin = median_reps(1.0 / 6.0)
            p_final = _sample_ae_median(
                sampler_fin, reps_fin, rng, ledger, grid_ae * pe_queries(grid_pe2)
            )
            if p_final <= 0.0:
                flags.append("degenerate:zero-amplitude-estimate")
                value = math.inf
            else:
                value = 1.0 / p_final
            return EstimateResult(
                value=value,
                epsilon=eps,
                queries=ledger.total - start_queries,
                rounds=stage + 1,
                flags=tuple(flags),
            )
        eps_hat *= 0.5
        stage += 1


def kappa_estimate(
    program: SpanProgram,
    x: Sequence[int],
    eps: float,
    kappa: float,
    side: str,
    rng: np.random.Generator,
    ledger: QueryLedger,
    tols: Tolerances = DEFAULT_TOLS,
    cache: Optional[dict] = None,
) -> EstimateResult:
    """Estimate w_side(x) of an arbitrary program given
    kappa >= sigma_max(A)/sigma_min(A(x)).

    Rescales the target to tau/sqrt(N), runs gap_estimate with phase-gap bound
    2/kappa (valid for both unitaries of the rescaled program, whose A is
    unchanged), and converts the result back: positive sizes scaled by N,
    negative by 1/N.
    """
    if kappa < 1.0:
        raise ValueError("kappa is at least 1 (it bounds sigma_max/sigma_min)")
    n_val = minimal_witness(program, tols).n_plus
    rescaled = normalize(program, tols)
    result = gap_estimate(rescaled, x, eps, 2.0 / kappa, side, rng, ledger, tols, cache)
    value = result.value * n_val if side == POSITIVE else result.value / n_val
    return EstimateResult(
        value=value,
        epsilon=eps,
        queries=result.queries,
        rounds=result.rounds,
        flags=result.flags,
    )
