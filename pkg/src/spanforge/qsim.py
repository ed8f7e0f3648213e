"""Query-counting classical simulation of phase and amplitude estimation.

Outcome distributions are computed analytically (Fejer kernel on an M-point
grid), so every probabilistic guarantee can be checked by summation; sampling
only happens when an algorithm draws an outcome.  Query accounting follows the
two-queries-per-application rule for the span program unitaries: one run of
M-point phase estimation applies the unitary M-1 times and is charged
2*(M-1) input queries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spectral import UnitaryDecomposition


@dataclass
class QueryLedger:
    """Running count of simulated input-oracle queries (monotone)."""

    total: int = 0

    def charge(self, queries: int) -> None:
        if queries < 0:
            raise ValueError("query charges must be non-negative")
        self.total += int(queries)


@dataclass(frozen=True)
class PhaseEstimationOutcome:
    grid_size: int
    distribution: np.ndarray
    outcome: int
    queries_charged: int
    theta: float
    eps: float


@dataclass(frozen=True)
class AmplitudeEstimate:
    grid_size: int
    outcome: int
    p_tilde: float
    success_bound: float  # exact probability that |p_tilde - p| <= BHMT bound
    distribution: np.ndarray


def fejer_kernel(delta, grid_size: int):
    """Probability that M-point phase estimation of an eigenphase offset by
    delta from a grid point reports that grid point:
    |1/M sum_l e^{i l delta}|^2 = (sin(M delta/2) / (M sin(delta/2)))^2."""
    delta = np.mod(np.asarray(delta, dtype=float) + math.pi, 2.0 * math.pi) - math.pi
    half = delta / (2.0 * math.pi)
    ratio = np.sinc(grid_size * half) / np.sinc(half)
    return np.square(ratio)


def pe_grid_size(theta: float, eps: float) -> int:
    """Power-of-two grid size meeting the phase-estimation contract: phases of
    magnitude >= theta leak at most eps onto outcome 0.  Uses the kernel bound
    F_M(delta) <= pi^2/(M delta)^2, so M >= pi/(theta sqrt(eps)) suffices."""
    if not 0.0 < theta < math.pi:
        raise ValueError("precision theta must lie in (0, pi)")
    if not 0.0 < eps < 1.0:
        raise ValueError("error eps must lie in (0, 1)")
    return int(2 ** max(1, math.ceil(math.log2(math.pi / (theta * math.sqrt(eps))))))


def pe_queries(grid_size: int, query_cost: int = 2) -> int:
    """Input queries for one phase-estimation run: M-1 controlled applications."""
    return query_cost * (grid_size - 1)


def _phase_weights(dec: UnitaryDecomposition, state: np.ndarray) -> list[tuple[float, float]]:
    """(unsigned phase, squared overlap) per cluster; overlaps sum to ||state||^2."""
    out = []
    for cl in dec.clusters:
        comp = cl.basis.T @ state
        w = float(comp @ comp)
        if w > 0.0:
            out.append((cl.theta, w))
    return out


def pe_outcome_distribution(
    dec: UnitaryDecomposition, state: np.ndarray, grid_size: int
) -> np.ndarray:
    """Exact outcome distribution of M-point phase estimation applied to state.

    For a real orthogonal unitary and a real state, the +theta and -theta
    components carry equal weight, so each cluster contributes the symmetrized
    kernel.
    """
    state = np.asarray(state, dtype=float)
    if abs(np.linalg.norm(state) - 1.0) > 1e-8:
        raise ValueError("phase estimation expects a unit initial state")
    grid = 2.0 * math.pi * np.arange(grid_size) / grid_size
    dist = np.zeros(grid_size)
    for theta, weight in _phase_weights(dec, state):
        if theta == 0.0 or theta == math.pi:
            dist += weight * fejer_kernel(theta - grid, grid_size)
        else:
            dist += weight * 0.5 * (
                fejer_kernel(theta - grid, grid_size) + fejer_kernel(-theta - grid, grid_size)
            )
    return dist


def outcome_zero_probability(
    dec: UnitaryDecomposition, state: np.ndarray, grid_size: int
) -> float:
    """P(outcome 0) without building the whole distribution (the kernel is even)."""
    state = np.asarray(state, dtype=float)
    total = float(
        sum(w * fejer_kernel(theta, grid_size) for theta, w in _phase_weights(dec, state))
    )
    return min(1.0, max(0.0, total))


def phase_estimation(
    dec: UnitaryDecomposition,
    state: np.ndarray,
    theta: float,
    eps: float,
    rng: np.random.Generator,
    ledger: QueryLedger,
) -> PhaseEstimationOutcome:
    """Simulate one phase-estimation run and sample its outcome.

    Contract: eigenphase 0 puts all outcome mass on grid point 0; eigenphases
    of magnitude >= theta contribute at most eps to outcome 0.
    """
    grid_size = pe_grid_size(theta, eps)
    dist = pe_outcome_distribution(dec, state, grid_size)
    outcome = int(rng.choice(grid_size, p=dist / dist.sum()))
    queries = pe_queries(grid_size, dec.query_cost)
    ledger.charge(queries)
    return PhaseEstimationOutcome(
        grid_size=grid_size,
        distribution=dist,
        outcome=outcome,
        queries_charged=queries,
        theta=theta,
        eps=eps,
    )


def ae_error_bound(p: float, grid_size: int) -> float:
    """The additive estimation-error bound that holds with probability >= 8/pi^2:
    2 pi sqrt(p(1-p))/M + pi^2/M^2."""
    return 2.0 * math.pi * math.sqrt(p * (1.0 - p)) / grid_size + math.pi**2 / grid_size**2


def ae_outcome_distribution(p: float, grid_size: int) -> np.ndarray:
    """Exact amplitude-estimation outcome distribution for success probability p.

    The estimation circuit phase-estimates an operator with eigenphases
    +/- 2 arcsin(sqrt(p)) on an M-point grid, with equal weight on each branch.
    """
    if not -1e-12 <= p <= 1.0 + 1e-12:
        raise ValueError("p must be a probability")
    p = min(1.0, max(0.0, p))
    theta_p = math.asin(math.sqrt(p))
    grid = 2.0 * math.pi * np.arange(grid_size) / grid_size
    dist = 0.5 * (
        fejer_kernel(2.0 * theta_p - grid, grid_size)
        + fejer_kernel(-2.0 * theta_p - grid, grid_size)
    )
    return dist


def ae_estimates(grid_size: int) -> np.ndarray:
    """Estimate value sin^2(pi k / M) reported for each grid outcome k."""
    return np.square(np.sin(math.pi * np.arange(grid_size) / grid_size))


def amplitude_estimation(p: float, grid_size: int, rng: np.random.Generator) -> AmplitudeEstimate:
    """Sample one amplitude-estimation outcome; the success bound is computed
    exactly from the distribution, never sampled."""
    if grid_size < 1:
        raise ValueError("grid size must be at least 1")
    dist = ae_outcome_distribution(p, grid_size)
    estimates = ae_estimates(grid_size)
    outcome = int(rng.choice(grid_size, p=dist / dist.sum()))
    bound = ae_error_bound(p, grid_size)
    success = float(np.sum(dist[np.abs(estimates - p) <= bound + 1e-15]))
    return AmplitudeEstimate(
        grid_size=grid_size,
        outcome=outcome,
        p_tilde=float(estimates[outcome]),
        success_bound=success,
        distribution=dist,
    )


def amp_gap_grid_size(p0: float, p1: float) -> int:
    return math.ceil(4.0 * math.pi * math.sqrt(p0 + p1) / (p0 - p1))


def amp_gap_threshold(p0: float, p1: float) -> float:
    """Decision threshold between the exact high-probability envelopes.

    ub(p1) bounds any estimate of a probability <= p1 from above (with
    probability >= 3/4); the symmetric lower envelope for p >= p0 sits at
    least (p0-p1)/6 higher, so the rule compares against ub(p1) + (p0-p1)/12.
    """
    gap = p0 - p1
    ub = (
        p1
        + math.sqrt(p1) * gap / (math.sqrt(2.0) * (math.sqrt(p0) + math.sqrt(p1)))
        + gap * gap / (16.0 * (p0 + p1))
    )
    return ub + gap / 12.0


def amplitude_gap_decide(
    p: float,
    p0: float,
    p1: float,
    rng: np.random.Generator,
    ledger: QueryLedger,
    query_cost_per_call: int = 0,
) -> int:
    """Decide between p >= p0 ("high", returns 1) and p <= p1 ("low", returns 0).

    Runs amplitude estimation with M = ceil(4 pi sqrt(p0+p1)/(p0-p1)) grid
    points; correct with probability >= 3/4 when the promise holds.  Each of
    the M calls to the underlying circuit is charged query_cost_per_call.
    """
    if not 0.0 <= p1 < p0 <= 1.0:
        raise ValueError("need 0 <= p1 < p0 <= 1")
    grid_size = amp_gap_grid_size(p0, p1)
    est = amplitude_estimation(p, grid_size, rng)
    ledger.charge(grid_size * query_cost_per_call)
    return int(est.p_tilde >= amp_gap_threshold(p0, p1))


def amplitude_gap_success_probability(p: float, p0: float, p1: float, high: bool) -> float:
    """Exact probability that amplitude_gap_decide answers `high` on input p."""
    grid_size = amp_gap_grid_size(p0, p1)
    dist = ae_outcome_distribution(p, grid_size)
    thr = amp_gap_threshold(p0, p1)
    mask = ae_estimates(grid_size) >= thr
    p_high = float(np.sum(dist[mask]))
    return p_high if high else 1.0 - p_high
