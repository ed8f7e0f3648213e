"""Effective resistance via the st-connectivity span program.

The span program has one H coordinate per ordered vertex pair; one input bit
per unordered pair turns both orientations on or off.  A sends |u,v> to
|u> - |v> and the target is |s> - |t>, so positive witnesses are unit
st-flows halved over the two orientations and w_+(G) = R_st(G)/2.

exact_resistance is the module's independent oracle: (e_s - e_t)^T L^+
(e_s - e_t) on the graph Laplacian, with a brute-force flow minimization over
the cycle space kept as a second, pseudo-inverse-free path for tiny graphs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from ._linalg import DEFAULT_TOLS, Tolerances, pinv
from .algorithms import kappa_estimate, witness_estimate, POSITIVE
from .qsim import QueryLedger
from .spanprog import SpanProgram, normalize, positive_witness

Edge = tuple[int, int]


class GraphParseError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"{message}{where}")


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph on vertices 0..n-1 with marked s != t."""

    n: int
    edges: frozenset[Edge]
    s: int
    t: int

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("graph needs at least two vertices")
        if not (0 <= self.s < self.n and 0 <= self.t < self.n):
            raise ValueError("s and t must be vertices")
        if self.s == self.t:
            raise ValueError("s and t must differ")
        norm = set()
        for u, v in self.edges:
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"edge ({u},{v}) out of range")
            norm.add((min(u, v), max(u, v)))
        object.__setattr__(self, "edges", frozenset(norm))

    def adjacency(self) -> np.ndarray:
        adj = np.zeros((self.n, self.n))
        for u, v in self.edges:
            adj[u, v] = adj[v, u] = 1.0
        return adj

    def neighbors(self, u: int) -> list[int]:
        return [v for v in range(self.n) if (min(u, v), max(u, v)) in self.edges and v != u]

    def connected_st(self) -> bool:
        seen = {self.s}
        stack = [self.s]
        while stack:
            u = stack.pop()
            if u == self.t:
                return True
            for v in self.neighbors(u):
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return False


def graph(n: int, edges: Iterable[Edge], s: int = 0, t: Optional[int] = None) -> Graph:
    return Graph(n=n, edges=frozenset((u, v) for u, v in edges), s=s, t=n - 1 if t is None else t)


def complete_graph(n: int, s: int = 0, t: Optional[int] = None) -> Graph:
    return graph(n, [(u, v) for u in range(n) for v in range(u + 1, n)], s, t)


def parse_graph_file(text: str) -> Graph:
    """Parse the text graph format: a header line "n m s t" followed by m
    edge lines "u v", all 1-based; blank lines and '#' comments are skipped.
    Duplicate edges and self-loops are rejected with their line number.
    """
    header: Optional[tuple[int, int, int, int]] = None
    edges: list[Edge] = []
    seen: set[Edge] = set()
    expected = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if header is None:
            if len(parts) != 4:
                raise GraphParseError("header must be 'n m s t'", lineno)
            try:
                n, m, s, t = (int(p) for p in parts)
            except ValueError:
                raise GraphParseError("header fields must be integers", lineno) from None
            if n < 2:
                raise GraphParseError("need at least two vertices", lineno)
            if not (1 <= s <= n and 1 <= t <= n):
                raise GraphParseError("s and t must lie in 1..n", lineno)
            if s == t:
                raise GraphParseError("s and t must differ", lineno)
            if m < 0:
                raise GraphParseError("edge count must be non-negative", lineno)
            header = (n, m, s, t)
            expected = m
            continue
        if len(parts) != 2:
            raise GraphParseError("edge line must be 'u v'", lineno)
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise GraphParseError("edge endpoints must be integers", lineno) from None
        n = header[0]
        if not (1 <= u <= n and 1 <= v <= n):
            raise GraphParseError(f"edge ({u},{v}) out of range 1..{n}", lineno)
        if u == v:
            raise GraphParseError(f"self-loop at vertex {u}", lineno)
        edge = (min(u, v) - 1, max(u, v) - 1)
        if edge in seen:
            raise GraphParseError(f"duplicate edge ({u},{v})", lineno)
        seen.add(edge)
        edges.append(edge)
    if header is None:
        raise GraphParseError("empty graph file")
    n, m, s, t = header
    if len(edges) != m:
        raise GraphParseError(f"header announces {m} edges, found {len(edges)}")
    return Graph(n=n, edges=frozenset(edges), s=s - 1, t=t - 1)


def laplacian(g: Graph) -> np.ndarray:
    adj = g.adjacency()
    return np.diag(adj.sum(axis=1)) - adj


def lambda2(g: Graph) -> float:
    """Second-smallest Laplacian eigenvalue (algebraic connectivity)."""
    return float(np.linalg.eigvalsh(laplacian(g))[1])


def exact_resistance(g: Graph) -> float:
    """R_st via the Laplacian pseudo-inverse; inf when s, t are disconnected."""
    if not g.connected_st():
        return math.inf
    chi = np.zeros(g.n)
    chi[g.s], chi[g.t] = 1.0, -1.0
    return float(chi @ pinv(laplacian(g)) @ chi)


def flow_resistance_bruteforce(g: Graph) -> float:
    """Independent flow-minimization oracle over the cycle space.

    Builds a particular unit st-flow along a tree path, parametrizes all unit
    flows by fundamental cycles of a spanning forest, and minimizes the energy
    by a dense normal-equation solve.  Intended for tiny graphs.
    """
    if not g.connected_st():
        return math.inf
    edges = sorted(g.edges)
    index = {e: i for i, e in enumerate(edges)}

    # spanning forest by BFS from s, tracking tree parents
    parent: dict[int, Optional[int]] = {g.s: None}
    order = [g.s]
    queue = [g.s]
    while queue:
        u = queue.pop(0)
        for v in g.neighbors(u):
            if v not in parent:
                parent[v] = u
                order.append(v)
                queue.append(v)

    def tree_path_flow(a: int, b: int) -> np.ndarray:
        """Unit flow from a to b along tree edges (signed on sorted edges)."""
        def path_to_root(v):
            out = []
            while parent[v] is not None:
                out.append(v)
                v = parent[v]
            out.append(v)
            return out
        pa, pb = path_to_root(a), path_to_root(b)
        sa, sb = set(pa), set(pb)
        meet = next(v for v in pa if v in sb)
        flow = np.zeros(len(edges))
        def push(u, v, amount):  # oriented u -> v
            e = (min(u, v), max(u, v))
            sign = 1.0 if (u, v) == e else -1.0
            flow[index[e]] += sign * amount
        v = a
        while v != meet:
            push(v, parent[v], 1.0)
            v = parent[v]
        v = b
        while v != meet:
            push(parent[v], v, 1.0)
            v = parent[v]
        return flow

    theta0 = tree_path_flow(g.s, g.t)

    tree_edges = {(min(u, v), max(u, v)) for v, u in parent.items() if u is not None}
    cycles = []
    for u, v in edges:
        if (u, v) in tree_edges or u not in parent or v not in parent:
            continue
        cyc = tree_path_flow(v, u)  # close the non-tree edge u -> v
        cyc[index[(u, v)]] += 1.0
        cycles.append(cyc)

    if not cycles:
        return float(theta0 @ theta0)
    c_mat = np.column_stack(cycles)
    coeff = np.linalg.solve(c_mat.T @ c_mat, -(c_mat.T @ theta0))
    theta = theta0 + c_mat @ coeff
    return float(theta @ theta)


def ordered_pairs(n: int) -> list[tuple[int, int]]:
    """Coordinate layout of H: both orientations of each unordered pair,
    grouped so that input position j = {u, v} owns coordinates 2j and 2j+1."""
    out = []
    for u in range(n):
        for v in range(u + 1, n):
            out.append((u, v))
            out.append((v, u))
    return out


def unordered_pairs(n: int) -> list[Edge]:
    return [(u, v) for u in range(n) for v in range(u + 1, n)]


def build_st_span_program(n: int, s: int, t: int) -> SpanProgram:
    """The st-connectivity span program on [n]: V = R^n, A|u,v> = |u> - |v>,
    tau = |s> - |t>; the pair-{u,v} input bit selects both ordered coordinates."""
    if n < 2:
        raise ValueError("need at least two vertices")
    if not (0 <= s < n and 0 <= t < n) or s == t:
        raise ValueError("s and t must be distinct vertices")
    pairs = ordered_pairs(n)
    dim_h = len(pairs)
    a_mat = np.zeros((n, dim_h))
    for col, (u, v) in enumerate(pairs):
        a_mat[u, col] += 1.0
        a_mat[v, col] -= 1.0
    tau = np.zeros(n)
    tau[s], tau[t] = 1.0, -1.0
    n_inputs = len(unordered_pairs(n))
    subspaces = {}
    for j in range(n_inputs):
        subspaces[(j, 0)] = np.zeros((2, 0))
        subspaces[(j, 1)] = np.eye(2)
    return SpanProgram(
        n=n_inputs,
        q=2,
        dim_h=dim_h,
        dim_v=n,
        input_blocks=tuple((2 * j, 2 * j + 1) for j in range(n_inputs)),
        true_block=(),
        false_block=(),
        subspaces=subspaces,
        a_mat=a_mat,
        tau=tau,
    )


def graph_input(g: Graph) -> tuple[int, ...]:
    """The adjacency input string of g for build_st_span_program(g.n, ...)."""
    return tuple(1 if e in g.edges else 0 for e in unordered_pairs(g.n))


@dataclass(frozen=True)
class WitnessResistanceCheck:
    w_plus: float
    resistance: float
    residual: float
    ok: bool


def witness_equals_half_resistance(
    g: Graph, tols: Tolerances = DEFAULT_TOLS, tol: float = 1e-8
) -> WitnessResistanceCheck:
    """Check w_+(G) = R_st(G)/2 (both infinite together when disconnected)."""
    program = build_st_span_program(g.n, g.s, g.t)
    _, w_plus = positive_witness(program, graph_input(g), tols)
    res = exact_resistance(g)
    if math.isinf(w_plus) or math.isinf(res):
        ok = math.isinf(w_plus) and math.isinf(res)
        return WitnessResistanceCheck(w_plus=w_plus, resistance=res, residual=math.inf if not ok else 0.0, ok=ok)
    residual = abs(w_plus - res / 2.0)
    return WitnessResistanceCheck(w_plus=w_plus, resistance=res, residual=residual, ok=residual <= tol * max(1.0, res))


@dataclass(frozen=True)
class ResistanceReport:
    exact: float
    estimate: float
    epsilon: float
    method: str
    mu: Optional[float]
    queries: int
    lambda2: float
    flags: tuple[str, ...] = ()


EFFECTIVE_GAP = "effective-gap"
REAL_GAP = "real-gap"


def estimate_resistance(
    g: Graph,
    eps: float,
    method: str,
    rng: np.random.Generator,
    ledger: QueryLedger,
    mu: Optional[float] = None,
    tols: Tolerances = DEFAULT_TOLS,
    cache: Optional[dict] = None,
) -> ResistanceReport:
    """Estimate R_st(g) to relative accuracy eps with probability >= 2/3.

    effective-gap: interval-shrinking witness estimation on the normalized
    program, using the domain bound w_tilde_minus <= 2 n^2 (times the
    normalization factor 1/n) valid for connected graphs.

    real-gap: kappa-based estimation with kappa = sqrt(n/mu) for a caller's
    mu <= lambda2(g); mu is validated against the exact lambda2.

    Disconnected inputs are detected classically and reported as infinite.
    """
    if method not in (EFFECTIVE_GAP, REAL_GAP):
        raise ValueError(f"unknown method {method!r}")
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    lam2 = lambda2(g)
    exact = exact_resistance(g)
    if math.isinf(exact):
        return ResistanceReport(
            exact=math.inf, estimate=math.inf, epsilon=eps, method=method,
            mu=mu, queries=0, lambda2=lam2, flags=("disconnected",),
        )

    program = build_st_span_program(g.n, g.s, g.t)
    x = graph_input(g)
    if method == EFFECTIVE_GAP:
        normalized = normalize(program, tols)
        # w_tilde_minus(P) <= 2 n^2 on connected graphs; normalization
        # multiplies negative witness sizes by N = 1/n.
        wt_bound = 2.0 * g.n
        result = witness_estimate(
            normalized, x, eps, POSITIVE, rng, ledger, tols,
            w_tilde_bound=wt_bound, cache=cache,
        )
        w_plus_est = result.value / g.n  # positive sizes were scaled by 1/N = n
    else:
        if mu is None:
            raise ValueError("method 'real-gap' requires a lambda2 lower bound mu")
        if not 0.0 < mu <= lam2 * (1.0 + 1e-9):
            raise ValueError(f"mu must lie in (0, lambda2 = {lam2!r}]")
        kappa = math.sqrt(g.n / mu)
        result = kappa_estimate(program, x, eps, kappa, POSITIVE, rng, ledger, tols, cache)
        w_plus_est = result.value

    return ResistanceReport(
        exact=exact,
        estimate=2.0 * w_plus_est,
        epsilon=eps,
        method=method,
        mu=mu,
        queries=result.queries,
        lambda2=lam2,
        flags=result.flags,
    )


def lower_bound_family(
    n: int, variant: int, i: Optional[int] = None, j: Optional[int] = None
) -> Graph:
    """The two-star family behind the linear query lower bound.

    s = 0 and t = n-1 are star centers over leaves 1..n/2-1 and n/2..n-2
    respectively, joined by the edge {s, t}.  Variant 0 is exactly that
    (resistance 1); variant 1 adds one cross edge {i, j} between an s-side
    and a t-side leaf (resistance 3/4).
    """
    if n < 6 or n % 2 != 0:
        raise ValueError("family needs even n >= 6")
    if variant not in (0, 1):
        raise ValueError("variant must be 0 or 1")
    s, t = 0, n - 1
    s_leaves = range(1, n // 2)
    t_leaves = range(n // 2, n - 1)
    edges = [(s, leaf) for leaf in s_leaves] + [(t, leaf) for leaf in t_leaves] + [(s, t)]
    if variant == 1:
        if i is None or j is None:
            raise ValueError("variant 1 needs leaf indices i (s-side) and j (t-side)")
        if i not in s_leaves or j not in t_leaves:
            raise ValueError(
                f"need i in {list(s_leaves)} and j in {list(t_leaves)}"
            )
        edges.append((i, j))
    return Graph(n=n, edges=frozenset(edges), s=s, t=t)


@dataclass(frozen=True)
class FactorizationCheck:
    """Residuals of the reflection-factorization identities on the 2 n^3
    dimensional four-register space."""

    n: int
    my_isometry_defect: float
    mz_isometry_defect: float
    factorization_defect: float
    minus_one_defect: float
    plus_one_defect: float
    rotation_phase: float  # actual phase on the image of (ker A)^perp
    predicted_rotation_phase: float


def reflection_factorization_operators(n: int):
    """The isometries M_Z, M_Y of the four-register construction and the
    st-connectivity A on ordered pairs (target-independent)."""
    if not 2 <= n <= 8:
        raise ValueError("construction materialized only for 2 <= n <= 8 (dim = 2 n^3)")
    dim = 2 * n**3

    def flat(b: int, r1: int, r2: int, r3: int) -> int:
        return ((b * n + r1) * n + r2) * n + r3

    mz = np.zeros((dim, n))
    norm = 1.0 / math.sqrt(2.0 * (n - 1))
    for u in range(n):
        for v in range(n):
            if v == u:
                continue
            mz[flat(0, u, u, v), u] += norm
            mz[flat(1, u, v, u), u] += norm

    pairs = ordered_pairs(n)
    my = np.zeros((dim, len(pairs)))
    for col, (u, v) in enumerate(pairs):
        my[flat(0, u, u, v), col] += 1.0 / math.sqrt(2.0)
        my[flat(1, v, u, v), col] -= 1.0 / math.sqrt(2.0)

    a_mat = np.zeros((n, len(pairs)))
    for col, (u, v) in enumerate(pairs):
        a_mat[u, col] += 1.0
        a_mat[v, col] -= 1.0
    return mz, my, a_mat


def verify_reflection_factorization(n: int, tols: Tolerances = DEFAULT_TOLS) -> FactorizationCheck:
    """Measure every identity of the reflection factorization.

    (a) M_Y (and M_Z) are isometries; (b) M_Z^T M_Y = A / (2 sqrt(n-1));
    (c) M_Y maps ker A into the -1-eigenspace of W = (2 Pi_Z - I)(2 Pi_Y - I)
    and (ker A)^perp into the +1-eigenspace.

    The -1 containment is an exact identity.  The +1 containment fails for
    n >= 3: the image of (ker A)^perp meets Z at principal angle
    arccos sqrt(n / (2(n-1))), so W rotates it by 2 arccos sqrt(n/(2(n-1)))
    instead of fixing it; the measured and predicted rotation phases are
    reported alongside the raw defect.
    """
    if not 3 <= n <= 6:
        raise ValueError("verification supported for 3 <= n <= 6")
    mz, my, a_mat = reflection_factorization_operators(n)
    dim = mz.shape[0]

    my_defect = float(np.max(np.abs(my.T @ my - np.eye(my.shape[1]))))
    mz_defect = float(np.max(np.abs(mz.T @ mz - np.eye(n))))
    fact_defect = float(np.max(np.abs(mz.T @ my - a_mat / (2.0 * math.sqrt(n - 1)))))

    pi_z = mz @ mz.T
    pi_y = my @ my.T
    eye = np.eye(dim)
    walk = (2.0 * pi_z - eye) @ (2.0 * pi_y - eye)

    u_mat, svals, vt = np.linalg.svd(a_mat)
    rank = int(np.sum(svals > tols.rank_rtol * svals[0]))
    ker_basis = vt[rank:].T
    row_basis = vt[:rank].T

    img_ker = my @ ker_basis
    img_row = my @ row_basis
    minus_defect = float(np.max(np.abs(walk @ img_ker + img_ker))) if img_ker.size else 0.0
    plus_defect = float(np.max(np.abs(walk @ img_row - img_row)))

    # actual rotation phase on the rowA image: W acts as a rotation there
    v0 = img_row[:, 0]
    cos_actual = float(v0 @ (walk @ v0))
    rotation_phase = math.acos(max(-1.0, min(1.0, cos_actual)))
    predicted = 2.0 * math.acos(math.sqrt(n / (2.0 * (n - 1.0))))

    return FactorizationCheck(
        n=n,
        my_isometry_defect=my_defect,
        mz_isometry_defect=mz_defect,
        factorization_defect=fact_defect,
        minus_one_defect=minus_defect,
        plus_one_defect=plus_defect,
        rotation_phase=rotation_phase,
        predicted_rotation_phase=predicted,
    )
