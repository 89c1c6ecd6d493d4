"""Exact desk-scale ground truth for the transport problem.

Two independent methods, cross-validated against each other in the tests:

- Permutation: exhaustive scan of all n! permutation plans. Valid for
  square instances with uniform marginals, where the transportation
  polytope's vertices are exactly the permutation matrices.
- VertexEnum: enumerate every spanning tree of the complete bipartite
  graph K_{n,m}; each tree determines one basic solution by leaf
  stripping; feasible ones are the polytope's vertices.

Both return the optimal value, the full set of optimal vertices, and the
best achievable mean payoff (the negated optimal cost). Deliberately not
scalable: this module is the trust anchor the solver is compared against,
so it trades speed for obviousness.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .errors import ArgumentError, CapacityError, InvariantError
from .measure import CostModel, Marginal, TransportPlan, linear_cost

COST_TIE_TOL = 1e-12
DEDUP_TOL = 1e-12
MAX_FACE_VERTICES = 4

__all__ = ["OracleCap", "OracleResult", "exact_ot", "max_entropy_optimal",
           "is_optimal"]


@dataclass(frozen=True)
class OracleCap:
    perm_max_n: int = 8        # square + uniform marginals
    vertex_max_total: int = 10  # n + m


@dataclass(frozen=True)
class OracleResult:
    alpha: float                 # optimal transport cost
    m_payoff: float              # best mean payoff, always -alpha
    optimal_vertices: tuple      # TransportPlan instances
    method: str                  # "Permutation" | "VertexEnum"
    cost: CostModel

    def __post_init__(self):
        if self.m_payoff != -self.alpha:
            raise InvariantError("m_payoff must equal -alpha exactly")
        for v in self.optimal_vertices:
            if not v.is_feasible:
                raise InvariantError("an optimal vertex is infeasible")
            if abs(linear_cost(v, self.cost) - self.alpha) > 1e-10:
                raise InvariantError("a listed vertex misses the optimal cost")


def _is_uniform(marg: Marginal) -> bool:
    return bool(np.max(np.abs(marg.weights - 1.0 / marg.size)) <= 1e-12)


def _spanning_trees(n: int, m: int):
    """Yield each spanning tree of K_{n,m} as a tuple of (i, j) cells.

    Trees come out as increasing edge-index sequences with union-find
    cycle pruning, so each appears exactly once (count: n^(m-1) m^(n-1)).
    """
    edges = [(i, j) for i in range(n) for j in range(m)]
    total = len(edges)
    parent = list(range(n + m))
    size = [1] * (n + m)

    def find(a):
        while parent[a] != a:
            a = parent[a]
        return a

    chosen = []

    def rec(start, need):
        if need == 0:
            yield tuple(chosen)
            return
        for idx in range(start, total - need + 1):
            i, j = edges[idx]
            ra, rb = find(i), find(n + j)
            if ra == rb:
                continue
            if size[ra] < size[rb]:
                ra, rb = rb, ra
            parent[rb] = ra
            size[ra] += size[rb]
            chosen.append(edges[idx])
            yield from rec(idx + 1, need - 1)
            chosen.pop()
            parent[rb] = rb
            size[ra] -= size[rb]

    yield from rec(0, n + m - 1)


def _basic_solution(tree, supplies, demands) -> np.ndarray:
    """Solve the tree-supported balance system by leaf stripping."""
    n, m = len(supplies), len(demands)
    rem = list(supplies) + list(demands)
    deg = [0] * (n + m)
    incident = [[] for _ in range(n + m)]
    for k, (i, j) in enumerate(tree):
        deg[i] += 1
        deg[n + j] += 1
        incident[i].append(k)
        incident[n + j].append(k)
    used = [False] * len(tree)
    x = np.zeros((n, m))
    stack = [v for v in range(n + m) if deg[v] == 1]
    while stack:
        v = stack.pop()
        if deg[v] == 0:
            continue
        k = next(k for k in incident[v] if not used[k])
        i, j = tree[k]
        val = rem[v]
        x[i, j] = val
        rem[i] -= val
        rem[n + j] -= val
        used[k] = True
        deg[i] -= 1
        deg[n + j] -= 1
        for w in (i, n + j):
            if deg[w] == 1:
                stack.append(w)
    return x


def _collect(candidates, mu, nu, cost) -> tuple:
    """Keep the argmin-cost set, deduplicated entrywise."""
    best = np.inf
    kept: list[np.ndarray] = []
    for table in candidates:
        value = float(np.sum(cost.c * table))
        if value < best - COST_TIE_TOL:
            best = value
            kept = [table]
        elif value <= best + COST_TIE_TOL:
            if not any(np.max(np.abs(table - other)) <= DEDUP_TOL
                       for other in kept):
                kept.append(table)
    plans = tuple(TransportPlan.from_table(t, mu, nu) for t in kept)
    return best, plans


def exact_ot(mu: Marginal, nu: Marginal, cost: CostModel,
             cap: OracleCap = OracleCap()) -> OracleResult:
    """Exhaustive optimal transport: optimal cost plus all optimal vertices.

    Picks the Permutation path for uniform square instances within cap,
    otherwise VertexEnum when n + m is within cap; anything larger raises
    CapacityError.
    """
    n, m = mu.size, nu.size
    if cost.shape != (n, m):
        raise ArgumentError("cost table does not match the marginals")

    if n == m and n <= cap.perm_max_n and _is_uniform(mu) and _is_uniform(nu):
        w = 1.0 / n
        candidates = []
        for sigma in permutations(range(n)):
            table = np.zeros((n, n))
            table[np.arange(n), sigma] = w
            candidates.append(table)
        alpha, vertices = _collect(candidates, mu, nu, cost)
        return OracleResult(alpha=alpha, m_payoff=-alpha,
                            optimal_vertices=vertices, method="Permutation",
                            cost=cost)

    if n + m <= cap.vertex_max_total:
        def feasible_basics():
            for tree in _spanning_trees(n, m):
                x = _basic_solution(tree, mu.weights, nu.weights)
                if float(np.min(x)) >= -DEDUP_TOL:
                    yield np.clip(x, 0.0, None)
        alpha, vertices = _collect(feasible_basics(), mu, nu, cost)
        return OracleResult(alpha=alpha, m_payoff=-alpha,
                            optimal_vertices=vertices, method="VertexEnum",
                            cost=cost)

    raise CapacityError(
        f"instance {n}x{m} exceeds the oracle caps (uniform square n <= "
        f"{cap.perm_max_n}, or n + m <= {cap.vertex_max_total}); use the "
        "large-beta approximation instead")


def _entropy_batch(lam: np.ndarray, vertex_mat: np.ndarray,
                   log_ref: np.ndarray) -> np.ndarray:
    """H for a batch of convex combinations; lam is (batch, k)."""
    p = lam @ vertex_mat                      # (batch, cells)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0.0, p * (np.log(np.where(p > 0.0, p, 1.0))
                                       - log_ref[None, :]), 0.0)
    return -terms.sum(axis=1)


def _simplex_grid(k: int, step: float) -> np.ndarray:
    """All barycentric vectors with coordinates on a uniform grid."""
    ticks = int(round(1.0 / step))
    if k == 1:
        return np.ones((1, 1))
    if k == 2:
        a = np.linspace(0.0, 1.0, ticks + 1)
        return np.stack([a, 1.0 - a], axis=1)
    out = []
    if k == 3:
        for i in range(ticks + 1):
            rest = ticks - i
            j = np.arange(rest + 1)
            block = np.empty((rest + 1, 3))
            block[:, 0] = i / ticks
            block[:, 1] = j / ticks
            block[:, 2] = (rest - j) / ticks
            out.append(block)
        return np.concatenate(out, axis=0)
    # k == 4
    for i in range(ticks + 1):
        for j in range(ticks + 1 - i):
            rest = ticks - i - j
            l = np.arange(rest + 1)
            block = np.empty((rest + 1, 4))
            block[:, 0] = i / ticks
            block[:, 1] = j / ticks
            block[:, 2] = l / ticks
            block[:, 3] = (rest - l) / ticks
            out.append(block)
    return np.concatenate(out, axis=0)


def max_entropy_optimal(result: OracleResult, mu: Marginal, nu: Marginal,
                        tol: float = 1e-9) -> TransportPlan:
    """The unique entropy maximizer over the optimal face.

    Dense barycentric grid (step 1e-3 for faces with <= 3 vertices, 1e-2
    for 4, where the finer grid would need ~1.7e8 points) followed by a
    shrinking local grid search down to ``tol``.
    """
    vertices = result.optimal_vertices
    k = len(vertices)
    if k > MAX_FACE_VERTICES:
        raise CapacityError(
            f"optimal face has {k} vertices; the entropy search is capped "
            f"at {MAX_FACE_VERTICES}")
    if k == 1:
        return vertices[0]

    vertex_mat = np.stack([v.p.ravel() for v in vertices])
    log_ref = np.log(np.outer(mu.weights, nu.weights).ravel())

    step = 1e-3 if k <= 3 else 1e-2
    grid = _simplex_grid(k, step)
    best_lam, best_h = None, -np.inf
    for lo in range(0, grid.shape[0], 65536):
        chunk = grid[lo:lo + 65536]
        h = _entropy_batch(chunk, vertex_mat, log_ref)
        idx = int(np.argmax(h))
        if h[idx] > best_h:
            best_h = float(h[idx])
            best_lam = chunk[idx].copy()

    # local refinement: shrink a grid of perturbations around the incumbent
    offsets = np.stack(np.meshgrid(*([np.linspace(-1.0, 1.0, 9)] * k),
                                   indexing="ij"), axis=-1).reshape(-1, k)
    radius = step
    while radius > max(tol, 1e-13):
        cand = best_lam[None, :] + radius * offsets
        np.clip(cand, 0.0, None, out=cand)
        cand /= cand.sum(axis=1, keepdims=True)
        h = _entropy_batch(cand, vertex_mat, log_ref)
        idx = int(np.argmax(h))
        if h[idx] > best_h:
            best_h = float(h[idx])
            best_lam = cand[idx].copy()
        radius *= 0.35

    table = (best_lam @ vertex_mat).reshape(result.cost.shape)
    return TransportPlan.from_table(table, mu, nu)


def is_optimal(plan: TransportPlan, result: OracleResult,
               tol: float = 1e-9) -> bool:
    """Feasible and within ``tol`` of the oracle's optimal cost."""
    if plan.shape != result.cost.shape:
        raise ArgumentError("plan shape does not match the oracle instance")
    return plan.is_feasible and linear_cost(plan, result.cost) <= result.alpha + tol
