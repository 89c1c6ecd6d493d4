"""Shared instance builders for the test suite.

Random metric spaces are Euclidean point clouds (triangle inequality holds
by construction); random feasible plans come from iterative proportional
scaling of a positive table onto the target marginals.
"""

from __future__ import annotations

import numpy as np
import pytest

from ztot.measure import CostModel, Marginal, MetricSample, TransportPlan
from ztot.problem import Problem


def euclidean_metric(rng: np.random.Generator, n: int, dim: int = 2,
                     scale: float = 1.0) -> MetricSample:
    pts = rng.uniform(0.0, scale, size=(n, dim))
    dist = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)
    return MetricSample(points=[f"p{i}" for i in range(n)], dist=dist)


def random_marginal(rng: np.random.Generator, n: int) -> Marginal:
    w = rng.uniform(0.2, 1.0, size=n)
    return Marginal(weights=w / w.sum())


def random_problem(rng: np.random.Generator, n: int, m: int,
                   cost_scale: float = 1.0) -> Problem:
    x_space = euclidean_metric(rng, n)
    y_space = euclidean_metric(rng, m)
    cost = CostModel.from_table(rng.uniform(0.0, cost_scale, size=(n, m)),
                                x_space, y_space)
    return Problem(x_space=x_space, y_space=y_space,
                   mu=random_marginal(rng, n), nu=random_marginal(rng, m),
                   cost=cost)


def distance_cost_problem(rng: np.random.Generator, n: int) -> Problem:
    """X = Y with the metric itself as the cost (the KR setting)."""
    x_space = euclidean_metric(rng, n)
    cost = CostModel.from_table(x_space.dist.copy(), x_space, x_space)
    return Problem(x_space=x_space, y_space=x_space,
                   mu=random_marginal(rng, n), nu=random_marginal(rng, n),
                   cost=cost, y_is_x=True)


def random_feasible_plan(rng: np.random.Generator, mu: Marginal,
                         nu: Marginal, iters: int = 400) -> TransportPlan:
    """Scale a random positive table onto (mu, nu); residuals ~1e-15."""
    p = np.exp(rng.normal(size=(mu.size, nu.size)))
    for _ in range(iters):
        p *= (mu.weights / p.sum(axis=1))[:, None]
        p *= (nu.weights / p.sum(axis=0))[None, :]
    p *= (mu.weights / p.sum(axis=1))[:, None]
    p /= p.sum()
    return TransportPlan.from_table(p, mu, nu)


def two_point_space() -> MetricSample:
    return MetricSample(points=("a", "b"), dist=[[0.0, 1.0], [1.0, 0.0]])


def uniform2() -> Marginal:
    return Marginal(weights=[0.5, 0.5])


def identity_cost_2x2() -> Problem:
    """The 2x2 instance with c = [[0,1],[1,0]] and uniform marginals."""
    space = two_point_space()
    cost = CostModel.from_table([[0.0, 1.0], [1.0, 0.0]], space, space)
    return Problem(x_space=space, y_space=space, mu=uniform2(), nu=uniform2(),
                   cost=cost, y_is_x=True)


def zero_cost_2x2() -> Problem:
    space = two_point_space()
    cost = CostModel.from_table([[0.0, 0.0], [0.0, 0.0]], space, space)
    return Problem(x_space=space, y_space=space, mu=uniform2(), nu=uniform2(),
                   cost=cost, y_is_x=True)


def constant_cost_problem(rng: np.random.Generator, n: int, m: int,
                          value: float = 3.0) -> Problem:
    x_space = euclidean_metric(rng, n)
    y_space = euclidean_metric(rng, m)
    cost = CostModel.from_table(np.full((n, m), value), x_space, y_space)
    return Problem(x_space=x_space, y_space=y_space,
                   mu=random_marginal(rng, n), nu=random_marginal(rng, m),
                   cost=cost)


def separable_problem(rng: np.random.Generator, n: int, m: int) -> Problem:
    """c(i,j) = u(i) + v(j): every plan has the same cost."""
    x_space = euclidean_metric(rng, n)
    y_space = euclidean_metric(rng, m)
    u = rng.uniform(0.0, 1.0, size=n)
    v = rng.uniform(0.0, 1.0, size=m)
    cost = CostModel.from_table(u[:, None] + v[None, :], x_space, y_space)
    return Problem(x_space=x_space, y_space=y_space,
                   mu=random_marginal(rng, n), nu=random_marginal(rng, m),
                   cost=cost)


def beta_ladder(target: float, start: float = 1.0, factor: float = 2.0) -> list:
    """Geometric rungs from start up to target (target included)."""
    betas = [start]
    while betas[-1] * factor < target:
        betas.append(betas[-1] * factor)
    if betas[-1] < target:
        betas.append(target)
    return betas


def ladder_solve(problem: Problem, beta: float, tol: float = 1e-11):
    """Warm-started solve chain up to beta; returns the final (pair, report)."""
    from ztot.potentials import schrodinger_solve

    pair = None
    for b in beta_ladder(beta):
        pair, report = schrodinger_solve(problem.cost, problem.mu, problem.nu,
                                         b, tol=tol, warm_start=pair)
    return pair, report


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20260809)
