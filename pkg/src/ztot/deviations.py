"""Exponential decay rates of the Gibbs family.

At the zero-temperature limit the Gibbs plans concentrate on the optimal
support; mass elsewhere decays like exp(-beta * I(i, j)) with

    I(i, j) = c(i, j) - phi(i) - psi(j)

for the limit dual pair. On a finite space this reduces to a pointwise
identity of the Gibbs density, which is exactly what this module computes
and what the tests verify; no asymptotic machinery is involved.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._num import logsumexp
from .errors import ArgumentError, DimensionError, InvariantError
from .measure import CostModel

FEAS_NOISE = 1e-9      # clamp window below zero
PAIR_FEAS_TOL = 1e-6   # reject pairs violating feasibility beyond this
ZERO_SET_TOL = 1e-6    # the rate function must vanish somewhere

__all__ = ["RateFunction", "rate_function", "empirical_rate", "set_rate",
           "gamma"]


@dataclass(frozen=True)
class RateFunction:
    table: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.table, dtype=float)
        t.flags.writeable = False
        object.__setattr__(self, "table", t)
        if np.min(t) < 0.0:
            raise InvariantError("rate function must be nonnegative")
        if np.min(t) > ZERO_SET_TOL:
            raise InvariantError(
                f"rate function never vanishes (min {np.min(t):.3e}); "
                "the dual pair is not a conjugate limit pair")


def rate_function(cost: CostModel, phi, psi) -> RateFunction:
    """I = c - phi - psi for a feasible conjugate limit pair, clamped at 0
    where within feasibility noise."""
    phi = np.asarray(phi, dtype=float)
    psi = np.asarray(psi, dtype=float)
    if phi.shape != (cost.shape[0],) or psi.shape != (cost.shape[1],):
        raise DimensionError("potential lengths do not match the cost table")
    table = cost.c - phi[:, None] - psi[None, :]
    low = float(np.min(table))
    if low < -PAIR_FEAS_TOL:
        raise InvariantError(
            f"pair violates dual feasibility by {low:.3e}; not a limit pair")
    table = np.where(table < 0.0, 0.0, table)
    return RateFunction(table=table)


def _log_gibbs(point, problem, i: int | None = None, j: int | None = None):
    """log of the Gibbs table at one trajectory point, from the scaled
    potentials (never from the stored plan, whose small entries underflow)."""
    beta = point.beta
    c = problem.cost.c
    lw = problem.mu.log_weights[:, None] + problem.nu.log_weights[None, :]
    full = beta * (-c + point.scaled_phi[:, None] + point.scaled_psi[None, :]) + lw
    if i is None:
        return full
    return full[i, j]


def empirical_rate(trajectory, i: int, j: int) -> list:
    """[(beta, -(1/beta) log gibbs(i,j))] along the trajectory.

    Uses the exact decomposition
    c - phi/beta - psi/beta - log(mu_i nu_j)/beta, which stays finite at
    every beta.
    """
    n, m = trajectory.problem.shape
    if not (0 <= i < n and 0 <= j < m):
        raise ArgumentError(f"cell ({i}, {j}) outside a {n}x{m} table")
    out = []
    for pt in trajectory.points:
        out.append((pt.beta,
                    float(-_log_gibbs(pt, trajectory.problem, i, j) / pt.beta)))
    return out


def set_rate(trajectory, cells, rate: RateFunction) -> tuple:
    """Decay-rate estimate for a set of cells at the final beta.

    Returns (-(1/beta) log gibbs(cells) at the largest beta,
             min of the rate function over the cells) side by side; on a
    finite space the former converges to the latter.
    """
    cells = list(cells)
    if not cells:
        raise ArgumentError("cell set must be non-empty")
    final = trajectory.points[-1]
    full = _log_gibbs(final, trajectory.problem)
    logs = np.array([full[i, j] for i, j in cells])
    estimate = float(-logsumexp(logs, axis=0) / final.beta)
    floor = float(min(rate.table[i, j] for i, j in cells))
    return estimate, floor


def gamma(f, rate: RateFunction) -> float:
    """max over cells of f - I; equals 0 for f = I and -min(I) for f = 0."""
    f = np.asarray(f, dtype=float)
    if f.shape != rate.table.shape:
        raise DimensionError("test function shape does not match the table")
    return float(np.max(f - rate.table))
