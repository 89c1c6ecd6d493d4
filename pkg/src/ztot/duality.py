"""Kantorovich dual-side machinery: feasible pairs, cost transforms,
duality gaps, and the distance-cost (Kantorovich-Rubinstein) specialization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._num import pairwise_lipschitz
from .errors import DimensionError, FeasibilityError, InvariantError
from .measure import CostModel, Marginal, TransportPlan, linear_cost

DUAL_FEAS_TOL = 1e-9

__all__ = ["DualPair", "c_transform_to_y", "c_transform_to_x", "duality_gap",
           "dual_value", "kr_value", "kr_antisymmetry_check"]


@dataclass(frozen=True)
class DualPair:
    """A candidate dual pair with its slack table c - phi - psi."""

    phi: np.ndarray
    psi: np.ndarray
    slack: np.ndarray
    feasible: bool

    @classmethod
    def from_potentials(cls, cost: CostModel, phi, psi) -> "DualPair":
        phi = np.asarray(phi, dtype=float)
        psi = np.asarray(psi, dtype=float)
        if phi.shape != (cost.shape[0],) or psi.shape != (cost.shape[1],):
            raise DimensionError("potential lengths do not match the cost table")
        slack = cost.c - phi[:, None] - psi[None, :]
        feasible = bool(np.min(slack) >= -DUAL_FEAS_TOL)
        return cls(phi=phi, psi=psi, slack=slack, feasible=feasible)


def c_transform_to_y(phi, cost: CostModel) -> np.ndarray:
    """psi(j) = min_i [c(i,j) - phi(i)]; ties resolve to the value only."""
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (cost.shape[0],):
        raise DimensionError("phi length does not match the cost table")
    return np.min(cost.c - phi[:, None], axis=0)


def c_transform_to_x(psi, cost: CostModel) -> np.ndarray:
    """phi(i) = min_j [c(i,j) - psi(j)]."""
    psi = np.asarray(psi, dtype=float)
    if psi.shape != (cost.shape[1],):
        raise DimensionError("psi length does not match the cost table")
    return np.min(cost.c - psi[None, :], axis=1)


def dual_value(pair: DualPair, mu: Marginal, nu: Marginal) -> float:
    return float((pair.phi * mu.weights).sum() + (pair.psi * nu.weights).sum())


def duality_gap(plan: TransportPlan, pair: DualPair, cost: CostModel,
                mu: Marginal, nu: Marginal) -> float:
    """linear_cost(plan) minus the dual value; >= 0 up to 1e-9 by weak duality.

    Zero certifies that plan and pair are jointly optimal.
    """
    if not pair.feasible:
        raise FeasibilityError("dual pair is infeasible (negative slack)")
    if not plan.is_feasible:
        raise FeasibilityError("plan marginal residuals exceed tolerance")
    gap = linear_cost(plan, cost) - dual_value(pair, mu, nu)
    if gap < -DUAL_FEAS_TOL:
        raise InvariantError(f"weak duality violated: gap {gap!r}")
    return gap


def kr_value(phi, mu: Marginal, nu: Marginal, dist: np.ndarray) -> float:
    """sum phi * (mu - nu) for a 1-Lipschitz phi on a shared space X = Y."""
    phi = np.asarray(phi, dtype=float)
    lip = pairwise_lipschitz(phi, dist)
    if lip > 1.0 + 1e-9:
        raise InvariantError(f"phi has Lipschitz constant {lip:.6g} > 1")
    return float((phi * (mu.weights - nu.weights)).sum())


def kr_antisymmetry_check(phi, psi, tol: float) -> bool:
    """True when psi is the negation of phi within sup-norm tol."""
    phi = np.asarray(phi, dtype=float)
    psi = np.asarray(psi, dtype=float)
    if phi.shape != psi.shape:
        raise DimensionError("phi and psi must live on the same space")
    return bool(np.max(np.abs(phi + psi)) <= tol)
