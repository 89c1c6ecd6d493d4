"""Finite-space measures, couplings, entropy, and KL divergence.

Ground types for everything else in the package:

- :class:`MetricSample` -- a finite metric space (point ids + distance table).
- :class:`Marginal` -- strictly positive probability weights (full support).
- :class:`CostModel` -- cost table c, payoff table (its negation), and the
  Lipschitz constant of the payoff for the sum metric on the product space.
- :class:`TransportPlan` -- a nonnegative coupling table with marginal
  residual diagnostics.

All types are frozen and their arrays are made non-writeable, so instances
are safe to share across threads. Every operation here is a pure function.

Conventions: 0 * log 0 = 0 in all KL sums; an atom of the numerator where
the reference vanishes yields the +inf sentinel (``math.inf``), returned
deliberately, never produced by overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, DimensionError, FeasibilityError, ValidationError

CONSTRUCTION_TOL = 1e-12   # marginals, metrics, plan mass
FEASIBILITY_TOL = 1e-9     # plan marginal residuals
TRIANGLE_TOL = 1e-12


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class MetricSample:
    """A finite metric space: opaque point identifiers plus a distance table."""

    points: tuple
    dist: np.ndarray
    validate_triangle: bool = True

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        d = np.array(self.dist, dtype=float)
        n = len(self.points)
        if d.shape != (n, n):
            raise DimensionError(f"distance table is {d.shape}, expected ({n}, {n})")
        if n == 0:
            raise ValidationError("a metric space needs at least one point")
        if not np.all(np.isfinite(d)):
            raise ValidationError("distances must be finite")
        if np.max(np.abs(d - d.T)) > CONSTRUCTION_TOL:
            raise ValidationError("distance table must be symmetric")
        if np.max(np.abs(np.diag(d))) > CONSTRUCTION_TOL:
            raise ValidationError("self-distances must be zero")
        # store an exactly symmetric table with an exactly zero diagonal
        d = 0.5 * (d + d.T)
        np.fill_diagonal(d, 0.0)
        off = d[~np.eye(n, dtype=bool)]
        if off.size and np.min(off) <= 0.0:
            raise ValidationError("distinct points must be at positive distance")
        if self.validate_triangle:
            self._check_triangle(d)
        object.__setattr__(self, "dist", _frozen(d))

    @staticmethod
    def _check_triangle(d: np.ndarray):
        # O(n^3); chunked over the middle index to bound memory.
        n = d.shape[0]
        for j0 in range(0, n, 64):
            via = d[:, j0:j0 + 64, None] + d[None, j0:j0 + 64, :]  # d(i,j) + d(j,k)
            worst = np.max(d[:, None, :] - via)
            if worst > TRIANGLE_TOL:
                raise ValidationError(
                    f"triangle inequality violated by {worst:.3e}")

    @property
    def size(self) -> int:
        return len(self.points)

    @property
    def diameter(self) -> float:
        return float(np.max(self.dist))


@dataclass(frozen=True)
class Marginal:
    """Strictly positive probability weights on a MetricSample (full support)."""

    weights: np.ndarray

    def __post_init__(self):
        w = _frozen(self.weights)
        object.__setattr__(self, "weights", w)
        if w.ndim != 1 or w.size == 0:
            raise ValidationError("weights must be a non-empty vector")
        if not np.all(np.isfinite(w)):
            raise ValidationError("weights must be finite")
        if np.min(w) <= 0.0:
            raise ValidationError("all weights must be strictly positive "
                                  "(full support is required)")
        if abs(float(np.sum(w)) - 1.0) > CONSTRUCTION_TOL:
            raise ValidationError(f"weights sum to {float(np.sum(w))!r}, not 1")

    @property
    def size(self) -> int:
        return self.weights.size

    @property
    def log_weights(self) -> np.ndarray:
        return np.log(self.weights)


@dataclass(frozen=True)
class CostModel:
    """Cost table with its payoff (negation) and payoff Lipschitz constant."""

    c: np.ndarray
    payoff: np.ndarray = field(default=None)  # always -c
    lip_payoff: float = field(default=None)
    x_space: MetricSample = None
    y_space: MetricSample = None

    @classmethod
    def from_table(cls, c, x_space: MetricSample, y_space: MetricSample) -> "CostModel":
        from ._num import payoff_lipschitz

        c = np.asarray(c, dtype=float)
        if c.shape != (x_space.size, y_space.size):
            raise DimensionError(
                f"cost table is {c.shape}, expected ({x_space.size}, {y_space.size})")
        if not np.all(np.isfinite(c)):
            raise ValidationError("costs must be finite")
        a = -c
        lip = payoff_lipschitz(a, x_space.dist, y_space.dist)
        return cls(c=c, payoff=a, lip_payoff=lip, x_space=x_space, y_space=y_space)

    def __post_init__(self):
        c = _frozen(self.c)
        object.__setattr__(self, "c", c)
        if self.payoff is None:
            raise ValidationError("construct CostModel via from_table()")
        a = _frozen(self.payoff)
        object.__setattr__(self, "payoff", a)
        if a.shape != c.shape:
            raise DimensionError("payoff table shape must match cost table")
        if np.max(np.abs(a + c)) != 0.0:
            raise ValidationError("payoff must be the exact negation of cost")
        if not (np.isfinite(self.lip_payoff) and self.lip_payoff >= 0.0):
            raise ValidationError("payoff Lipschitz constant must be finite and >= 0")

    @property
    def shape(self) -> tuple:
        return self.c.shape


@dataclass(frozen=True)
class TransportPlan:
    """Nonnegative coupling table plus marginal residual diagnostics.

    Entries within -1e-12 of zero are clamped to exactly zero at
    construction; anything more negative is rejected.
    """

    p: np.ndarray
    row_residual: float = 0.0
    col_residual: float = 0.0

    @classmethod
    def from_table(cls, p, mu: Marginal, nu: Marginal) -> "TransportPlan":
        p = np.array(p, dtype=float)
        if p.ndim != 2:
            raise DimensionError("a plan must be a 2-d table")
        if p.shape != (mu.size, nu.size):
            raise DimensionError(
                f"plan is {p.shape}, expected ({mu.size}, {nu.size})")
        if not np.all(np.isfinite(p)):
            raise ValidationError("plan entries must be finite")
        lowest = float(np.min(p))
        if lowest < -CONSTRUCTION_TOL:
            raise ValidationError(f"plan has a negative entry ({lowest:.3e})")
        np.clip(p, 0.0, None, out=p)
        mass = float(np.sum(p))
        if abs(mass - 1.0) > CONSTRUCTION_TOL:
            raise ValidationError(f"plan mass is {mass!r}, not 1")
        row = float(np.max(np.abs(p.sum(axis=1) - mu.weights)))
        col = float(np.max(np.abs(p.sum(axis=0) - nu.weights)))
        return cls(p=p, row_residual=row, col_residual=col)

    def __post_init__(self):
        object.__setattr__(self, "p", _frozen(self.p))

    @property
    def is_feasible(self) -> bool:
        return (self.row_residual <= FEASIBILITY_TOL
                and self.col_residual <= FEASIBILITY_TOL)

    @property
    def shape(self) -> tuple:
        return self.p.shape


def kl_divergence(eta: TransportPlan, rho: TransportPlan) -> float:
    """KL(eta | rho) = sum eta * log(eta / rho), an extended real >= 0.

    Returns math.inf when eta puts mass where rho has none.
    """
    if eta.shape != rho.shape:
        raise DimensionError(f"shapes differ: {eta.shape} vs {rho.shape}")
    e, r = eta.p, rho.p
    mask = e > 0.0
    if np.any(r[mask] == 0.0):
        return math.inf
    vals = e[mask] * (np.log(e[mask]) - np.log(r[mask]))
    return float(np.sum(vals))


def product_plan(mu: Marginal, nu: Marginal) -> TransportPlan:
    """The independent coupling p(i,j) = mu_i * nu_j."""
    return TransportPlan.from_table(np.outer(mu.weights, nu.weights), mu, nu)


def relative_entropy(pi: TransportPlan, mu: Marginal, nu: Marginal) -> float:
    """-KL(pi | mu x nu). Nonpositive; zero exactly at the product plan."""
    if not pi.is_feasible:
        raise FeasibilityError(
            f"plan residuals ({pi.row_residual:.2e}, {pi.col_residual:.2e}) "
            f"exceed {FEASIBILITY_TOL}")
    return -kl_divergence(pi, product_plan(mu, nu))


def linear_cost(pi: TransportPlan, cost: CostModel) -> float:
    """sum c(i,j) * p(i,j), the transport objective of the plan."""
    if pi.shape != cost.shape:
        raise DimensionError(f"shapes differ: {pi.shape} vs {cost.shape}")
    return float(np.sum(cost.c * pi.p))


def mean_payoff(pi: TransportPlan, cost: CostModel) -> float:
    """sum payoff(i,j) * p(i,j) = -linear_cost(pi, cost)."""
    if pi.shape != cost.shape:
        raise DimensionError(f"shapes differ: {pi.shape} vs {cost.shape}")
    return float(np.sum(cost.payoff * pi.p))


def require_positive(name: str, value: float):
    if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
        raise ArgumentError(f"{name} must be a positive finite number, got {value!r}")
