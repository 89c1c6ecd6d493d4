"""Annealing beta to +infinity: schedules, warm-started solves, the
pressure-excess curve, and extraction of the zero-temperature limit.

The key monitored quantity is the excess

    pressure(beta) - beta * m        (m = best achievable mean payoff),

which is non-increasing in beta and converges to the largest entropy among
optimal plans. The limit objects are read off the final rung: the scaled
potentials converge to a Kantorovich dual pair and the Gibbs plans to the
maximum-entropy optimal plan.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ._num import pairwise_lipschitz
from .duality import c_transform_to_y
from .errors import ArgumentError, CapacityError, InvariantError
from .measure import TransportPlan, mean_payoff, relative_entropy
from .oracle import OracleCap, exact_ot
from .potentials import PotentialPair, gibbs_plan, pressure, schrodinger_solve
from .problem import Problem

log = logging.getLogger("ztot.annealing")

MONOTONE_SLACK = 1e-9
EQUICONTINUITY_SLACK = 1e-9
DEFAULT_BETA_MAX = 2.0 ** 14
DEFAULT_FACTOR = 2.0
DEFAULT_LIMIT_TOL = 1e-6
HMAX_CONSISTENCY_TOL = 1e-3
LIMIT_SLACK_TOL = 1e-6

__all__ = ["Schedule", "TrajectoryPoint", "Trajectory", "ZeroTempResult",
           "default_schedule", "anneal", "extract_limit", "pressure_excess",
           "trajectory_csv_rows", "CSV_HEADER"]

CSV_HEADER = ("beta", "pressure", "excess", "entropy", "cost", "maxPhiDelta")


@dataclass(frozen=True)
class Schedule:
    betas: tuple

    def __post_init__(self):
        betas = tuple(float(b) for b in self.betas)
        object.__setattr__(self, "betas", betas)
        if not betas:
            raise ArgumentError("schedule must not be empty")
        if any(b2 <= b1 for b1, b2 in zip(betas, betas[1:])):
            raise ArgumentError("schedule must be strictly increasing")
        if betas[0] < 1e-6:
            raise ArgumentError("schedule must start at beta >= 1e-6")
        if betas[-1] > 1e7:
            raise ArgumentError("schedule must end at beta <= 1e7")

    def __len__(self) -> int:
        return len(self.betas)


def default_schedule(beta_max: float = DEFAULT_BETA_MAX,
                     factor: float = DEFAULT_FACTOR) -> Schedule:
    """Geometric grid 1, factor, factor^2, ... capped at beta_max (included)."""
    if not (np.isfinite(beta_max) and beta_max > 1):
        raise ArgumentError(f"beta_max must exceed 1, got {beta_max!r}")
    if not (np.isfinite(factor) and factor > 1):
        raise ArgumentError(f"factor must exceed 1, got {factor!r}")
    betas = [1.0]
    while betas[-1] * factor < beta_max:
        betas.append(betas[-1] * factor)
    if betas[-1] < beta_max:
        betas.append(float(beta_max))
    return Schedule(betas=tuple(betas))


@dataclass(frozen=True)
class TrajectoryPoint:
    beta: float
    scaled_phi: np.ndarray
    scaled_psi: np.ndarray
    plan: TransportPlan
    pressure: float
    excess: float
    entropy: float
    cost_value: float
    pair: PotentialPair = field(repr=False, default=None)
    sweeps: int = 0


@dataclass(frozen=True)
class Trajectory:
    problem: Problem
    points: tuple
    m_payoff: float
    m_payoff_exact: bool

    def __post_init__(self):
        lip_bound = self.problem.cost.lip_payoff + EQUICONTINUITY_SLACK
        for pt in self.points:
            lip = pairwise_lipschitz(pt.scaled_phi, self.problem.x_space.dist)
            if lip > lip_bound:
                raise InvariantError(
                    f"scaled potential at beta={pt.beta:g} has Lipschitz "
                    f"constant {lip:.6g} > {lip_bound:.6g}")
        if self.m_payoff_exact:
            _assert_monotone(self.points)

    def __len__(self) -> int:
        return len(self.points)


def _assert_monotone(points):
    for prev, cur in zip(points, points[1:]):
        if cur.excess > prev.excess + MONOTONE_SLACK:
            raise InvariantError(
                f"pressure excess increased from {prev.excess!r} at "
                f"beta={prev.beta:g} to {cur.excess!r} at beta={cur.beta:g}; "
                "solver tolerance is too loose for this schedule")


@dataclass(frozen=True)
class ZeroTempResult:
    phi: np.ndarray            # limit dual potential on X
    psi: np.ndarray            # its cost transform on Y (feasible by build)
    plan: TransportPlan
    h_max_estimate: float
    converged: bool
    deltas: dict

    def __post_init__(self):
        if self.h_max_estimate > 1e-9:
            raise InvariantError(
                f"entropy-limit estimate {self.h_max_estimate!r} is positive")


def anneal(problem: Problem, schedule: Schedule, tol: float = 1e-10,
           cap: OracleCap = OracleCap()) -> Trajectory:
    """Warm-started solves along the schedule; returns the full trajectory.

    The best mean payoff comes from the exact oracle when the instance fits
    its caps; otherwise it is approximated by the final Gibbs plan and the
    trajectory is flagged, which also disables the hard monotonicity check
    (an approximate baseline shifts the excess column by beta * error).
    """
    records = []
    pair = None
    for beta in schedule.betas:
        pair, report = schrodinger_solve(problem.cost, problem.mu, problem.nu,
                                         beta, tol=tol, warm_start=pair)
        plan = gibbs_plan(pair, problem.cost, problem.mu, problem.nu)
        p_val = pressure(pair, problem.cost, problem.mu, problem.nu,
                         check_tol=10.0 * max(tol, report.residual))
        records.append((pair, report, plan, p_val))
        log.info("beta=%g: %d sweeps (warm=%s), residual %.2e, pressure %.6g",
                 beta, report.iterations, report.warm_started, report.residual,
                 p_val)

    try:
        m_payoff = exact_ot(problem.mu, problem.nu, problem.cost, cap).m_payoff
        m_exact = True
    except CapacityError:
        m_payoff = mean_payoff(records[-1][2], problem.cost)
        m_exact = False
        log.warning("instance over oracle caps; using the final-beta plan's "
                    "mean payoff %.6g as an approximate baseline", m_payoff)

    points = []
    for pair, report, plan, p_val in records:
        points.append(TrajectoryPoint(
            beta=pair.beta,
            scaled_phi=pair.scaled_phi,
            scaled_psi=pair.scaled_psi,
            plan=plan,
            pressure=p_val,
            excess=p_val - pair.beta * m_payoff,
            entropy=relative_entropy(plan, problem.mu, problem.nu),
            cost_value=float(np.sum(problem.cost.c * plan.p)),
            pair=pair,
            sweeps=report.iterations,
        ))
    return Trajectory(problem=problem, points=tuple(points),
                      m_payoff=m_payoff, m_payoff_exact=m_exact)


def pressure_excess(trajectory: Trajectory) -> list:
    """The (beta, excess) column; re-asserts monotone non-increase."""
    if trajectory.m_payoff_exact:
        _assert_monotone(trajectory.points)
    else:
        log.warning("excess baseline is approximate; skipping the hard "
                    "monotonicity assertion")
    return [(pt.beta, pt.excess) for pt in trajectory.points]


def extract_limit(trajectory: Trajectory,
                  limit_tol: float = DEFAULT_LIMIT_TOL) -> ZeroTempResult:
    """Read the zero-temperature limit off the final trajectory rungs.

    Convergence holds when the last two successive sup-norm deltas of the
    scaled potentials and of the plan are all <= limit_tol, and the excess
    agrees with the final plan's entropy. Never fabricates a limit: an
    unconverged trajectory comes back with converged=False.

    The returned psi is the cost transform of the limit phi, which is
    feasible by construction; the raw scaled psi at finite beta sits below
    it by O(log(min weight) / beta).
    """
    if len(trajectory) < 3:
        raise ArgumentError("need at least 3 trajectory points to extract "
                            "a limit")
    last3 = trajectory.points[-3:]

    def sup(a, b):
        return float(np.max(np.abs(a - b)))

    deltas = {
        "phi": max(sup(last3[1].scaled_phi, last3[0].scaled_phi),
                   sup(last3[2].scaled_phi, last3[1].scaled_phi)),
        "psi": max(sup(last3[1].scaled_psi, last3[0].scaled_psi),
                   sup(last3[2].scaled_psi, last3[1].scaled_psi)),
        "plan": max(sup(last3[1].plan.p, last3[0].plan.p),
                    sup(last3[2].plan.p, last3[1].plan.p)),
    }
    final = trajectory.points[-1]
    h_consistent = abs(final.excess - final.entropy) <= HMAX_CONSISTENCY_TOL
    converged = all(d <= limit_tol for d in deltas.values()) and h_consistent

    problem = trajectory.problem
    phi = np.asarray(final.scaled_phi, dtype=float)
    psi = c_transform_to_y(phi, problem.cost)
    worst = float(np.min(problem.cost.c - phi[:, None] - psi[None, :]))
    if worst < -LIMIT_SLACK_TOL:
        raise InvariantError(f"limit pair violates feasibility by {worst:.3e}")
    if not final.plan.is_feasible:
        raise InvariantError("final plan lost feasibility")
    if not converged:
        log.warning("limit not converged: deltas %s, |excess - entropy| = %.3e",
                    deltas, abs(final.excess - final.entropy))
    return ZeroTempResult(phi=phi, psi=psi, plan=final.plan,
                          h_max_estimate=final.excess, converged=converged,
                          deltas=deltas)


def trajectory_csv_rows(trajectory: Trajectory) -> list:
    """Rows for the curve CSV: beta, pressure, excess, entropy, cost,
    maxPhiDelta (sup change of the scaled potential; nan on the first row)."""
    rows = []
    prev_phi = None
    for pt in trajectory.points:
        if prev_phi is None:
            delta = float("nan")
        else:
            delta = float(np.max(np.abs(pt.scaled_phi - prev_phi)))
        rows.append((pt.beta, pt.pressure, pt.excess, pt.entropy,
                     pt.cost_value, delta))
        prev_phi = pt.scaled_phi
    return rows
