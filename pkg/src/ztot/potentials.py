"""Schrödinger potential pairs and Gibbs plans at inverse temperature beta.

The pair (phi, psi) solves the two normalization families

    logsumexp_i [beta*payoff(i,j) + phi(i) + psi(j) + log mu_i] = 0   for all j
    logsumexp_j [beta*payoff(i,j) + phi(i) + psi(j) + log nu_j] = 0   for all i

and the Gibbs plan is p(i,j) = exp(beta*payoff + phi + psi) * mu_i * nu_j.

Everything runs in the log domain with max-shifted reductions, so beta up
to ~1e6 never overflows. The default solver alternates full updates
(log-domain Sinkhorn); :func:`fixed_point_s` is the damped contraction
scheme kept as an independent cross-validation path.

Gauge: pairs are normalized so max(phi) = 0, with the compensating
constant folded into psi. ``psi_offset`` (= max(psi) under that gauge) is
the additive normalization constant; for a converged pair it must lie in

    [-beta*max(payoff),  beta*(lip(payoff)*diam(X) - min(payoff))].
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ._num import logsumexp, pairwise_lipschitz
from .errors import ArgumentError, ConvergenceError, FeasibilityError, InvariantError
from .measure import CostModel, Marginal, TransportPlan, mean_payoff, relative_entropy

log = logging.getLogger("ztot.potentials")

DEFAULT_TOL = 1e-10
MAX_SWEEPS = 10 ** 6
LIP_SLACK = 1e-9
STALE_PAIR_TOL = 1e-8

__all__ = [
    "PotentialPair", "SolveReport", "t_mu", "t_nu", "fixed_point_s",
    "schrodinger_solve", "schrodinger_residual", "gibbs_log_density",
    "gibbs_plan", "pressure", "lipschitz_constant", "psi_offset_bounds",
]


@dataclass(frozen=True)
class PotentialPair:
    """A gauged potential pair at one inverse temperature."""

    phi: np.ndarray
    psi: np.ndarray
    beta: float
    gauge: str = "MaxPhiZero"
    psi_offset: float = 0.0

    def __post_init__(self):
        for name in ("phi", "psi"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr = arr.copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def scaled_phi(self) -> np.ndarray:
        return self.phi / self.beta

    @property
    def scaled_psi(self) -> np.ndarray:
        return self.psi / self.beta


@dataclass(frozen=True)
class SolveReport:
    iterations: int
    residual: float
    s_weight: float
    warm_started: bool
    deltas: tuple = field(default=(), repr=False)  # sup-norm update sizes

    def __post_init__(self):
        if self.residual < 0 or self.iterations < 0:
            raise InvariantError("report fields out of range")


def lipschitz_constant(f: np.ndarray, dist: np.ndarray) -> float:
    """max over i != j of |f(i) - f(j)| / dist(i, j)."""
    return pairwise_lipschitz(f, dist)


def _check_args(beta: float, tol: float | None = None, s: float | None = None,
                s_open: bool = False):
    if not (np.isfinite(beta) and beta > 0):
        raise ArgumentError(f"beta must be positive and finite, got {beta!r}")
    if tol is not None and not (np.isfinite(tol) and tol > 0):
        raise ArgumentError(f"tol must be positive, got {tol!r}")
    if s is not None:
        hi_ok = s < 1.0 if s_open else s <= 1.0
        if not (0.0 < s and hi_ok):
            bound = "(0, 1)" if s_open else "(0, 1]"
            raise ArgumentError(f"s must lie in {bound}, got {s!r}")


def t_mu(cost: CostModel, mu: Marginal, f: np.ndarray, beta: float,
         s: float = 1.0) -> np.ndarray:
    """Damped log-integral operator sending a vector on X to one on Y:

    g(j) = -logsumexp_i [beta*payoff(i,j) + s*f(i) + log mu_i].
    """
    _check_args(beta, s=s)
    f = np.asarray(f, dtype=float)
    if f.shape != (mu.size,):
        raise ArgumentError(f"f has shape {f.shape}, expected ({mu.size},)")
    if not np.all(np.isfinite(f)):
        raise ArgumentError("f must be finite")
    z = beta * cost.payoff + (s * f + mu.log_weights)[:, None]
    return -logsumexp(z, axis=0)


def t_nu(cost: CostModel, nu: Marginal, g: np.ndarray, beta: float,
         s: float = 1.0) -> np.ndarray:
    """Mirror of :func:`t_mu`: f(i) = -logsumexp_j [beta*payoff + s*g + log nu_j]."""
    _check_args(beta, s=s)
    g = np.asarray(g, dtype=float)
    if g.shape != (nu.size,):
        raise ArgumentError(f"g has shape {g.shape}, expected ({nu.size},)")
    if not np.all(np.isfinite(g)):
        raise ArgumentError("g must be finite")
    z = beta * cost.payoff + (s * g + nu.log_weights)[None, :]
    return -logsumexp(z, axis=1)


def fixed_point_s(cost: CostModel, mu: Marginal, nu: Marginal, s: float,
                  beta: float, tol: float,
                  max_iters: int = MAX_SWEEPS) -> tuple:
    """Banach iteration for the damped composed operator at 0 < s < 1.

    Starts from the zero vector; the composed map is an s^2-contraction in
    sup norm, so the a-posteriori stop rule ``s^2 * |delta| <= tol``
    guarantees the returned phi_s has residual <= tol.

    Returns (phi_s, psi_s, SolveReport) with the full delta history in the
    report for convergence-rate diagnostics.
    """
    _check_args(beta, tol=tol, s=s, s_open=True)
    q = s * s
    f = np.zeros(mu.size)
    deltas = []
    for it in range(1, max_iters + 1):
        g = t_mu(cost, mu, f, beta, s)
        f_new = t_nu(cost, nu, g, beta, s)
        delta = float(np.max(np.abs(f_new - f)))
        deltas.append(delta)
        f = f_new
        if q * delta <= tol:
            break
    else:
        raise ConvergenceError("damped fixed-point iteration did not converge",
                               residual=q * deltas[-1], iterations=max_iters,
                               beta=beta)
    residual = float(np.max(np.abs(
        t_nu(cost, nu, t_mu(cost, mu, f, beta, s), beta, s) - f)))
    psi_s = t_mu(cost, mu, f, beta, s)
    report = SolveReport(iterations=it, residual=residual, s_weight=s,
                         warm_started=False, deltas=tuple(deltas))
    return f, psi_s, report


def schrodinger_residual(phi: np.ndarray, psi: np.ndarray, cost: CostModel,
                         mu: Marginal, nu: Marginal, beta: float) -> float:
    """Joint normalization residual of a pair, in the log domain."""
    z = beta * cost.payoff + phi[:, None] + psi[None, :]
    ry = logsumexp(z + mu.log_weights[:, None], axis=0)
    rx = logsumexp(z + nu.log_weights[None, :], axis=1)
    return float(max(np.max(np.abs(ry)), np.max(np.abs(rx))))


def psi_offset_bounds(cost: CostModel, beta: float) -> tuple:
    """Valid range of the additive constant absorbed into psi."""
    a = cost.payoff
    lo = -beta * float(np.max(a))
    hi = beta * (cost.lip_payoff * cost.x_space.diameter - float(np.min(a)))
    return lo, hi


def schrodinger_solve(cost: CostModel, mu: Marginal, nu: Marginal, beta: float,
                      tol: float = DEFAULT_TOL,
                      warm_start: PotentialPair | None = None,
                      max_sweeps: int = MAX_SWEEPS) -> tuple:
    """Solve both normalization families to ``residual <= tol``.

    Direct alternating full updates (log-domain Sinkhorn). One sweep is a
    (psi, phi) update pair. The update delta equals the stale family's
    residual exactly, so sweeps are cheap; the returned residual is always
    re-verified against :func:`schrodinger_residual`.

    A warm start is rescaled by beta / warm.beta (annealing relies on this).
    Non-convergence within ``max_sweeps`` raises ConvergenceError carrying
    the last verified residual.
    """
    _check_args(beta, tol=tol)
    n, m = cost.shape
    if mu.size != n or nu.size != m:
        raise ArgumentError("marginal sizes do not match the cost table")

    if warm_start is not None:
        phi = np.array(warm_start.phi, dtype=float) * (beta / warm_start.beta)
    else:
        phi = np.zeros(n)

    b_mu = beta * cost.payoff + mu.log_weights[:, None]   # + phi -> psi update
    b_nu = beta * cost.payoff + nu.log_weights[None, :]   # + psi -> phi update

    # preallocated sweep buffers
    t_y = np.empty((n, m))
    t_x = np.empty((n, m))
    psi = np.empty(m)
    phi_new = np.empty(n)

    def update_psi(phi_vec):
        np.add(b_mu, phi_vec[:, None], out=t_y)
        mx = t_y.max(axis=0)
        np.subtract(t_y, mx[None, :], out=t_y)
        np.exp(t_y, out=t_y)
        np.log(t_y.sum(axis=0), out=psi)
        np.add(psi, mx, out=psi)
        np.negative(psi, out=psi)

    def update_phi():
        np.add(b_nu, psi[None, :], out=t_x)
        mx = t_x.max(axis=1)
        np.subtract(t_x, mx[:, None], out=t_x)
        np.exp(t_x, out=t_x)
        np.log(t_x.sum(axis=1), out=phi_new)
        np.add(phi_new, mx, out=phi_new)
        np.negative(phi_new, out=phi_new)

    update_psi(phi)
    sweeps = 0
    target = tol
    verified: float | None = None
    while sweeps < max_sweeps:
        update_phi()
        dx = float(np.max(np.abs(phi_new - phi)))
        if dx <= target:
            # pair (phi, psi) has a fresh psi family; dx is its stale-side
            # residual. Verify the full recomputed residual before accepting.
            verified = schrodinger_residual(phi, psi, cost, mu, nu, beta)
            if verified <= tol:
                break
            target = max(dx * 0.5, 1e-300)
            if dx == 0.0:
                raise ConvergenceError(
                    "residual floor above tol at this beta "
                    f"(achieved {verified:.3e}, requested {tol:.3e})",
                    residual=verified, iterations=sweeps, beta=beta)
        phi, phi_new = phi_new, phi
        update_psi(phi)
        sweeps += 1
    else:
        last = verified if verified is not None else schrodinger_residual(
            phi, psi, cost, mu, nu, beta)
        raise ConvergenceError(
            f"no convergence after {max_sweeps} sweeps "
            f"(residual {last:.3e}, tol {tol:.3e})",
            residual=float(last), iterations=max_sweeps, beta=beta)

    # gauge: max(phi) = 0, compensating constant folded into psi
    d = float(np.max(phi))
    phi_g = phi - d
    psi_g = psi + d
    pair = PotentialPair(phi=phi_g, psi=psi_g, beta=beta,
                         psi_offset=float(np.max(psi_g)))
    _validate_pair(pair, cost)
    report = SolveReport(iterations=sweeps, residual=float(verified),
                         s_weight=1.0, warm_started=warm_start is not None)
    log.debug("solve beta=%g: %d sweeps, residual %.3e", beta, sweeps, verified)
    return pair, report


def _validate_pair(pair: PotentialPair, cost: CostModel):
    bound = pair.beta * cost.lip_payoff + LIP_SLACK
    lip_phi = pairwise_lipschitz(pair.phi, cost.x_space.dist)
    lip_psi = pairwise_lipschitz(pair.psi, cost.y_space.dist)
    if lip_phi > bound or lip_psi > bound:
        raise InvariantError(
            f"potential Lipschitz constants ({lip_phi:.6g}, {lip_psi:.6g}) "
            f"exceed beta*lip(payoff) = {bound:.6g}")
    lo, hi = psi_offset_bounds(cost, pair.beta)
    slack = 1e-8 * (1.0 + abs(lo) + abs(hi))
    if not (lo - slack <= pair.psi_offset <= hi + slack):
        raise InvariantError(
            f"psi offset {pair.psi_offset:.6g} outside [{lo:.6g}, {hi:.6g}]")


def gibbs_log_density(pair: PotentialPair, cost: CostModel, mu: Marginal,
                      nu: Marginal) -> np.ndarray:
    """Log of the Gibbs plan table: beta*payoff + phi + psi + log mu + log nu."""
    return (pair.beta * cost.payoff + pair.phi[:, None] + pair.psi[None, :]
            + mu.log_weights[:, None] + nu.log_weights[None, :])


def gibbs_plan(pair: PotentialPair, cost: CostModel, mu: Marginal,
               nu: Marginal) -> TransportPlan:
    """Exponentiate the log density into a feasible TransportPlan.

    Requires a converged pair (residual <= 1e-8); the resulting marginal
    residuals are bounded by ~10x the pair residual.
    """
    res = schrodinger_residual(pair.phi, pair.psi, cost, mu, nu, pair.beta)
    if res > STALE_PAIR_TOL:
        raise FeasibilityError(
            f"pair residual {res:.3e} exceeds {STALE_PAIR_TOL}; "
            "solve to convergence before building the plan")
    plan = TransportPlan.from_table(
        np.exp(gibbs_log_density(pair, cost, mu, nu)), mu, nu)
    bound = 10.0 * res + 1e-14
    if plan.row_residual > bound or plan.col_residual > bound:
        raise InvariantError(
            f"plan residuals ({plan.row_residual:.3e}, {plan.col_residual:.3e}) "
            f"exceed 10x pair residual {res:.3e}")
    return plan


def pressure(pair: PotentialPair, cost: CostModel, mu: Marginal, nu: Marginal,
             check_tol: float | None = None) -> float:
    """Value of the entropic variational problem at beta, from the dual side:

    -sum phi*mu - sum psi*nu.

    With ``check_tol`` set, cross-checks against the primal form
    ``beta * mean_payoff(gibbs) + relative_entropy(gibbs)``.
    """
    value = float(-(pair.phi * mu.weights).sum() - (pair.psi * nu.weights).sum())
    if check_tol is not None:
        plan = gibbs_plan(pair, cost, mu, nu)
        primal = pair.beta * mean_payoff(plan, cost) + relative_entropy(plan, mu, nu)
        if abs(value - primal) > check_tol:
            raise InvariantError(
                f"pressure identity violated: dual {value!r} vs primal "
                f"{primal!r} (tol {check_tol:.3e})")
    return value
