"""Small numeric kernels shared across modules.

All exponential sums go through :func:`logsumexp` (max-shifted), so values
that scale with the inverse temperature never leave the log domain.
"""

from __future__ import annotations

import numpy as np

__all__ = ["logsumexp", "pairwise_lipschitz", "payoff_lipschitz"]


def logsumexp(z: np.ndarray, axis: int | None = None) -> np.ndarray | float:
    """log(sum(exp(z))) along ``axis``, max-shifted; dtype-preserving.

    Finite for arbitrarily large-magnitude finite inputs.
    """
    z = np.asarray(z)
    zmax = np.max(z, axis=axis, keepdims=True)
    out = np.log(np.sum(np.exp(z - zmax), axis=axis)) + np.squeeze(zmax, axis=axis)
    return out


def pairwise_lipschitz(f: np.ndarray, dist: np.ndarray) -> float:
    """max over i != j of |f(i) - f(j)| / dist(i, j)."""
    f = np.asarray(f, dtype=float)
    n = f.shape[0]
    if n < 2:
        return 0.0
    num = np.abs(f[:, None] - f[None, :])
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = num / dist
    ratio[np.eye(n, dtype=bool)] = 0.0
    return float(np.max(ratio))


def payoff_lipschitz(table: np.ndarray, dist_x: np.ndarray, dist_y: np.ndarray) -> float:
    """Lipschitz constant of an n x m table for the sum metric d_X + d_Y.

    max over cell pairs ((i,j) != (k,l)) of
    |table(i,j) - table(k,l)| / (d_X(i,k) + d_Y(j,l)).
    """
    t = np.asarray(table, dtype=float)
    n, m = t.shape
    num = np.abs(t[:, :, None, None] - t[None, None, :, :])
    den = dist_x[:, None, :, None] + dist_y[None, :, None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = num / den
    same = den == 0.0  # only the diagonal (i,j)==(k,l), where num is 0 too
    ratio[same] = 0.0
    return float(np.max(ratio))
