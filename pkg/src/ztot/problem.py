"""Problem file loading: the JSON instance format shared by the CLI.

Schema (field names are part of the CLI contract)::

    {
      "X":    {"points": [...], "dist": [[...]]},
      "Y":    {"points": [...], "dist": [[...]]}   or the string "same",
      "mu":   [...],
      "nu":   [...],
      "cost": [[...]]
    }

``"Y": "same"`` declares Y = X, which is what enables the
Kantorovich-Rubinstein checks downstream.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ParseError, ZtotError
from .measure import CostModel, Marginal, MetricSample

__all__ = ["Problem", "load_problem", "problem_from_dict"]


@dataclass(frozen=True)
class Problem:
    """A fully validated transport instance."""

    x_space: MetricSample
    y_space: MetricSample
    mu: Marginal
    nu: Marginal
    cost: CostModel
    y_is_x: bool = False

    @property
    def shape(self) -> tuple:
        return (self.x_space.size, self.y_space.size)

    def cost_is_distance(self, tol: float = 1e-12) -> bool:
        """True when Y = X was declared and the cost table equals the metric."""
        if not self.y_is_x:
            return False
        return bool(np.max(np.abs(self.cost.c - self.x_space.dist)) <= tol)


def _space_from_dict(obj, label: str, validate_triangle: bool) -> MetricSample:
    if not isinstance(obj, dict):
        raise ParseError("expected an object with 'points' and 'dist'", field=label)
    for key in ("points", "dist"):
        if key not in obj:
            raise ParseError(f"missing '{key}'", field=label)
    try:
        return MetricSample(points=obj["points"], dist=obj["dist"],
                            validate_triangle=validate_triangle)
    except ZtotError:
        raise
    except (TypeError, ValueError) as exc:
        raise ParseError(str(exc), field=label) from exc


def problem_from_dict(doc: dict, validate_triangle: bool = True) -> Problem:
    if not isinstance(doc, dict):
        raise ParseError("top-level value must be an object")
    for key in ("X", "Y", "mu", "nu", "cost"):
        if key not in doc:
            raise ParseError("missing required field", field=key)
    x_space = _space_from_dict(doc["X"], "X", validate_triangle)
    y_is_x = doc["Y"] == "same"
    if y_is_x:
        y_space = x_space
    else:
        y_space = _space_from_dict(doc["Y"], "Y", validate_triangle)
    try:
        mu = Marginal(weights=doc["mu"])
    except (TypeError, ValueError) as exc:
        raise ParseError(str(exc), field="mu") from exc
    try:
        nu = Marginal(weights=doc["nu"])
    except (TypeError, ValueError) as exc:
        raise ParseError(str(exc), field="nu") from exc
    if mu.size != x_space.size:
        raise ParseError(f"mu has {mu.size} weights for {x_space.size} points",
                         field="mu")
    if nu.size != y_space.size:
        raise ParseError(f"nu has {nu.size} weights for {y_space.size} points",
                         field="nu")
    try:
        cost = CostModel.from_table(np.asarray(doc["cost"], dtype=float),
                                    x_space, y_space)
    except (TypeError, ValueError) as exc:
        raise ParseError(str(exc), field="cost") from exc
    return Problem(x_space=x_space, y_space=y_space, mu=mu, nu=nu,
                   cost=cost, y_is_x=y_is_x)


def load_problem(path: str | Path, validate_triangle: bool = True) -> Problem:
    """Parse and validate a problem file; ParseError carries field context."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: "
                         f"{exc.msg}") from exc
    return problem_from_dict(doc, validate_triangle=validate_triangle)
