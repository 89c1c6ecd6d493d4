"""Batch front door: load a problem file, run a pipeline, write reports.

Commands: solve, anneal, duality, ldp, pressure-curve, oracle, validate,
version. JSON payloads are byte-deterministic (floats at 17 significant
digits, insertion-ordered keys, no timestamps); CSV uses a header row,
comma separator, "." decimal point, and LF line endings. Logs go to stderr
only. Exit codes: 0 ok, 1 parse/usage error, 2 invariant violation,
3 non-convergence, 4 capacity error.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .annealing import (CSV_HEADER, Schedule, default_schedule, anneal,
                        extract_limit, trajectory_csv_rows)
from .duality import DualPair, c_transform_to_x, c_transform_to_y, dual_value
from .errors import (ArgumentError, CapacityError, ConvergenceError,
                     ParseError, ZtotError)
from .measure import linear_cost, relative_entropy
from .oracle import OracleCap, exact_ot, max_entropy_optimal
from .potentials import gibbs_plan, pressure, schrodinger_solve
from .problem import load_problem
from .deviations import empirical_rate, rate_function

log = logging.getLogger("ztot.cli")

PROBLEM_FORMAT_VERSION = 1
REPORT_FORMAT_VERSION = 1

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_INVARIANT = 2
EXIT_NONCONVERGENCE = 3
EXIT_CAPACITY = 4


# ---------------------------------------------------------------- output

def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        if math.isnan(x):
            return "nan"
        raise ZtotError("refusing to serialize a non-finite value")
    return format(float(x), ".17g")


def render_json(value, indent: int = 0) -> str:
    """Deterministic JSON: floats via %.17g, keys in insertion order."""
    pad = "  " * indent
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = []
        for k, v in value.items():
            items.append(f'{pad}  "{k}": {render_json(v, indent + 1)}')
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(value, (list, tuple)):
        seq = list(value)
        if not seq:
            return "[]"
        flat = all(isinstance(v, (int, float, bool)) or v is None for v in seq)
        if flat:
            return "[" + ", ".join(render_json(v) for v in seq) + "]"
        items = [f"{pad}  {render_json(v, indent + 1)}" for v in seq]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return "null"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return _fmt_float(float(value))
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(value, np.ndarray):
        return render_json(value.tolist(), indent)
    raise ZtotError(f"cannot serialize {type(value).__name__}")


def render_csv(header, rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for cell in row:
            if isinstance(cell, str):
                cells.append(cell)
            elif isinstance(cell, (int, np.integer)):
                cells.append(str(int(cell)))
            else:
                cells.append(_fmt_float(float(cell)))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def _vec(a) -> list:
    return [float(x) for x in np.asarray(a).ravel()]


def _table(a) -> list:
    return [[float(x) for x in row] for row in np.asarray(a)]


def _write(text: str, path: str | None):
    if path is None:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        Path(path).write_text(text if text.endswith("\n") else text + "\n")
        log.info("wrote %s", path)


def _csv_sibling(out: str) -> str:
    p = Path(out)
    if p.suffix == ".csv":
        return str(p)
    return str(p.with_suffix(".csv")) if p.suffix else str(p) + ".csv"


# ---------------------------------------------------------------- commands

def _plan_payload(plan) -> dict:
    return {
        "plan": _table(plan.p),
        "rowResidual": plan.row_residual,
        "colResidual": plan.col_residual,
    }


def cmd_solve(args, problem) -> int:
    pair, report = schrodinger_solve(problem.cost, problem.mu, problem.nu,
                                     beta=args.beta, tol=args.tol)
    plan = gibbs_plan(pair, problem.cost, problem.mu, problem.nu)
    p_val = pressure(pair, problem.cost, problem.mu, problem.nu,
                     check_tol=10.0 * max(args.tol, report.residual))
    doc = {
        "beta": pair.beta,
        "gauge": pair.gauge,
        "phi": _vec(pair.phi),
        "psi": _vec(pair.psi),
        "psiOffset": pair.psi_offset,
        "pressure": p_val,
        "entropy": relative_entropy(plan, problem.mu, problem.nu),
        "cost": linear_cost(plan, problem.cost),
        **_plan_payload(plan),
        "iterations": report.iterations,
        "residual": report.residual,
    }
    _write(render_json(doc), args.out)
    return EXIT_OK


def _run_annealing(args, problem):
    schedule = default_schedule(beta_max=args.beta_max, factor=args.factor)
    cap = OracleCap() if args.oracle_cap is None else OracleCap(
        vertex_max_total=args.oracle_cap)
    trajectory = anneal(problem, schedule, tol=args.tol, cap=cap)
    return trajectory, extract_limit(trajectory)


def _limit_payload(trajectory, result) -> dict:
    return {
        "converged": result.converged,
        "phi": _vec(result.phi),
        "psi": _vec(result.psi),
        "hMaxEstimate": result.h_max_estimate,
        "mPayoff": trajectory.m_payoff,
        "mPayoffExact": trajectory.m_payoff_exact,
        "deltas": {k: float(v) for k, v in result.deltas.items()},
        **_plan_payload(result.plan),
    }


def cmd_anneal(args, problem) -> int:
    trajectory, result = _run_annealing(args, problem)
    json_text = render_json(_limit_payload(trajectory, result))
    csv_text = render_csv(CSV_HEADER, trajectory_csv_rows(trajectory))
    if args.out is not None:
        _write(json_text, args.out)
        _write(csv_text, _csv_sibling(args.out))
    elif args.format == "csv":
        _write(csv_text, None)
    else:
        _write(json_text, None)
    return EXIT_OK


def cmd_pressure_curve(args, problem) -> int:
    trajectory, _ = _run_annealing(args, problem)
    rows = [(pt.beta, pt.excess) for pt in trajectory.points]
    _write(render_csv(("beta", "excess"), rows), args.out)
    return EXIT_OK


def cmd_duality(args, problem) -> int:
    trajectory, result = _run_annealing(args, problem)
    if not result.converged:
        raise ConvergenceError("annealing did not converge to a limit; "
                               "no certificate produced",
                               residual=max(result.deltas.values()),
                               iterations=len(trajectory))
    pair = DualPair.from_potentials(problem.cost, result.phi, result.psi)
    primal = linear_cost(result.plan, problem.cost)
    dual = dual_value(pair, problem.mu, problem.nu)
    conjugate = bool(
        np.max(np.abs(result.psi - c_transform_to_y(result.phi, problem.cost)))
        <= args.tol_conjugate
        and np.max(np.abs(result.phi - c_transform_to_x(result.psi, problem.cost)))
        <= args.tol_conjugate)
    doc = {
        "primalValue": primal,
        "dualValue": dual,
        "gap": primal - dual,
        "feasible": pair.feasible,
        "conjugate": conjugate,
    }
    _write(render_json(doc), args.out)
    return EXIT_OK


def cmd_ldp(args, problem) -> int:
    trajectory, result = _run_annealing(args, problem)
    if not result.converged:
        raise ConvergenceError("annealing did not converge; refusing to "
                               "report decay rates against a guessed limit",
                               residual=max(result.deltas.values()),
                               iterations=len(trajectory))
    rate = rate_function(problem.cost, result.phi, result.psi)
    rows = []
    n, m = problem.shape
    for i in range(n):
        for j in range(m):
            for beta, r in empirical_rate(trajectory, i, j):
                rows.append((beta, f"{i}:{j}", r, rate.table[i, j]))
    _write(render_csv(("beta", "cell", "r_beta", "I"), rows), args.out)
    return EXIT_OK


def cmd_oracle(args, problem) -> int:
    cap = OracleCap() if args.oracle_cap is None else OracleCap(
        vertex_max_total=args.oracle_cap)
    result = exact_ot(problem.mu, problem.nu, problem.cost, cap)
    doc = {
        "alpha": result.alpha,
        "mPayoff": result.m_payoff,
        "method": result.method,
        "vertexCount": len(result.optimal_vertices),
        "vertices": [_table(v.p) for v in result.optimal_vertices],
    }
    try:
        best = max_entropy_optimal(result, problem.mu, problem.nu)
        doc["maxEntropyPlan"] = _table(best.p)
        doc["maxEntropyValue"] = relative_entropy(best, problem.mu, problem.nu)
    except CapacityError as exc:
        doc["maxEntropyPlan"] = None
        doc["maxEntropyNote"] = str(exc)
    _write(render_json(doc), args.out)
    return EXIT_OK


def cmd_validate(args, problem) -> int:
    doc = {
        "valid": True,
        "n": problem.x_space.size,
        "m": problem.y_space.size,
        "yIsX": problem.y_is_x,
        "costIsDistance": problem.cost_is_distance(),
        "lipPayoff": problem.cost.lip_payoff,
        "triangleChecked": not args.no_triangle_check,
    }
    _write(render_json(doc), args.out)
    return EXIT_OK


def cmd_version(args, _problem=None) -> int:
    doc = {
        "artifact": __version__,
        "formats": {
            "problem": PROBLEM_FORMAT_VERSION,
            "report": REPORT_FORMAT_VERSION,
        },
    }
    _write(render_json(doc), args.out)
    return EXIT_OK


# ---------------------------------------------------------------- wiring

class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors are parse errors, exit 1
        self.print_usage(sys.stderr)
        self.exit(EXIT_PARSE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ztot", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_file=True):
        if needs_file:
            p.add_argument("problem", help="problem file (JSON)")
            p.add_argument("--no-triangle-check", action="store_true",
                           help="skip the O(n^3) metric validation")
        p.add_argument("--tol", type=float, default=1e-10,
                       help="solver residual tolerance")
        p.add_argument("--out", default=None, help="output path (default stdout)")
        p.add_argument("--format", choices=("json", "csv"), default=None,
                       help="stdout payload format where a command emits both")

    def annealing_flags(p):
        p.add_argument("--beta-max", type=float, default=2.0 ** 14)
        p.add_argument("--factor", type=float, default=2.0)
        p.add_argument("--oracle-cap", type=int, default=None,
                       help="override the n+m cap of the exact baseline")

    p = sub.add_parser("solve", help="potentials + plan + pressure at one beta")
    common(p)
    p.add_argument("--beta", type=float, required=True)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("anneal", help="trajectory CSV + limit JSON")
    common(p)
    annealing_flags(p)
    p.set_defaults(func=cmd_anneal)

    p = sub.add_parser("duality", help="optimality certificate JSON")
    common(p)
    annealing_flags(p)
    p.add_argument("--tol-conjugate", type=float, default=1e-6,
                   help="tolerance for the conjugacy flag")
    p.set_defaults(func=cmd_duality)

    p = sub.add_parser("ldp", help="decay-rate CSV over the trajectory")
    common(p)
    annealing_flags(p)
    p.set_defaults(func=cmd_ldp)

    p = sub.add_parser("pressure-curve", help="(beta, excess) CSV")
    common(p)
    annealing_flags(p)
    p.set_defaults(func=cmd_pressure_curve)

    p = sub.add_parser("oracle", help="exact desk-scale ground truth JSON")
    common(p)
    p.add_argument("--oracle-cap", type=int, default=None)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("validate", help="run all input invariants and exit")
    common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("version", help="print artifact and format versions")
    common(p, needs_file=False)
    p.set_defaults(func=cmd_version, problem=None)

    return parser


def _configure_logging():
    level = os.environ.get("ZT_LOG_LEVEL", "warn").lower()
    mapping = {"error": logging.ERROR, "warn": logging.WARNING,
               "info": logging.INFO, "debug": logging.DEBUG}
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(
        "%(asctime)s %(name)s %(levelname)s %(message)s"))
    root = logging.getLogger("ztot")
    root.handlers[:] = [handler]
    root.setLevel(mapping.get(level, logging.WARNING))


def main(argv=None) -> int:
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)

    problem = None
    if getattr(args, "problem", None) is not None:
        try:
            problem = load_problem(
                args.problem,
                validate_triangle=not args.no_triangle_check)
        except ParseError as exc:
            log.error("parse error: %s", exc)
            print(f"ztot: parse error: {exc}", file=sys.stderr)
            return EXIT_PARSE
        except ZtotError as exc:
            log.error("invalid input: %s", exc)
            print(f"ztot: invalid input: {exc}", file=sys.stderr)
            return EXIT_INVARIANT

    try:
        return args.func(args, problem)
    except ConvergenceError as exc:
        print(f"ztot: did not converge: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except CapacityError as exc:
        print(f"ztot: over capacity: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except ParseError as exc:
        print(f"ztot: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (ArgumentError, ZtotError) as exc:
        print(f"ztot: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
