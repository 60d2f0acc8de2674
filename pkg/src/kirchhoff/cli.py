"""Command-line front end: ``kirchhoff {solve,curve,profile,constants,verify}``.

Floats are written with 17 significant digits so every value round-trips.
Exit codes: 0 success (an infeasible problem is an answer, not a failure),
1 a verification check failed, 2 invalid input.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import re
import sys
from typing import Any, Sequence

import numpy as np

from . import constants as C
from .ground_state import evaluate_w, ground_state
from .nonlocal_problem import (DegenerateCaseError, NewtonConvergenceError, NoScalarAmplitudeError,
                               ProblemSpec, Variant, bifurcation_curve, log_spaced,
                               newton_solve_discrete, residual_check, solve_exact)
from .quadrature import QuadratureError, beta_oracle, l_constant
from .records import Kind

EXIT_OK, EXIT_FAILED, EXIT_INVALID = 0, 1, 2

DEFAULT_INDICES = ("L:3:3", "L:3:0", "S:1:0", "S:2:0", "S:1:p", "S:0:p", "S:2:p+1",
                   "R:2:4", "M:1:p", "M:2:p+1", "M:2:2p+1", "M:3:p", "M:4:p")


class InvalidInput(ValueError):
    pass


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def _json(obj: Any, indent: int = 0) -> str:
    """JSON text with floats at 17 significant digits and non-finite floats as null."""
    pad, inner = "  " * indent, "  " * (indent + 1)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt(obj) if math.isfinite(obj) else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        body = ",\n".join(f"{inner}{json.dumps(str(k))}: {_json(v, indent + 1)}" for k, v in obj.items())
        return "{\n" + body + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        body = ",\n".join(inner + _json(v, indent + 1) for v in obj)
        return "[\n" + body + "\n" + pad + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _csv(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def _flatten(report: dict, prefix: str = "") -> list[tuple[str, Any]]:
    out = []
    for k, v in report.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.extend(_flatten(v, key + "."))
        elif isinstance(v, (list, tuple)):
            out.extend(_flatten({str(i): x for i, x in enumerate(v)}, key + "."))
        else:
            out.append((key, v))
    return out


def _emit_table(header, rows, fmt_name: str) -> str:
    if fmt_name == "json":
        return _json([dict(zip(header, r)) for r in rows]) + "\n"
    return _csv(header, rows)


def _emit_report(report: dict, fmt_name: str) -> str:
    if fmt_name == "csv":
        return _csv(("key", "value"), [(k, "" if v is None else v) for k, v in _flatten(report)])
    return _json(report) + "\n"


def _alpha_range(text: str) -> tuple[float, float, int]:
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected min:max:count")
    try:
        lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad alpha range {text!r}") from exc
    if not (0 < lo <= hi) or count < 1:
        raise argparse.ArgumentTypeError("need 0 < min <= max and count >= 1")
    return lo, hi, count


_INDEX = re.compile(r"^\s*(?:([0-9.eE+-]+)|(?:([0-9.]*)\s*\*?\s*p)\s*(?:([+-])\s*([0-9.]+))?)\s*$")


def _index_value(text: str, p: float) -> float:
    """A number, or ``a p + b`` written like ``p``, ``p+1``, ``2p+1``."""
    m = _INDEX.match(text)
    if not m:
        raise InvalidInput(f"cannot read index {text!r}")
    number, coef, sign, offset = m.groups()
    if number is not None:
        return float(number)
    value = (float(coef) if coef else 1.0) * p
    if offset is not None:
        value += float(offset) if sign == "+" else -float(offset)
    return value


def _index_spec(text: str) -> tuple[str, str, str]:
    parts = text.split(":")
    if len(parts) != 3 or parts[0].upper() not in {k.value for k in Kind}:
        raise argparse.ArgumentTypeError("expected KIND:k:d with KIND one of L, S, R, M")
    return parts[0].upper(), parts[1], parts[2]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kirchhoff", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, default_format):
        sp.add_argument("--out", metavar="PATH", help="write to PATH instead of stdout")
        sp.add_argument("--format", choices=("csv", "json"), default=default_format)

    solve = sub.add_parser("solve", help="classify and solve one problem")
    solve.add_argument("--p", type=float, required=True)
    solve.add_argument("--q", type=float, required=True)
    solve.add_argument("--n", type=int, required=True)
    solve.add_argument("--lambda", dest="lam", type=float, required=True)
    solve.add_argument("--mesh", type=int, default=128, help="coarsest residual mesh (default 128)")
    solve.add_argument("--tol", type=float, default=1e-10, help="discrete Newton tolerance")
    solve.add_argument("--t", type=float, help="family member to check when q = p - 1")
    common(solve, "json")

    curve = sub.add_parser("curve", help="bifurcation curve lambda(alpha)")
    curve.add_argument("--p", type=float, required=True)
    curve.add_argument("--q", type=float, required=True)
    curve.add_argument("--n", type=int, required=True)
    curve.add_argument("--alpha-range", type=_alpha_range, required=True, metavar="MIN:MAX:COUNT")
    common(curve, "csv")

    profile = sub.add_parser("profile", help="W_p, or u_lambda when q, n and lambda are given")
    profile.add_argument("--p", type=float, required=True)
    profile.add_argument("--q", type=float)
    profile.add_argument("--n", type=int)
    profile.add_argument("--lambda", dest="lam", type=float)
    profile.add_argument("--mesh", type=int, default=64)
    profile.add_argument("--t", type=float, help="family member when q = p - 1")
    common(profile, "csv")

    consts = sub.add_parser("constants", help="moment constants with method and quadrature delta")
    consts.add_argument("--p", type=float, required=True)
    consts.add_argument("--index", type=_index_spec, action="append", metavar="KIND:k:d",
                        help="e.g. S:1:p, M:2:p+1, L:3:0 (repeatable)")
    consts.add_argument("--tol", type=float, default=1e-11, help="quadrature tolerance for L")
    common(consts, "csv")

    ver = sub.add_parser("verify", help="run the full self-check suite")
    ver.add_argument("--p-grid", default="1.5,2,3", help="comma separated exponents")
    common(ver, "json")
    return parser


def _spec(args) -> ProblemSpec:
    try:
        return ProblemSpec(args.p, args.q, args.n, args.lam)
    except ValueError as exc:
        raise InvalidInput(str(exc)) from exc


def cmd_solve(args) -> tuple[str, int]:
    spec = _spec(args)
    if args.mesh < 64 or args.mesh % 2:
        raise InvalidInput("--mesh must be an even integer >= 64")
    sol = solve_exact(spec)
    m = sol.m_constant
    report: dict[str, Any] = {
        "command": "solve", "p": spec.p, "q": spec.q, "n": spec.n, "lambda": spec.lam,
        "exponent": spec.exponent, "variant": sol.variant.value,
        "xi": sol.ground_state.xi,
        "m_constant": {"value": m.value, "method": m.method.value},
        "t_lambda": None, "alpha": None,
    }
    t = None
    if sol.variant is Variant.UNIQUE:
        report["t_lambda"] = sol.amplitude
        report["alpha"] = sol.amplitude * sol.ground_state.xi
    elif sol.variant is Variant.FAMILY:
        report["family"] = "u = t W_p for every t > 0"
        t = args.t
    else:
        report["infeasible"] = "q = p - 1 and lambda differs from M_{n,q}: no solution"

    if sol.variant is Variant.UNIQUE or t is not None:
        rc = residual_check(sol, spec, args.mesh, t=t)
        report["residual_check"] = {
            "t": t if t is not None else sol.amplitude,
            "mesh_sizes": list(rc.mesh_sizes), "max_norms": list(rc.max_norms),
            "l2_norms": list(rc.l2_norms), "orders": list(rc.orders),
            "observed_order": rc.observed_order, "coefficient": rc.coefficient,
            "coefficient_expected": rc.coefficient_expected,
            "coefficient_rel_deviation": rc.coefficient_rel_deviation,
        }
    if sol.variant is Variant.UNIQUE:
        try:
            prof = newton_solve_discrete(spec, args.mesh, tol=args.tol)
            err = float(np.max(np.abs(prof.values - sol.profile(prof.x))))
            report["discrete_newton"] = {"mesh": args.mesh, "converged": True,
                                         "iterations": prof.iterations, "residual": prof.residual,
                                         "max_error_vs_exact": err}
        except NewtonConvergenceError as exc:
            report["discrete_newton"] = {"mesh": args.mesh, "converged": False,
                                         "residual": exc.residual, "message": str(exc)}
    return _emit_report(report, args.format), EXIT_OK


def cmd_curve(args) -> tuple[str, int]:
    if not args.p > 1 or not args.q > 1 or args.n < 1:
        raise InvalidInput("need p, q > 1 and n >= 1")
    lo, hi, count = args.alpha_range
    gs = ground_state(args.p)
    try:
        curve = bifurcation_curve(gs, args.n, args.q, log_spaced(lo, hi, count))
    except DegenerateCaseError as exc:
        raise InvalidInput(f"{exc}; there is no curve to sample") from exc
    return _emit_table(("alpha", "lambda"), curve.samples, args.format), EXIT_OK


def cmd_profile(args) -> tuple[str, int]:
    if not args.p > 1:
        raise InvalidInput("p must exceed 1")
    if args.mesh < 2:
        raise InvalidInput("--mesh must be at least 2")
    given = [v is not None for v in (args.q, args.n, args.lam)]
    x = np.arange(args.mesh + 1) / args.mesh
    if any(given):
        if not all(given):
            raise InvalidInput("u_lambda needs all of --q, --n and --lambda")
        sol = solve_exact(_spec(args))
        try:
            u = sol.profile(x, args.t)
        except NoScalarAmplitudeError as exc:
            raise InvalidInput(str(exc)) from exc
    else:
        u = evaluate_w(ground_state(args.p), x)
    return _emit_table(("x", "u"), list(zip(x, u)), args.format), EXIT_OK


def _constant_row(gs, kind: str, k: float, d: float, tol: float):
    if kind == "L":
        c = l_constant(k, d, tol)
        ref = beta_oracle((d + 1) / (k + 1), 0.5) / (k + 1)
        return c, C.relative_delta(c.value, ref)
    if kind == "S":
        c = _s_constant(gs, k, d)
    elif kind == "R":
        c = C.r_constant(gs, int(k), d) if k == int(k) else C.r_quadrature(gs, k, d)
    else:
        c = C.m_constant(gs, int(k), d) if k == int(k) else C.m_quadrature(gs, k, d)
    return c, C.relative_delta(c.value, C.quadrature_counterpart(gs, c).value)


def _s_constant(gs, k: float, d: float):
    try:
        return C.s_base(gs, int(k), d) if k == int(k) else C.s_quadrature(gs, k, d)
    except C.NoClosedFormError:
        pass
    try:
        if k == 1:
            return C.s1_recursion(gs, d)
        if k == 2:
            return C.s2_recursion(gs, d)
    except C.UnsupportedIndexError:
        return C.s_quadrature(gs, k, d)
    if k == int(k) and k >= 2 and abs(d - gs.p) <= C.INDEX_TOL:
        return C.s_rp_reduction(gs, int(k))
    return C.s_quadrature(gs, k, d)


def cmd_constants(args) -> tuple[str, int]:
    if not args.p > 1:
        raise InvalidInput("p must exceed 1")
    gs = ground_state(args.p)
    indices = args.index or [_index_spec(s) for s in DEFAULT_INDICES]
    rows = []
    for kind, k_text, d_text in indices:
        k, d = _index_value(k_text, args.p), _index_value(d_text, args.p)
        if k < 0 or d < 0 or (kind == "L" and k == 0):
            raise InvalidInput(f"index out of range: {kind}:{k_text}:{d_text}")
        if kind in ("R", "M") and k != int(k):
            raise InvalidInput(f"{kind} needs an integer first index")
        c, delta = _constant_row(gs, kind, k, d, args.tol)
        rows.append((kind, k, d, c.value, c.method.value, delta))
    header = ("kind", "k", "d", "value", "method", "quadrature_delta")
    return _emit_table(header, rows, args.format), EXIT_OK


def cmd_verify(args) -> tuple[str, int]:
    from .verify import run_all

    try:
        grid = [float(s) for s in args.p_grid.split(",") if s.strip()]
    except ValueError as exc:
        raise InvalidInput(f"bad --p-grid {args.p_grid!r}") from exc
    if not grid or any(not p > 1 for p in grid):
        raise InvalidInput("--p-grid needs exponents > 1")
    checks = run_all(grid)
    ok = all(c.passed for c in checks)
    report = {"command": "verify", "p_grid": grid, "passed": ok,
              "checks": [c.as_dict() for c in checks]}
    return _emit_report(report, args.format), EXIT_OK if ok else EXIT_FAILED


COMMANDS = {"solve": cmd_solve, "curve": cmd_curve, "profile": cmd_profile,
            "constants": cmd_constants, "verify": cmd_verify}


def _execute(args) -> tuple[str, int]:
    try:
        return COMMANDS[args.command](args)
    except ValueError as exc:
        # bad parameters, the degenerate curve, a family without --t
        return f"error: {exc}\n", EXIT_INVALID
    except (QuadratureError, ArithmeticError) as exc:
        return f"error: {exc}\n", EXIT_FAILED


def run(argv: Sequence[str] | None = None) -> tuple[str, int]:
    """Parse and execute; returns (output text, exit code) without touching stdout."""
    return _execute(build_parser().parse_args(argv))


def render_command(argv: Sequence[str]) -> bytes:
    text, _ = run(list(argv))
    return text.encode()


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    text, code = _execute(args)
    if text.startswith("error: "):
        sys.stderr.write(text)
    elif args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
