"""Self-checks of the whole library, shared by ``kirchhoff verify`` and the test suite.

Every check returns a :class:`Check` with the computed values, the tolerance
it was held to and a pass flag. Nothing here raises on a numerical mismatch;
failures are data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from . import constants as C
from .ground_state import (evaluate_w, evaluate_w_prime, ground_state, shoot_ode_oracle,
                           time_map_x_of_w)
from .nonlocal_problem import (ProblemSpec, Variant, bifurcation_curve, lambda_of_alpha_n1,
                               newton_solve_discrete, residual_check, solve_exact)
from .quadrature import beta_oracle, integrate_adaptive, l_constant

DEFAULT_P_GRID = (1.5, 2.0, 3.0)
SEED = 20240521


@dataclass
class Check:
    name: str
    anchor: str
    tolerance: float
    passed: bool
    values: dict[str, Any] = field(default_factory=dict)
    verdict: str | None = None

    def as_dict(self) -> dict[str, Any]:
        out = {"name": self.name, "anchor": self.anchor, "tolerance": self.tolerance,
               "passed": self.passed, "values": self.values}
        if self.verdict is not None:
            out["verdict"] = self.verdict
        return out


def _worst(rows: Sequence[dict], key: str) -> float:
    return max((r[key] for r in rows), default=0.0)


def check_exact_l_values() -> Check:
    rows = [{"k": p, "d": p, "value": l_constant(p, p).value, "expected": 2 / (p + 1),
             "abs_delta": abs(l_constant(p, p).value - 2 / (p + 1))} for p in (1.5, 2.0, 3.0, 5.0)]
    arcsin = abs(l_constant(1.0, 0.0).value - math.pi / 2)
    rows.append({"k": 1.0, "d": 0.0, "value": l_constant(1.0, 0.0).value,
                 "expected": math.pi / 2, "abs_delta": arcsin})
    ok = all(r["abs_delta"] <= 1e-10 for r in rows[:-1]) and arcsin <= 1e-12
    return Check("l_exact_values", "L_{p,p} = 2/(p+1), L_{1,0} = pi/2", 1e-10, ok,
                 {"rows": rows, "arcsin_tolerance": 1e-12})


def check_beta_identity() -> Check:
    rows = []
    for k in (1.0, 1.5, 2.0, 3.0, 5.0):
        for d in sorted({0.0, 1.0, 2.0, k, k + 1}):
            v = l_constant(k, d).value
            ref = beta_oracle((d + 1) / (k + 1), 0.5) / (k + 1)
            rows.append({"k": k, "d": d, "abs_delta": abs(v - ref)})
    worst = _worst(rows, "abs_delta")
    return Check("beta_identity", "L_{k,d} = B((d+1)/(k+1), 1/2)/(k+1)", 1e-9, worst <= 1e-9,
                 {"max_abs_delta": worst, "grid_size": len(rows)})


def _residual_orders(p: float, sizes=(256, 512, 1024)):
    gs = ground_state(p)
    norms = []
    for n in sizes:
        w = evaluate_w(gs, np.arange(n + 1) / n)
        r = (w[:-2] - 2 * w[1:-1] + w[2:]) * n * n + w[1:-1] ** p
        norms.append(float(np.max(np.abs(r))))
    return norms, [math.log2(a / b) for a, b in zip(norms, norms[1:])]


def check_ground_state(p_grid: Sequence[float], ode_p=(2.0, 3.0)) -> Check:
    rng = np.random.default_rng(SEED)
    values: dict[str, Any] = {}
    ok = True
    per_p = []
    for p in p_grid:
        gs = ground_state(p)
        half = abs(time_map_x_of_w(gs, gs.xi) - 0.5)
        x = rng.uniform(0.0, 1.0, 100)
        energy = 0.5 * evaluate_w_prime(gs, x) ** 2 + evaluate_w(gs, x) ** (p + 1) / (p + 1)
        ref = gs.xi ** (p + 1) / (p + 1)
        e_dev = float(np.max(np.abs(energy - ref)) / ref)
        ok &= half <= 1e-10 and e_dev <= 1e-9
        per_p.append({"p": p, "xi": gs.xi, "x_of_xi_delta": half, "energy_rel_delta": e_dev})
    values["time_map_and_energy"] = per_p
    orders = []
    shooting = []
    for p in ode_p:
        norms, ords = _residual_orders(p)
        orders.append({"p": p, "max_norms": norms, "orders": ords})
        ok &= min(ords) >= 1.8
        gs = ground_state(p)
        mesh = 10_000
        shot = shoot_ode_oracle(p, mesh, gs.xi)
        dev = float(np.max(np.abs(shot - evaluate_w(gs, np.arange(mesh + 1) / mesh))))
        shooting.append({"p": p, "max_abs_delta": dev})
        ok &= dev <= 1e-6
    values["residual_orders"] = orders
    values["shooting"] = shooting
    return Check("ground_state", "time map, energy identity, ODE residual, shooting", 1e-9, ok, values)


def check_norm_identity(p_grid: Sequence[float]) -> Check:
    rows = []
    for p in p_grid:
        gs = ground_state(p)
        for q in (p, p + 1, 2 * p + 1):
            res = integrate_adaptive(lambda x: evaluate_w(gs, x) ** q, 0.0, 1.0, 1e-300, rtol=1e-13)
            closed = C.norm_power(gs, q)
            rows.append({"p": p, "q": q, "quadrature": res.value, "closed_form": closed,
                         "rel_delta": C.relative_delta(closed, res.value)})
    worst = _worst(rows, "rel_delta")
    return Check("norm_identity", "int W**q = 2 sqrt((p+1)/2) xi**((2q-p+1)/2) L_{p,q}",
                 1e-8, worst <= 1e-8, {"rows": rows, "max_rel_delta": worst})


def _ledger_rows(p: float) -> list[dict]:
    gs = ground_state(p)
    out = []

    def add(label, c):
        ref = C.quadrature_counterpart(gs, c)
        out.append({"p": p, "path": label, "k": c.k, "d": c.d, "value": c.value,
                    "method": c.method.value, "quadrature": ref.value,
                    "rel_delta": C.relative_delta(c.value, ref.value)})

    for m in (1, 2, 3):
        for q in (m * (p + 1), m * (p + 1) + p):
            add("s1_recursion", C.s1_recursion(gs, q))
            add("s2_recursion", C.s2_recursion(gs, q))
            add("m2_recursion", C.m_constant(gs, 2, q))
    for r in (2, 3, 4, 5):
        add("s_rp_reduction", C.s_rp_reduction(gs, r))
    for n in (2, 3, 4, 5):
        add("m_binomial", C.m_binomial(gs, n))
    for q in (p, p + 1, 2.5):
        add("m1_half_norm", C.m_constant(gs, 1, q))
    add("m2_q_p1_closed", C.m_constant(gs, 2, p + 1))
    add("m2_q_2p1_closed", C.m_constant(gs, 2, 2 * p + 1))
    add("m3_p_closed", C.m_constant(gs, 3, p))
    return out


def check_constant_ledger(p_grid: Sequence[float]) -> Check:
    rows = [r for p in p_grid for r in _ledger_rows(p)]
    bases = []
    for p in p_grid:
        gs = ground_state(p)
        for label, c, expected in (("S_{1,0}", C.s_base(gs, 1, 0.0), 1 / 8),
                                   ("S_{2,0}", C.s_base(gs, 2, 0.0), 1 / 24),
                                   ("S_{1,p}", C.s_base(gs, 1, p), gs.xi)):
            quad = C.s_quadrature(gs, c.k, c.d).value
            bases.append({"p": p, "constant": label, "closed_form": c.value, "quadrature": quad,
                          "expected": expected,
                          "abs_delta": max(abs(c.value - expected), abs(quad - expected))})
    worst = _worst(rows, "rel_delta")
    worst_base = _worst(bases, "abs_delta")
    ok = worst <= 1e-8 and worst_base <= 1e-10
    return Check("constant_ledger", "closed forms and recursions vs direct quadrature", 1e-8, ok,
                 {"max_rel_delta": worst, "max_base_abs_delta": worst_base,
                  "base_tolerance": 1e-10, "rows": rows, "bases": bases})


def check_m2_p1_conflict(p_grid: Sequence[float]) -> Check:
    """Adjudicate the two printed forms of M_{2,p+1} by quadrature."""
    rows = []
    for p in p_grid:
        gs = ground_state(p)
        quad = C.m_quadrature(gs, 2, p + 1).value
        proof = C.m2_q_p1_closed(gs)
        stated = C.m2_q_p1_alternative(gs)
        rows.append({"p": p, "quadrature": quad,
                     "eq_4_20_value": proof, "eq_4_20_rel_delta": C.relative_delta(proof, quad),
                     "eq_1_21_value": stated, "eq_1_21_rel_delta": C.relative_delta(stated, quad)})
    proof_ok = all(r["eq_4_20_rel_delta"] <= 1e-8 for r in rows)
    stated_ok = all(r["eq_1_21_rel_delta"] <= 1e-8 for r in rows)
    if proof_ok and not stated_ok:
        verdict = "eq_4_20_matches_quadrature; eq_1_21_deviates"
    elif proof_ok:
        verdict = "both_match_quadrature"
    elif stated_ok:
        verdict = "eq_1_21_matches_quadrature; eq_4_20_deviates"
    else:
        verdict = "neither_matches_quadrature"
    return Check("eq_1_21_vs_4_20", "M_{2,p+1}: 1/(3(p+3)) with L_{p,2} vs 1/(3(p+1)) with L_{p,1}",
                 1e-8, proof_ok, {"rows": rows}, verdict)


def _random_specs(count: int, rng) -> list[ProblemSpec]:
    specs = []
    for i in range(count):
        p = float(rng.uniform(1.2, 6.0))
        n = int(rng.integers(1, 5))
        if i % 3 == 0:
            # degenerate: q = p - 1 needs p > 2
            p = float(rng.uniform(2.1, 6.0))
            q = p - 1.0
            m = C.m_constant(ground_state(p), n, q).value
            lam = m if i % 2 == 0 else m * float(rng.choice([0.5, 1.5, 3.0]))
        else:
            q = float(rng.uniform(1.1, 8.0))
            while abs(q - p + 1) < 0.2:
                # keeps (lambda/M)**(1/(q-p+1)) inside the float range
                q = float(rng.uniform(1.1, 8.0))
            lam = float(10 ** rng.uniform(-2, 2))
        specs.append(ProblemSpec(p, q, n, lam))
    return specs


def check_trichotomy(count: int = 210) -> Check:
    rng = np.random.default_rng(SEED)
    specs = _random_specs(count, rng)
    tally = {v.value: 0 for v in Variant}
    wrong = []
    worst_scale = 0.0
    for spec in specs:
        sol = solve_exact(spec)
        tally[sol.variant.value] += 1
        if spec.degenerate:
            m = sol.m_constant.value
            expected = Variant.FAMILY if abs(spec.lam - m) <= 1e-9 * m else Variant.INFEASIBLE
        else:
            expected = Variant.UNIQUE
            c = float(rng.uniform(0.2, 5.0))
            other = solve_exact(ProblemSpec(spec.p, spec.q, spec.n, c * spec.lam))
            predicted = c ** (1 / spec.exponent) * sol.amplitude
            worst_scale = max(worst_scale, abs(other.amplitude - predicted) / predicted)
        if sol.variant is not expected:
            wrong.append({"p": spec.p, "q": spec.q, "n": spec.n, "lambda": spec.lam,
                          "got": sol.variant.value, "expected": expected.value})
    ok = not wrong and worst_scale <= 1e-12
    return Check("trichotomy", "unique / family / infeasible by q-p+1 and lambda = M_{n,q}",
                 1e-12, ok, {"specs": count, "tally": tally, "misclassified": wrong,
                             "scaling_max_rel_delta": worst_scale})


def check_n1_dual_formula(p_grid: Sequence[float]) -> Check:
    rows = []
    for p in p_grid:
        gs = ground_state(p)
        for q in (p, p + 0.5, 2 * p + 1, 1.2):
            if abs(q - p + 1) < 1e-12:
                continue
            alpha = np.geomspace(0.1, 10.0, 5)
            general = C.m_constant(gs, 1, q).value * gs.xi ** (-(q - p + 1)) * alpha ** (q - p + 1)
            direct = lambda_of_alpha_n1(gs, q, alpha)
            rows.append({"p": p, "q": q,
                         "rel_delta": float(np.max(np.abs(general - direct) / direct))})
    worst = _worst(rows, "rel_delta")
    return Check("n1_dual_formula", "(p+1) L_{p,0} L_{p,q} alpha**e vs M_{1,q} xi**-e alpha**e",
                 1e-10, worst <= 1e-10, {"rows": rows, "delta": worst})


def check_curve_coefficient() -> Check:
    gs = ground_state(3.0)
    curve = bifurcation_curve(gs, 1, 3.0, np.geomspace(0.1, 10.0, 5))
    ratios = [lam / a for a, lam in curve.samples]
    expected = 2 * beta_oracle(0.25, 0.5) / 4
    dev = max(abs(r - expected) for r in ratios)
    slope = float(np.polyfit(np.log([a for a, _ in curve.samples]),
                             np.log([lam for _, lam in curve.samples]), 1)[0])
    ok = dev <= 1e-6 and abs(slope - 1.0) <= 1e-9
    return Check("curve_coefficient", "p = q = 3, n = 1: lambda/alpha = 2 L_{3,0}", 1e-6, ok,
                 {"ratio": ratios[0], "expected": expected, "max_abs_delta": dev,
                  "loglog_slope": slope, "formula_id": curve.formula_id})


def check_independent_solve(cases=((3, 3, 1, 1), (2, 4, 2, 1), (3, 7, 2, 5)),
                            sizes=(128, 256, 512)) -> Check:
    rows = []
    ok = True
    for case in cases:
        spec = ProblemSpec(*map(float, case[:2]), case[2], float(case[3]))
        sol = solve_exact(spec)
        errors, iters = [], []
        try:
            for n in sizes:
                prof = newton_solve_discrete(spec, n)
                errors.append(float(np.max(np.abs(prof.values - sol.profile(prof.x)))))
                iters.append(prof.iterations)
        except RuntimeError as exc:
            rows.append({"case": list(case), "error": str(exc)})
            ok = False
            continue
        orders = [math.log2(a / b) for a, b in zip(errors, errors[1:])]
        ok &= min(orders) >= 1.8
        rows.append({"case": list(case), "max_errors": errors, "orders": orders,
                     "iterations": iters})
    report = residual_check(solve_exact(ProblemSpec(3.0, 3.0, 1, 1.0)), ProblemSpec(3.0, 3.0, 1, 1.0))
    ok &= min(report.orders) >= 1.8
    return Check("independent_solve", "discrete Newton vs exact solution, order in 1/N", 1.8, ok,
                 {"rows": rows, "residual_orders_p3_q3_n1": list(report.orders)})


def check_cli_determinism(render: Callable[[list[str]], bytes] | None = None) -> Check:
    if render is None:
        from .cli import render_command as render
    runs = {"curve": ["curve", "--p", "3", "--q", "3", "--n", "1", "--alpha-range", "0.1:10:5"],
            "profile": ["profile", "--p", "3", "--mesh", "8"],
            "constants": ["constants", "--p", "3"]}
    same = {name: render(argv) == render(argv) for name, argv in runs.items()}
    return Check("cli_determinism", "identical configuration gives identical bytes", 0.0,
                 all(same.values()), {"identical": same})


def run_all(p_grid: Sequence[float] = DEFAULT_P_GRID) -> list[Check]:
    p_grid = tuple(float(p) for p in p_grid)
    ode_p = tuple(p for p in p_grid if p >= 2.0) or (2.0,)
    return [
        check_exact_l_values(),
        check_beta_identity(),
        check_ground_state(p_grid, ode_p),
        check_norm_identity(p_grid),
        check_constant_ledger(p_grid),
        check_m2_p1_conflict(p_grid),
        check_trichotomy(),
        check_n1_dual_formula(p_grid),
        check_curve_coefficient(),
        check_independent_solve(),
        check_cli_determinism(),
    ]
