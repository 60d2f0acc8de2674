"""Moment constants S, R, M of the ground state: closed forms, recursions, quadrature.

    S_{k,d} = int_0^{1/2} x**k W**d,   R_{k,d} = int_0^1 x**k W**d,
    M_{k,d} = int_0^1 (1-x)**k W**d.

Every value carries the method that produced it, so callers can tell a
closed form from a quadrature fallback.
"""

from __future__ import annotations

import math
from math import comb

import numpy as np

from .ground_state import GroundState, evaluate_w
from .quadrature import QuadratureError, integrate_adaptive, l_constant
from .records import Kind, Method, MomentConstant

QUAD_RTOL = 1e-13
INDEX_TOL = 1e-12


class NoClosedFormError(LookupError):
    """No closed form is known for the requested index pair."""


class UnsupportedIndexError(ValueError):
    """The exponent cannot be reached from a base case by steps of p + 1."""


def _same(a: float, b: float) -> bool:
    return abs(a - b) <= INDEX_TOL * max(1.0, abs(b))


def _L(p: float, d: float) -> float:
    return l_constant(p, float(d)).value


def _quad(f, a: float, b: float, what: str) -> float:
    res = integrate_adaptive(f, a, b, 1e-300, rtol=QUAD_RTOL)
    if not res.converged:
        raise QuadratureError(f"{what}: quadrature did not converge ({res.value} +/- {res.error_estimate})")
    return res.value


def s_quadrature(gs: GroundState, k: float, d: float) -> MomentConstant:
    """S_{k,d} by adaptive quadrature of ``x**k * W(x)**d`` over [0, 1/2]."""
    if k < 0 or d < 0:
        raise ValueError("k and d must be non-negative")

    def f(x):
        return x ** k * evaluate_w(gs, x) ** d

    value = _quad(f, 0.0, 0.5, f"S_{{{k},{d}}}")
    return MomentConstant(Kind.S, float(k), float(d), gs.p, value, Method.QUADRATURE)


def r_quadrature(gs: GroundState, k: float, d: float) -> MomentConstant:
    def f(x):
        return x ** k * evaluate_w(gs, x) ** d

    value = _quad(f, 0.0, 1.0, f"R_{{{k},{d}}}")
    return MomentConstant(Kind.R, float(k), float(d), gs.p, value, Method.QUADRATURE)


def m_quadrature(gs: GroundState, n: float, d: float) -> MomentConstant:
    def f(x):
        return (1.0 - x) ** n * evaluate_w(gs, x) ** d

    value = _quad(f, 0.0, 1.0, f"M_{{{n},{d}}}")
    return MomentConstant(Kind.M, float(n), float(d), gs.p, value, Method.QUADRATURE)


def norm_power(gs: GroundState, q: float) -> float:
    """``int_0^1 W**q`` from the time map."""
    p, xi = gs.p, gs.xi
    return 2.0 * math.sqrt((p + 1) / 2) * xi ** ((2 * q - p + 1) / 2) * _L(p, q)


def s_base(gs: GroundState, k: int, d: float) -> MomentConstant:
    """Closed-form S_{k,d} for the index pairs where one exists.

    Covered: S_{1,0}, S_{2,0}, S_{0,p}, S_{1,p}, S_{2,p} and S_{0,d} for any d.
    Anything else raises :class:`NoClosedFormError`.
    """
    p, xi = gs.p, gs.xi
    if k == 1 and d == 0:
        value = 1.0 / 8.0
    elif k == 2 and d == 0:
        value = 1.0 / 24.0
    elif k == 0 and _same(d, p):
        # equals W'(0)
        value = math.sqrt(2 / (p + 1)) * xi ** ((p + 1) / 2)
    elif k == 1 and _same(d, p):
        value = xi
    elif k == 2 and _same(d, p):
        value = xi - math.sqrt(2 * (p + 1)) * xi ** ((3 - p) / 2) * _L(p, 1)
    elif k == 0:
        value = 0.5 * norm_power(gs, d)
    else:
        raise NoClosedFormError(f"no closed form for S_{{{k},{d}}} at p={p}")
    return MomentConstant(Kind.S, float(k), float(d), p, value, Method.CLOSED_FORM)


def descent(p: float, q: float) -> tuple[float, int]:
    """Split ``q`` as ``base + m*(p+1)`` with base 0 or p and integer m >= 0."""
    for base in (0.0, p):
        m = round((q - base) / (p + 1))
        if m >= 0 and abs(q - base - m * (p + 1)) <= INDEX_TOL * max(1.0, abs(q)):
            return base, int(m)
    raise UnsupportedIndexError(
        f"q={q} is neither m(p+1) nor m(p+1)+p for p={p}")


def _recursion_tag(m: int) -> Method:
    return Method.RECURSION if m > 0 else Method.CLOSED_FORM


def s1_recursion(gs: GroundState, q: float) -> MomentConstant:
    """S_{1,q} by integration by parts, stepping q down by p + 1 to S_{1,0} or S_{1,p}."""
    p, xi = gs.p, gs.xi
    base, m = descent(p, q)
    value = s_base(gs, 1, base).value
    for j in range(1, m + 1):
        qj = base + j * (p + 1)
        value = (p + 1) / (2 * qj - p + 1) * (
            xi ** (qj - p + 1) / (qj - p + 1)
            + 2 * (qj - p) / (p + 1) * xi ** (p + 1) * value
        )
    return MomentConstant(Kind.S, 1.0, float(q), p, value, _recursion_tag(m))


def s2_recursion(gs: GroundState, q: float) -> MomentConstant:
    """S_{2,q} by integration by parts, stepping q down by p + 1 to S_{2,0} or S_{2,p}."""
    p, xi = gs.p, gs.xi
    base, m = descent(p, q)
    value = s_base(gs, 2, base).value
    root = math.sqrt(2 * (p + 1))
    for j in range(1, m + 1):
        qj = base + j * (p + 1)
        boundary = xi ** (qj - p + 1) - root * xi ** ((2 * qj - 3 * p + 3) / 2) * _L(p, qj - p + 1)
        value = (p + 1) / (2 * qj - p + 1) * (
            boundary / (qj - p + 1)
            + 2 * (qj - p) / (p + 1) * xi ** (p + 1) * value
        )
    return MomentConstant(Kind.S, 2.0, float(q), p, value, _recursion_tag(m))


def s_rp_reduction(gs: GroundState, r: int) -> MomentConstant:
    """S_{r,p} = r (1/2)**(r-1) xi - r(r-1) S_{r-2,1} for r >= 2.

    Only S_{0,1} has a closed form; for r > 2 the inner S_{r-2,1} comes from
    quadrature and the result is tagged accordingly.
    """
    if r < 2 or int(r) != r:
        raise ValueError(f"r must be an integer >= 2, got {r}")
    r = int(r)
    inner = s_base(gs, 0, 1.0) if r == 2 else s_quadrature(gs, r - 2, 1.0)
    value = r * 0.5 ** (r - 1) * gs.xi - r * (r - 1) * inner.value
    method = Method.RECURSION if inner.method is Method.CLOSED_FORM else Method.QUADRATURE
    return MomentConstant(Kind.S, float(r), gs.p, gs.p, value, method)


def s_rp(gs: GroundState, r: int) -> MomentConstant:
    """S_{r,p} for any integer r >= 0."""
    if r <= 1:
        return s_base(gs, r, gs.p)
    return s_rp_reduction(gs, r)


def m_binomial(gs: GroundState, n: int) -> MomentConstant:
    """M_{n,p} for n >= 1 from the half-interval moments S_{r,p}.

    Reflecting the right half onto the left gives
    ``sum_{r<n} (-1)**r C(n,r) S_{r,p}`` plus ``2 S_{n,p}`` when n is even.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    terms = [s_rp(gs, r) for r in range(n)]
    value = sum((-1) ** r * comb(n, r) * t.value for r, t in enumerate(terms))
    if n % 2 == 0:
        top = s_rp(gs, n)
        terms.append(top)
        value += 2 * top.value
    closed = all(t.method is not Method.QUADRATURE for t in terms)
    method = Method.CLOSED_FORM if closed else Method.QUADRATURE
    return MomentConstant(Kind.M, float(n), gs.p, gs.p, value, method)


def r2_half_sum(gs: GroundState, q: float) -> MomentConstant:
    """R_{2,q} = S_{0,q} - 2 S_{1,q} + 2 S_{2,q}, with S_{1,q}, S_{2,q} by recursion."""
    s0 = s_base(gs, 0, q)
    s1 = s1_recursion(gs, q)
    s2 = s2_recursion(gs, q)
    value = s0.value - 2 * s1.value + 2 * s2.value
    return MomentConstant(Kind.R, 2.0, float(q), gs.p, value, s1.method)


def m2_q_p1_closed(gs: GroundState) -> float:
    """M_{2,p+1} after collecting the recursion terms."""
    p, xi = gs.p, gs.xi
    return (math.sqrt((p + 1) / 2) * xi ** ((p + 3) / 2) * _L(p, p + 1)
            - xi ** (p + 1) / (3 * (p + 3))
            - (p + 1) / (p + 3) * math.sqrt(2 * (p + 1)) * xi ** ((5 - p) / 2) * _L(p, 2))


def m2_q_p1_alternative(gs: GroundState) -> float:
    """The q = p+1 expression with 1/(3(p+1)) and L_{p,1} in place of 1/(3(p+3)) and L_{p,2}.

    Not used for computation; kept so its deviation from quadrature can be reported.
    """
    p, xi = gs.p, gs.xi
    return (math.sqrt((p + 1) / 2) * xi ** ((p + 3) / 2) * _L(p, p + 1)
            - xi ** (p + 1) / (3 * (p + 1))
            - (p + 1) / (p + 3) * math.sqrt(2 * (p + 1)) * xi ** ((5 - p) / 2) * _L(p, 1))


def m2_q_2p1_closed(gs: GroundState) -> float:
    """M_{2,2p+1} after collecting the recursion terms."""
    p, xi = gs.p, gs.xi
    return (math.sqrt((p + 1) / 2) * xi ** (3 * (p + 1) / 2) * _L(p, 2 * p + 1)
            - 2 / 3 * math.sqrt(2 * (p + 1)) * xi ** ((p + 5) / 2)
            * (_L(p, p + 2) / (p + 2) + 2 * _L(p, 1)))


def m3_p_closed(gs: GroundState) -> float:
    """M_{3,p} = S_{0,p} - 3 S_{1,p} + 3 S_{2,p} in closed form."""
    p, xi = gs.p, gs.xi
    return (math.sqrt(2 / (p + 1)) * xi ** ((p + 1) / 2)
            - 3 * math.sqrt(2 * (p + 1)) * xi ** ((3 - p) / 2) * _L(p, 1))


def _reachable(p: float, q: float) -> bool:
    try:
        descent(p, q)
    except UnsupportedIndexError:
        return False
    return True


def m_constant(gs: GroundState, n: int, q: float) -> MomentConstant:
    """M_{n,q} by the most specific route available, quadrature as the last resort."""
    if n < 0 or int(n) != n:
        raise ValueError(f"n must be a non-negative integer, got {n}")
    n = int(n)
    p = gs.p

    def closed(value):
        return MomentConstant(Kind.M, float(n), float(q), p, value, Method.CLOSED_FORM)

    if n == 0:
        return closed(norm_power(gs, q))
    if n == 1:
        # half the norm: the x-weighted integral is exactly the other half
        return closed(s_base(gs, 0, q).value)
    if n == 2 and _same(q, p + 1):
        return closed(m2_q_p1_closed(gs))
    if n == 2 and _same(q, 2 * p + 1):
        return closed(m2_q_2p1_closed(gs))
    if n == 3 and _same(q, p):
        return closed(m3_p_closed(gs))
    if n == 2 and _reachable(p, q):
        r2 = r2_half_sum(gs, q)
        return MomentConstant(Kind.M, 2.0, float(q), p, r2.value, r2.method)
    if _same(q, p):
        return m_binomial(gs, n)
    return m_quadrature(gs, n, q)


def r_constant(gs: GroundState, k: int, q: float) -> MomentConstant:
    """R_{k,q}: symmetry shortcuts for k <= 1, recursion for k = 2, else quadrature."""
    p = gs.p
    if k == 0:
        return MomentConstant(Kind.R, 0.0, float(q), p, norm_power(gs, q), Method.CLOSED_FORM)
    if k == 1:
        value = s_base(gs, 0, q).value
        return MomentConstant(Kind.R, 1.0, float(q), p, value, Method.CLOSED_FORM)
    if k == 2 and _reachable(p, q):
        return r2_half_sum(gs, q)
    return r_quadrature(gs, k, q)


def quadrature_counterpart(gs: GroundState, c: MomentConstant) -> MomentConstant:
    """Direct quadrature of the defining integral of ``c``."""
    if c.kind is Kind.S:
        return s_quadrature(gs, c.k, c.d)
    if c.kind is Kind.R:
        return r_quadrature(gs, c.k, c.d)
    if c.kind is Kind.M:
        return m_quadrature(gs, c.k, c.d)
    raise ValueError("L constants are already quadratures; compare with beta_oracle instead")


def relative_delta(a: float, b: float) -> float:
    return abs(a - b) / max(abs(b), np.finfo(float).tiny)
