"""Adaptive Gauss-Kronrod quadrature with removal of inverse square-root endpoints.

The integrator works on vectorised integrands: ``rule`` receives a 1-d numpy
array of abscissae and must return an array of the same shape.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Callable

import numpy as np

from .records import Kind, Method, MomentConstant

DEFAULT_TOL = 1e-11
DEFAULT_MAX_EVALS = 1_000_000

_EPS = np.finfo(float).eps

# Kronrod 15-point abscissae (non-negative half) and weights, Gauss 7-point weights.
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

# Full 15-node layout on [-1, 1], ascending.
KRONROD_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
# Gauss nodes sit at odd positions of the ascending Kronrod layout.
_GAUSS_IDX = np.arange(1, 15, 2)
GAUSS_WEIGHTS = np.concatenate([_WG[:-1], _WG[::-1]])


class QuadratureError(RuntimeError):
    """Raised when a quadrature cannot deliver the requested accuracy."""


class IntegrandError(ValueError):
    """The integrand produced a non-finite value."""


class Singularity(str, Enum):
    NONE = "none"
    INV_SQRT_RIGHT = "inv_sqrt_right"


@dataclass(frozen=True)
class Integrand:
    """An integrand on ``(a, b)`` plus what is known about its right endpoint.

    With ``INV_SQRT_RIGHT`` the product ``(b - s)**0.5 * rule(s)`` must stay
    bounded as ``s -> b``. ``gap_rule``, when given, evaluates the same function
    from the distance ``b - s``; it is used after the endpoint substitution so
    that nothing is lost forming ``b - u**2`` in floating point.
    """

    rule: Callable[[np.ndarray], np.ndarray]
    singularity: Singularity = Singularity.NONE
    gap_rule: Callable[[np.ndarray], np.ndarray] | None = None


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error_estimate: float
    evaluations: int
    converged: bool = True


def _gk_panels(f, lo, hi):
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    x = mid[:, None] + half[:, None] * KRONROD_NODES[None, :]
    fx = np.asarray(f(x.ravel()), dtype=float).reshape(x.shape)
    if not np.all(np.isfinite(fx)):
        bad = x[~np.isfinite(fx)][0]
        raise IntegrandError(f"integrand is not finite at {bad!r}")
    kron = half * (fx @ KRONROD_WEIGHTS)
    gauss = half * (fx[:, _GAUSS_IDX] @ GAUSS_WEIGHTS)
    absint = half * (np.abs(fx) @ KRONROD_WEIGHTS)
    return kron, np.abs(kron - gauss), absint


def _adaptive(f, a, b, tol, rtol, max_evals, initial_panels=2):
    edges = np.linspace(a, b, initial_panels + 1)
    lo, hi = edges[:-1], edges[1:]
    kron, err, absint = _gk_panels(f, lo, hi)
    evals = 15 * lo.size
    length = b - a
    min_width = 64 * _EPS * max(abs(a), abs(b), length)
    converged = True
    while True:
        total = float(np.sum(kron))
        toterr = float(np.sum(err))
        target = max(tol, rtol * abs(total))
        if toterr <= target:
            break
        width = hi - lo
        floor = 50 * _EPS * absint
        split = (err > target * width / length) & (err > floor) & (width > min_width)
        if not split.any():
            # only roundoff-limited panels remain unless some hit the width floor
            converged = bool(np.all((err <= target * width / length) | (err <= floor)))
            break
        if evals + 30 * int(split.sum()) > max_evals:
            converged = False
            break
        slo, shi = lo[split], hi[split]
        smid = 0.5 * (slo + shi)
        nlo = np.concatenate([slo, smid])
        nhi = np.concatenate([smid, shi])
        nk, ne, na = _gk_panels(f, nlo, nhi)
        evals += 15 * nlo.size
        keep = ~split
        lo = np.concatenate([lo[keep], nlo])
        hi = np.concatenate([hi[keep], nhi])
        kron = np.concatenate([kron[keep], nk])
        err = np.concatenate([err[keep], ne])
        absint = np.concatenate([absint[keep], na])
    return QuadratureResult(float(np.sum(kron)), float(np.sum(err)), evals, converged)


def integrate_adaptive(g, a: float, b: float, tol: float = DEFAULT_TOL, *,
                       rtol: float = 0.0,
                       max_evals: int = DEFAULT_MAX_EVALS) -> QuadratureResult:
    """Integrate ``g`` over ``[a, b]`` by globally adaptive 7/15 Gauss-Kronrod.

    ``g`` is an :class:`Integrand` or a plain vectorised callable. An inverse
    square-root singularity at ``b`` is removed with ``s = b - u**2`` before
    any refinement. Refinement stops when the summed error estimate is below
    ``max(tol, rtol*|value|)``. If the evaluation budget runs out, the best
    estimate comes back with ``converged=False``.
    """
    if not a < b:
        raise ValueError(f"need a < b, got a={a}, b={b}")
    if not tol > 0:
        raise ValueError("tol must be positive")
    if not isinstance(g, Integrand):
        g = Integrand(g)
    if g.singularity is Singularity.INV_SQRT_RIGHT:
        if g.gap_rule is not None:
            gap = g.gap_rule

            def f(u):
                return 2.0 * u * gap(u * u)
        else:
            rule = g.rule

            def f(u):
                return 2.0 * u * rule(b - u * u)
        return _adaptive(f, 0.0, math.sqrt(b - a), tol, rtol, max_evals)
    return _adaptive(g.rule, float(a), float(b), tol, rtol, max_evals)


def beta_oracle(a: float, b: float) -> float:
    """Euler's Beta function through log-gamma."""
    if not (a > 0 and b > 0):
        raise ValueError(f"Beta function needs positive arguments, got ({a}, {b})")
    return math.exp(math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b))


def l_integrand(k: float, d: float) -> Integrand:
    """``s**d / sqrt(1 - s**(k+1))`` on (0, 1)."""
    def rule(s):
        return s ** d / np.sqrt(1.0 - s ** (k + 1))

    def gap_rule(t):
        # 1 - (1-t)**(k+1) without cancellation for small t
        return (1.0 - t) ** d / np.sqrt(-np.expm1((k + 1) * np.log1p(-t)))

    return Integrand(rule, Singularity.INV_SQRT_RIGHT, gap_rule)


@lru_cache(maxsize=1024)
def l_constant(k: float, d: float, tol: float = DEFAULT_TOL) -> MomentConstant:
    """L_{k,d}: integral over (0, 1) of ``s**d / sqrt(1 - s**(k+1))``."""
    if not k > 0:
        raise ValueError(f"k must be positive, got {k}")
    if not d >= 0:
        raise ValueError(f"d must be non-negative, got {d}")
    res = integrate_adaptive(l_integrand(k, d), 0.0, 1.0, tol)
    if not res.converged:
        raise QuadratureError(
            f"L_{{{k},{d}}} did not converge: {res.value} +/- {res.error_estimate}")
    return MomentConstant(Kind.L, float(k), float(d), None, res.value, Method.QUADRATURE)


@lru_cache(maxsize=64)
def gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    nodes, weights = np.polynomial.legendre.leggauss(order)
    nodes.flags.writeable = False
    weights.flags.writeable = False
    return nodes, weights


def composite_gauss_legendre(a: float, b: float, panels: int, order: int):
    """Nodes and weights of a composite Gauss-Legendre rule on ``[a, b]``."""
    x, w = gauss_legendre(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def simpson_weights(n_intervals: int, h: float) -> np.ndarray:
    """Composite Simpson weights for ``n_intervals + 1`` equispaced nodes."""
    if n_intervals < 2 or n_intervals % 2:
        raise ValueError(f"composite Simpson needs an even interval count, got {n_intervals}")
    w = np.empty(n_intervals + 1)
    w[0] = w[-1] = 1.0
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * (h / 3.0)
