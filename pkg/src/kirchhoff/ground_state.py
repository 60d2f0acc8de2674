"""The positive solution W of -W'' = W**p, W(0) = W(1) = 0, through its time map.

On [0, 1/2] the energy identity gives x as an explicit function of the value
w = W(x)::

    x(w) = c * T(w / xi),   T(s) = int_0^s dv / sqrt(1 - v**(p+1)),
    c = sqrt((p+1)/2) * xi**((1-p)/2)

with ``xi = max W = W(1/2)``. ``T`` is evaluated on two branches, each with a
smooth integrand so that a fixed composite Gauss-Legendre rule reaches
rounding level:

* ``s <= 1/2``: ``v = s * tau**3`` removes the non-smooth ``v**(p+1)`` at 0;
* ``s > 1/2``: ``s = 1 - u**2`` removes the inverse square root at 1, so
  ``T(s) = L_{p,0} - G(u)`` with ``G(u) = int_0^u 2r / sqrt(1 - (1-r**2)**(p+1)) dr``.

Inversion x -> w runs a bracketed Newton iteration in the branch variable
(``s`` or ``u``), started from a precomputed monotone table.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .quadrature import composite_gauss_legendre, l_constant

TABLE_SIZE = 2048
_LOWER_RULE = (4, 20)
_UPPER_RULE = (8, 20)
_S_SPLIT = 0.5
_MAX_NEWTON = 60
_EPS = np.finfo(float).eps


class OracleFailure(RuntimeError):
    """The shooting oracle left its admissible range."""


@lru_cache(maxsize=None)
def _unit_rule(panels: int, order: int):
    nodes, weights = composite_gauss_legendre(0.0, 1.0, panels, order)
    nodes.flags.writeable = False
    weights.flags.writeable = False
    return nodes, weights


def sup_norm_xi(p: float) -> float:
    """``max W = (2(p+1))**(1/(p-1)) * L_{p,0}**(2/(p-1))``."""
    if not p > 1:
        raise ValueError(f"p must exceed 1, got {p}")
    lp0 = l_constant(p, 0.0).value
    return (2.0 * (p + 1.0)) ** (1.0 / (p - 1.0)) * lp0 ** (2.0 / (p - 1.0))


@dataclass(frozen=True, eq=False)
class GroundState:
    """Immutable handle on W for one exponent ``p``.

    ``table_x``/``table_w`` sample the time map at 2048 nodes clustered
    towards ``w = xi``; both columns are strictly increasing and run from
    ``(0, 0)`` to ``(1/2, xi)``.
    """

    p: float
    xi: float
    l_p0: float
    scale: float
    x_split: float
    u_split: float
    table_x: np.ndarray
    table_w: np.ndarray

    def __repr__(self) -> str:
        return f"GroundState(p={self.p!r}, xi={self.xi!r})"


def _lower_t(p: float, s: np.ndarray) -> np.ndarray:
    tau, wt = _unit_rule(*_LOWER_RULE)
    v = s[..., None] * tau ** 3
    return s * np.sum(wt * 3.0 * tau ** 2 / np.sqrt(1.0 - v ** (p + 1)), axis=-1)


def _deficit_upper(p: float, u: np.ndarray) -> np.ndarray:
    # 1 - (1 - u**2)**(p+1), accurate for small u
    return -np.expm1((p + 1.0) * np.log1p(-u * u))


def _upper_integrand(p: float, r: np.ndarray) -> np.ndarray:
    return 2.0 * r / np.sqrt(_deficit_upper(p, r))


def _upper_g(p: float, u: np.ndarray) -> np.ndarray:
    tau, wt = _unit_rule(*_UPPER_RULE)
    safe = np.where(u > 0, u, 0.5)
    out = safe * np.sum(wt * _upper_integrand(p, safe[..., None] * tau), axis=-1)
    return np.where(u > 0, out, 0.0)


def _upper_slope(p: float, u: np.ndarray) -> np.ndarray:
    safe = np.where(u > 0, u, 0.5)
    return np.where(u > 0, _upper_integrand(p, safe), 2.0 / math.sqrt(p + 1.0))


def _x_lower(gs: GroundState, s):
    return gs.scale * _lower_t(gs.p, s)


def _x_upper(gs: GroundState, u):
    return gs.scale * (gs.l_p0 - _upper_g(gs.p, u))


@lru_cache(maxsize=32)
def ground_state(p: float) -> GroundState:
    """Build (and cache) the ground state for exponent ``p``."""
    p = float(p)
    xi = sup_norm_xi(p)
    l_p0 = l_constant(p, 0.0).value
    scale = math.sqrt((p + 1.0) / 2.0) * xi ** ((1.0 - p) / 2.0)
    u_split = math.sqrt(1.0 - _S_SPLIT)
    x_split = scale * float(_lower_t(p, np.array(_S_SPLIT)))
    probe = GroundState(p, xi, l_p0, scale, x_split, u_split, np.empty(0), np.empty(0))
    w = xi * np.sin(0.5 * np.pi * np.arange(TABLE_SIZE) / (TABLE_SIZE - 1))
    w[-1] = xi
    x = _forward(probe, w)
    x[0] = 0.0
    x[-1] = 0.5
    x.flags.writeable = False
    w.flags.writeable = False
    return GroundState(p, xi, l_p0, scale, x_split, u_split, x, w)


def _forward(gs: GroundState, w: np.ndarray) -> np.ndarray:
    s = w / gs.xi
    out = np.empty_like(s)
    low = s <= _S_SPLIT
    out[low] = _x_lower(gs, s[low])
    u = np.sqrt(1.0 - s[~low])
    out[~low] = _x_upper(gs, u)
    return out


def time_map_x_of_w(gs: GroundState, w):
    """Position ``x`` in [0, 1/2] at which W takes the value ``w``."""
    arr = np.asarray(w, dtype=float)
    if np.any(arr < 0) or np.any(arr > gs.xi) or np.any(np.isnan(arr)):
        raise ValueError(f"w must lie in [0, xi={gs.xi}]")
    out = _forward(gs, np.atleast_1d(arr))
    return out.reshape(arr.shape)[()] if arr.ndim == 0 else out.reshape(arr.shape)


def _newton(f, lo, hi, v, atol=0.0):
    """Bracketed Newton for an increasing residual; ``f`` returns (value, slope)."""
    v = v.copy()
    active = np.ones(v.shape, dtype=bool)
    for _ in range(_MAX_NEWTON):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        va, la, ha = v[idx], lo[idx], hi[idx]
        fv, dv = f(va, idx)
        ha = np.where(fv > 0, va, ha)
        la = np.where(fv <= 0, va, la)
        nv = va - fv / dv
        nv = np.where((nv > la) & (nv < ha), nv, 0.5 * (la + ha))
        tol = 4 * _EPS * np.abs(nv) + atol
        stop = (fv == 0) | (np.abs(nv - va) <= tol) | (ha - la <= tol)
        v[idx] = np.where(fv == 0, va, nv)
        lo[idx], hi[idx] = la, ha
        active[idx[stop]] = False
    return v


def _solve(gs: GroundState, xr: np.ndarray):
    """Value and ``1 - (w/xi)**(p+1)`` at points ``xr`` in [0, 1/2]."""
    p = gs.p
    w = np.empty_like(xr)
    deficit = np.empty_like(xr)
    idx = np.clip(np.searchsorted(gs.table_x, xr), 1, TABLE_SIZE - 1)
    w_lo, w_hi = gs.table_w[idx - 1], gs.table_w[idx]
    w0 = np.interp(xr, gs.table_x, gs.table_w)

    low = xr <= gs.x_split
    if low.any():
        target = xr[low]
        lo = np.clip(w_lo[low] / gs.xi, 0.0, _S_SPLIT)
        hi = np.clip(w_hi[low] / gs.xi, 0.0, _S_SPLIT)
        s0 = np.clip(w0[low] / gs.xi, lo, hi)

        def f(s, i):
            return _x_lower(gs, s) - target[i], gs.scale / np.sqrt(1.0 - s ** (p + 1))

        s = _newton(f, lo, hi, s0, atol=1e-300)
        s = np.where(target == 0, 0.0, s)
        w[low] = gs.xi * s
        deficit[low] = 1.0 - s ** (p + 1)
    up = ~low
    if up.any():
        target = xr[up]
        # u decreases as w increases, so the bracket flips
        lo = np.clip(np.sqrt(np.maximum(1.0 - w_hi[up] / gs.xi, 0.0)), 0.0, gs.u_split)
        hi = np.clip(np.sqrt(np.maximum(1.0 - w_lo[up] / gs.xi, 0.0)), 0.0, gs.u_split)
        u0 = np.clip(np.sqrt(np.maximum(1.0 - w0[up] / gs.xi, 0.0)), lo, hi)

        def f(u, i):
            # negated so that the residual increases with u
            return target[i] - _x_upper(gs, u), gs.scale * _upper_slope(p, u)

        u = _newton(f, lo, hi, u0, atol=1e-3 * _EPS)
        u = np.where(target == 0.5, 0.0, u)
        w[up] = gs.xi * (1.0 - u * u)
        deficit[up] = _deficit_upper(p, u)
    return w, deficit


def _prepare_x(x):
    arr = np.asarray(x, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0) or np.any(arr > 1):
        raise ValueError("x must lie in [0, 1]")
    flat = np.atleast_1d(arr).ravel()
    right = flat > 0.5
    xr = np.where(right, 1.0 - flat, flat)
    return arr, xr, right


def _shape_like(arr, values):
    return values.reshape(arr.shape)[()] if arr.ndim == 0 else values.reshape(arr.shape)


def evaluate_w(gs: GroundState, x):
    """W(x) for scalar or array ``x`` in [0, 1]."""
    arr, xr, _ = _prepare_x(x)
    w, _ = _solve(gs, xr)
    return _shape_like(arr, w)


def evaluate_w_prime(gs: GroundState, x):
    """W'(x); positive on [0, 1/2), negative on (1/2, 1]."""
    arr, xr, right = _prepare_x(x)
    _, deficit = _solve(gs, xr)
    p = gs.p
    slope = math.sqrt(2.0 / (p + 1.0)) * gs.xi ** ((p + 1.0) / 2.0) * np.sqrt(deficit)
    return _shape_like(arr, np.where(right, -slope, slope))


def shoot_ode_oracle(p: float, mesh_size: int, xi: float | None = None) -> np.ndarray:
    """W sampled on ``x_i = i/mesh_size`` by classical RK4 from the left end.

    Starts from W(0) = 0 and W'(0) = sqrt(2/(p+1)) * xi**((p+1)/2). Used only
    to cross-check the time-map evaluation.
    """
    if mesh_size < 100:
        raise ValueError("mesh_size must be at least 100")
    if xi is None:
        xi = sup_norm_xi(p)
    h = 1.0 / mesh_size
    limit = 10.0 * xi

    def acc(w):
        return -math.copysign(abs(w) ** p, w)

    w = 0.0
    v = math.sqrt(2.0 / (p + 1.0)) * xi ** ((p + 1.0) / 2.0)
    out = np.empty(mesh_size + 1)
    out[0] = w
    for i in range(mesh_size):
        k1w, k1v = v, acc(w)
        k2w, k2v = v + 0.5 * h * k1v, acc(w + 0.5 * h * k1w)
        k3w, k3v = v + 0.5 * h * k2v, acc(w + 0.5 * h * k2w)
        k4w, k4v = v + h * k3v, acc(w + h * k3w)
        w += h / 6.0 * (k1w + 2 * k2w + 2 * k3w + k4w)
        v += h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
        if abs(w) > limit:
            raise OracleFailure(f"shooting profile exceeded 10*xi at x={(i + 1) * h}")
        out[i + 1] = w
    return out
