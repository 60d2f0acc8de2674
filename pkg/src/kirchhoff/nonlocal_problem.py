"""Exact solutions and bifurcation curves of the convolutional Kirchhoff problem

    -(int_0^1 (1-x)**n u**q dx) u'' = lam * u**p,  u > 0 on (0, 1),  u(0) = u(1) = 0,

plus two independent checks: a finite-difference residual of the exact
solution, and a Newton solve of the discretised nonlocal system.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import simpson
from scipy.linalg import solve_banded

from .constants import m_constant
from .ground_state import GroundState, evaluate_w, ground_state
from .quadrature import QuadratureError, integrate_adaptive, l_constant, simpson_weights
from .records import MomentConstant

DEGENERATE_TOL = 1e-12
_EPS = np.finfo(float).eps
MATCH_RTOL = 1e-9
DUAL_FORMULA_RTOL = 1e-10


class DegenerateCaseError(ValueError):
    """q - p + 1 = 0: the amplitude is not determined by lambda."""


class NoScalarAmplitudeError(ValueError):
    """The solution set is a family or empty, so there is no single amplitude."""


class NewtonConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float, profile: "MeshProfile | None" = None):
        super().__init__(message)
        self.residual = residual
        self.profile = profile


class Variant(str, Enum):
    UNIQUE = "unique"
    FAMILY = "family"
    INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class ProblemSpec:
    p: float
    q: float
    n: int
    lam: float

    def __post_init__(self):
        if not self.p > 1 or not self.q > 1:
            raise ValueError(f"need p, q > 1, got p={self.p}, q={self.q}")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n}")
        if not self.lam > 0:
            raise ValueError(f"lambda must be positive, got {self.lam}")
        object.__setattr__(self, "n", int(self.n))

    @property
    def exponent(self) -> float:
        return self.q - self.p + 1

    @property
    def degenerate(self) -> bool:
        return abs(self.exponent) <= DEGENERATE_TOL


@dataclass(frozen=True)
class ExactSolution:
    """``u = amplitude * W`` (unique), ``t * W`` for every t > 0 (family), or nothing."""

    variant: Variant
    spec: ProblemSpec
    ground_state: GroundState
    m_constant: MomentConstant
    amplitude: float | None = None

    def profile(self, x, t: float | None = None):
        """Sample the solution at ``x``; a family member needs an explicit ``t``."""
        return _scale_for(self, t) * evaluate_w(self.ground_state, x)


@dataclass(frozen=True)
class BifurcationCurve:
    samples: tuple[tuple[float, float], ...]
    formula_id: str
    exponent: float


@dataclass(frozen=True)
class MeshProfile:
    """Values ``u_0..u_N`` on the uniform mesh ``x_i = i/N``."""

    values: np.ndarray
    iterations: int | None = None
    residual: float | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size < 3:
            raise ValueError("a mesh profile needs at least three values")
        if v[0] != 0.0 or v[-1] != 0.0:
            raise ValueError("mesh profile must vanish at both ends")
        object.__setattr__(self, "values", v)

    @property
    def mesh_size(self) -> int:
        return self.values.size - 1

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.values.size) / self.mesh_size


@dataclass(frozen=True)
class ResidualReport:
    mesh_sizes: tuple[int, ...]
    max_norms: tuple[float, ...]
    l2_norms: tuple[float, ...]
    orders: tuple[float, ...]
    coefficient: float
    coefficient_expected: float | None
    coefficient_rel_deviation: float | None

    @property
    def observed_order(self) -> float | None:
        return self.orders[-1] if self.orders else None


def solve_exact(spec: ProblemSpec) -> ExactSolution:
    """Classify and construct the solution set for ``spec``."""
    gs = ground_state(spec.p)
    m = m_constant(gs, spec.n, spec.q)
    if not spec.degenerate:
        try:
            amplitude = (spec.lam / m.value) ** (1.0 / spec.exponent)
        except OverflowError:
            raise OverflowError(
                f"amplitude (lambda/M)**(1/{spec.exponent:g}) is outside the float range") from None
        return ExactSolution(Variant.UNIQUE, spec, gs, m, amplitude)
    if abs(spec.lam - m.value) <= MATCH_RTOL * m.value:
        return ExactSolution(Variant.FAMILY, spec, gs, m)
    return ExactSolution(Variant.INFEASIBLE, spec, gs, m)


def _scale_for(sol: ExactSolution, t: float | None) -> float:
    if sol.variant is Variant.UNIQUE:
        return sol.amplitude if t is None else t
    if sol.variant is Variant.FAMILY:
        if t is None or not t > 0:
            raise NoScalarAmplitudeError("family of solutions: choose a positive t")
        return t
    raise NoScalarAmplitudeError("problem has no solution for this lambda")


def alpha_of_lambda(sol: ExactSolution) -> float:
    """Sup-norm ``t * xi`` of the unique solution."""
    if sol.variant is not Variant.UNIQUE:
        raise NoScalarAmplitudeError(f"{sol.variant.value} solution set has no single amplitude")
    return sol.amplitude * sol.ground_state.xi


def lambda_of_alpha_n1(gs: GroundState, q: float, alpha):
    """``lam = (p+1) L_{p,0} L_{p,q} alpha**(q-p+1)``, valid for n = 1."""
    p = gs.p
    return (p + 1) * l_constant(p, 0.0).value * l_constant(p, float(q)).value * np.asarray(alpha) ** (q - p + 1)


def lambda_of_alpha(gs: GroundState, n: int, q: float, alpha):
    """``lam = M_{n,q} xi**-(q-p+1) alpha**(q-p+1)``.

    For n = 1 the closed form in terms of L constants is evaluated as well and
    the two must agree to 1e-10 relative.
    """
    e = q - gs.p + 1
    if abs(e) <= DEGENERATE_TOL:
        raise DegenerateCaseError(
            "q - p + 1 = 0: the curve degenerates to the vertical line lambda = M_{n,q}")
    a = np.asarray(alpha, dtype=float)
    if np.any(a <= 0):
        raise ValueError("alpha must be positive")
    m = m_constant(gs, n, q).value
    lam = m * gs.xi ** (-e) * a ** e
    if n == 1:
        other = lambda_of_alpha_n1(gs, q, a)
        gap = np.max(np.abs(lam - other) / np.abs(other))
        if gap > DUAL_FORMULA_RTOL:
            raise ArithmeticError(f"n=1 curve formulas disagree by {gap:.3e}")
    return lam[()] if a.ndim == 0 else lam


def bifurcation_curve(gs: GroundState, n: int, q: float, alphas: Sequence[float]) -> BifurcationCurve:
    alphas = np.asarray(alphas, dtype=float)
    if n == 1:
        # raises if the two n = 1 forms disagree
        lambda_of_alpha(gs, n, q, alphas)
        lam = lambda_of_alpha_n1(gs, q, alphas)
        formula = "n1"
    else:
        lam = lambda_of_alpha(gs, n, q, alphas)
        formula = "general"
    samples = tuple((float(a), float(b)) for a, b in zip(alphas, np.atleast_1d(lam)))
    return BifurcationCurve(samples, formula, q - gs.p + 1)


def log_spaced(lo: float, hi: float, count: int) -> np.ndarray:
    if not (0 < lo <= hi) or count < 1:
        raise ValueError("need 0 < min <= max and count >= 1")
    if count == 1:
        return np.array([lo])
    return np.geomspace(lo, hi, count)


def convolution_eval(h: Callable, u, q: float, t: float) -> float:
    """``(h * u**q)(t) = int_0^t h(t-s) u(s)**q ds``.

    ``u`` is a vectorised callable (adaptive quadrature) or a
    :class:`MeshProfile` (Simpson on the mesh nodes up to ``t``, with a
    trapezoid for a trailing partial cell).
    """
    if not 0.0 <= t <= 1.0:
        raise ValueError("t must lie in [0, 1]")
    if t == 0.0:
        return 0.0
    if isinstance(u, MeshProfile):
        x, v = u.x, u.values
        j = int(math.floor(t * u.mesh_size + 1e-9))
        xs, vs = x[: j + 1], v[: j + 1]
        total = 0.0
        if j >= 1:
            total = float(simpson(h(t - xs) * np.abs(vs) ** q, x=xs))
        if t - x[j] > 1e-12:
            vt = np.interp(t, x, v)
            total += 0.5 * (t - x[j]) * (h(t - x[j]) * abs(v[j]) ** q + h(0.0) * abs(vt) ** q)
        return total

    def f(s):
        return h(t - s) * u(s) ** q

    res = integrate_adaptive(f, 0.0, t, 1e-300, rtol=1e-13)
    if not res.converged:
        raise QuadratureError(f"convolution did not converge: {res.value} +/- {res.error_estimate}")
    return res.value


def kirchhoff_coefficient(sol: ExactSolution, t: float | None = None) -> float:
    """``int_0^1 (1-x)**n u**q`` for the exact solution, via convolution quadrature."""
    scale = _scale_for(sol, t)
    gs, spec = sol.ground_state, sol.spec
    n = spec.n
    return convolution_eval(lambda y: y ** n, lambda s: scale * evaluate_w(gs, s), spec.q, 1.0)


def _mesh_operators(spec: ProblemSpec, N: int):
    x = np.arange(N + 1) / N
    weights = simpson_weights(N, 1.0 / N) * (1.0 - x) ** spec.n
    return x, weights


def _discrete_residual(u: np.ndarray, spec: ProblemSpec, N: int, weights: np.ndarray):
    """Residual on interior nodes plus the pieces reused by the Jacobian."""
    h2 = (1.0 / N) ** 2
    au = (-u[:-2] + 2.0 * u[1:-1] - u[2:]) / h2
    coef = float(weights @ np.abs(u) ** spec.q)
    inner = u[1:-1]
    return coef * au - spec.lam * inner ** spec.p, au, coef


def residual_check(target, spec: ProblemSpec, N: int = 128, *, t: float | None = None,
                   levels: int = 3) -> ResidualReport:
    """Finite-difference residual of the nonlocal equation on uniform meshes.

    For an :class:`ExactSolution` the residual is measured on ``N, 2N, 4N, ...``
    (``levels`` meshes) and the observed order reported. A :class:`MeshProfile`
    is checked on its own mesh only.
    """
    if isinstance(target, MeshProfile):
        profiles = [target.values]
        sizes = [target.mesh_size]
        exact = solve_exact(spec)
        scale = exact.amplitude if exact.variant is Variant.UNIQUE else t
        m_value = exact.m_constant.value
    else:
        if N < 64:
            raise ValueError("N must be at least 64")
        scale = _scale_for(target, t)
        sizes = [N * 2 ** i for i in range(levels)]
        profiles = [scale * evaluate_w(target.ground_state, np.arange(k + 1) / k) for k in sizes]
        m_value = target.m_constant.value

    max_norms, l2_norms = [], []
    coefficient = None
    for size, u in zip(sizes, profiles):
        if np.any(u[1:-1] <= 0):
            raise ValueError("profile must be positive in the interior")
        _, weights = _mesh_operators(spec, size)
        r, _, coef = _discrete_residual(u, spec, size, weights)
        if coefficient is None:
            coefficient = coef
        max_norms.append(float(np.max(np.abs(r))))
        l2_norms.append(float(math.sqrt(np.sum(r * r) / size)))
    orders = tuple(math.log2(a / b) for a, b in zip(max_norms, max_norms[1:]))
    expected = None if scale is None else scale ** spec.q * m_value
    deviation = None if expected is None else abs(coefficient - expected) / expected
    return ResidualReport(tuple(sizes), tuple(max_norms), tuple(l2_norms), orders,
                          coefficient, expected, deviation)


def parabola_guess(spec: ProblemSpec, N: int) -> MeshProfile:
    """``c x(1-x)`` with ``c`` balancing the equation in the mean."""
    x, weights = _mesh_operators(spec, N)
    phi = x * (1.0 - x)
    k_phi = float(weights @ phi ** spec.q)
    mean_phi_p = float(simpson_weights(N, 1.0 / N) @ phi ** spec.p)
    c = (spec.lam * mean_phi_p / (2.0 * k_phi)) ** (1.0 / spec.exponent)
    u = c * phi
    u[0] = u[-1] = 0.0
    return MeshProfile(u)


def scaled_exact_guess(spec: ProblemSpec, N: int, factor: float = 1.1) -> MeshProfile:
    sol = solve_exact(spec)
    return MeshProfile(factor * sol.profile(np.arange(N + 1) / N))


def _rebalance(u: np.ndarray, spec: ProblemSpec, au: np.ndarray, coef: float) -> np.ndarray:
    """Rescale ``u`` so that ``F(t u)`` is least-squares balanced in ``t**(q-p+1)``.

    ``F(t u) = t**(q+1) K(u) A u - lam t**p u**p``; at a discrete solution t = 1.
    """
    ratio = spec.lam * float(au @ u[1:-1] ** spec.p) / (coef * float(au @ au))
    return u * ratio ** (1.0 / spec.exponent)


def _relative_residual(r: np.ndarray, u: np.ndarray, spec: ProblemSpec) -> float:
    # the absolute residual also shrinks by collapsing u towards 0, so normalise
    return float(np.linalg.norm(r)) / (spec.lam * float(np.linalg.norm(u[1:-1] ** spec.p)))


def newton_solve_discrete(spec: ProblemSpec, N: int, initial: MeshProfile | None = None, *,
                          tol: float = 1e-10, max_iter: int = 50, max_halvings: int = 30,
                          shape_tol: float = 1e-3, max_shape_sweeps: int = 200) -> MeshProfile:
    """Solve the discretised nonlocal problem on the N-1 interior nodes.

    Centred second differences, composite Simpson for the coefficient
    integral. Starting values far from a solution are first improved by the
    normalised fixed-point sweep ``u <- A^{-1}(lam u**p) / K(u)`` followed by an
    amplitude rebalance, until the relative residual drops below
    ``shape_tol``. Damped Newton then finishes; its Jacobian is tridiagonal
    plus the rank-one term from the coefficient integral and is solved with
    Sherman-Morrison. Converged means a residual max-norm at most ``tol``, or
    within a hundred times rounding level when that is larger.
    """
    if spec.degenerate:
        raise DegenerateCaseError("q - p + 1 = 0: the discrete problem has no isolated solution")
    if N < 4 or N % 2:
        raise ValueError("N must be an even integer >= 4")
    if initial is None:
        initial = scaled_exact_guess(spec, N)
    if initial.mesh_size != N:
        raise ValueError("initial profile is on a different mesh")
    u = initial.values.copy()
    if np.any(u[1:-1] <= 0):
        raise ValueError("initial profile must be positive in the interior")

    p, q, lam = spec.p, spec.q, spec.lam
    _, weights = _mesh_operators(spec, N)
    h2 = (1.0 / N) ** 2
    lap = np.zeros((3, N - 1))
    lap[0, 1:] = lap[2, :-1] = -1.0 / h2
    lap[1, :] = 2.0 / h2

    r, au, coef = _discrete_residual(u, spec, N, weights)
    for _ in range(max_shape_sweeps):
        if _relative_residual(r, u, spec) <= shape_tol:
            break
        v = np.zeros_like(u)
        v[1:-1] = solve_banded((1, 1), lap, lam * u[1:-1] ** p) / coef
        _, av, cv = _discrete_residual(v, spec, N, weights)
        u = _rebalance(v, spec, av, cv)
        r, au, coef = _discrete_residual(u, spec, N, weights)

    def floor(v, c):
        top = float(np.max(v))
        return 100.0 * _EPS * (4.0 * c * top / h2 + lam * top ** p)

    iterations = 0
    rnorm = float(np.max(np.abs(r)))
    while rnorm > max(tol, floor(u, coef)):
        if iterations >= max_iter:
            raise NewtonConvergenceError(
                f"Newton did not converge in {max_iter} iterations", rnorm, MeshProfile(u))
        inner = u[1:-1]
        band = coef * lap
        band[1, :] -= lam * p * inner ** (p - 1)
        grad = weights[1:-1] * q * inner ** (q - 1)
        y = solve_banded((1, 1), band, r)
        z = solve_banded((1, 1), band, au)
        step = y - z * (grad @ y) / (1.0 + grad @ z)

        current = _relative_residual(r, u, spec)
        theta = 1.0
        for _ in range(max_halvings + 1):
            trial = u.copy()
            trial[1:-1] -= theta * step
            if np.all(trial[1:-1] > 0):
                tr, tau, tcoef = _discrete_residual(trial, spec, N, weights)
                if _relative_residual(tr, trial, spec) < current:
                    break
            theta *= 0.5
        else:
            raise NewtonConvergenceError(
                "damping could not reduce the residual while keeping u positive",
                rnorm, MeshProfile(u))
        u, r, au, coef = trial, tr, tau, tcoef
        rnorm = float(np.max(np.abs(r)))
        iterations += 1
    return MeshProfile(u, iterations=iterations, residual=rnorm)
