"""Exact solutions of the 1-d convolutional Kirchhoff problem

    -(int_0^1 (1-x)**n u**q dx) u'' = lam * u**p,   u(0) = u(1) = 0,

built from the ground state W of -W'' = W**p and a ledger of moment constants.
"""

from .constants import (NoClosedFormError, UnsupportedIndexError, m_constant, r_constant,
                        s1_recursion, s2_recursion, s_base, s_quadrature, s_rp_reduction)
from .ground_state import (GroundState, OracleFailure, evaluate_w, evaluate_w_prime, ground_state,
                           shoot_ode_oracle, sup_norm_xi, time_map_x_of_w)
from .nonlocal_problem import (BifurcationCurve, DegenerateCaseError, ExactSolution, MeshProfile,
                               NewtonConvergenceError, NoScalarAmplitudeError, ProblemSpec, Variant,
                               alpha_of_lambda, bifurcation_curve, convolution_eval,
                               lambda_of_alpha, newton_solve_discrete, parabola_guess,
                               residual_check, solve_exact)
from .quadrature import (Integrand, IntegrandError, QuadratureError, QuadratureResult, Singularity,
                         beta_oracle, integrate_adaptive, l_constant)
from .records import Kind, Method, MomentConstant

__all__ = [
    "BifurcationCurve", "DegenerateCaseError", "ExactSolution", "GroundState", "Integrand",
    "IntegrandError", "Kind", "MeshProfile", "Method", "MomentConstant", "NewtonConvergenceError",
    "NoClosedFormError", "NoScalarAmplitudeError", "OracleFailure", "ProblemSpec",
    "QuadratureError", "QuadratureResult", "Singularity", "UnsupportedIndexError", "Variant",
    "alpha_of_lambda", "beta_oracle", "bifurcation_curve", "convolution_eval", "evaluate_w",
    "evaluate_w_prime", "ground_state", "integrate_adaptive", "l_constant", "lambda_of_alpha",
    "m_constant", "newton_solve_discrete", "parabola_guess", "r_constant", "residual_check",
    "s1_recursion", "s2_recursion", "s_base", "s_quadrature", "s_rp_reduction",
    "shoot_ode_oracle", "solve_exact", "sup_norm_xi", "time_map_x_of_w",
]
