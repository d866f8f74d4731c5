"""Optimal close-out of short sales under margin and recall risk.

The price follows a geometric Brownian motion. A short seller with collateral
budget ``c`` is forced out when the price first rises to ``x0 + c``, and the
stock lender may recall the shares at an exponential time of intensity
``lam``. The package computes the optimal buy-back threshold and its value,
the unconstrained benchmark, a Monte Carlo cross-check and comparative
statics.
"""

from .boundary import (
    SimplerSolution,
    ValueKind,
    early_exercise_gap,
    policy_value,
    solve_simpler,
    value_derivatives,
    value_simpler,
)
from .errors import CloseoutError, ConvergenceError, DomainError, SingularParameterError
from .gbm import (
    DEFAULTS,
    Direction,
    ModelParams,
    SolutionKind,
    fundamental_solution,
    fundamental_solution_derivative,
    generator,
    hitting_laplace,
    particular_solution,
    scale_derivative,
    wronskian,
)
from .montecarlo import Estimator, McConfig, McEstimate, estimate_hitting_laplace, estimate_value
from .regime import Regime, RootReport, classify, eval_H, eval_H_prime, locate_root
from .shortsale import Policy, PolicyKind, ShortSaleSolution, solve, solve_constrained, solve_unconstrained
from .statics import SweepRow, SweepSpec, drift_misestimation, emit_csv, run_sweep
from .svg import emit_svg

__all__ = [
    "CloseoutError",
    "ConvergenceError",
    "DEFAULTS",
    "Direction",
    "DomainError",
    "Estimator",
    "McConfig",
    "McEstimate",
    "ModelParams",
    "Policy",
    "PolicyKind",
    "Regime",
    "RootReport",
    "ShortSaleSolution",
    "SimplerSolution",
    "SingularParameterError",
    "SolutionKind",
    "SweepRow",
    "SweepSpec",
    "ValueKind",
    "classify",
    "drift_misestimation",
    "early_exercise_gap",
    "emit_csv",
    "emit_svg",
    "estimate_hitting_laplace",
    "estimate_value",
    "eval_H",
    "eval_H_prime",
    "fundamental_solution",
    "fundamental_solution_derivative",
    "generator",
    "hitting_laplace",
    "locate_root",
    "particular_solution",
    "policy_value",
    "run_sweep",
    "scale_derivative",
    "solve",
    "solve_constrained",
    "solve_simpler",
    "solve_unconstrained",
    "value_derivatives",
    "value_simpler",
    "wronskian",
]
