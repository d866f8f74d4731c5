"""
Closed-form primitives for geometric Brownian motion
====================================================

SDE (Itô):
    dX_t = mu * X_t * dt + sigma * X_t * dB_t,  sigma > 0

For a discount rate ``alpha > 0`` the ODE

    0.5 * sigma^2 * x^2 * u''(x) + mu * x * u'(x) = alpha * u(x)

has the decreasing and increasing solutions

    phi_alpha(x) = x ** (-s - nu),   psi_alpha(x) = x ** (s - nu),

with ``nu = mu / sigma^2 - 1/2`` and ``s = sqrt(nu^2 + 2 alpha / sigma^2)``.
Everything here is a pure function of its arguments. Powers are evaluated as
``exp(exponent * log(x))`` so that large exponents overflow to ``inf`` instead
of raising.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

from .errors import DomainError, SingularParameterError

__all__ = [
    "ModelParams",
    "SolutionKind",
    "Direction",
    "DEFAULTS",
    "exp_guarded",
    "root_term",
    "fundamental_solution",
    "fundamental_solution_derivative",
    "fundamental_solution_second_derivative",
    "wronskian",
    "scale_derivative",
    "generator",
    "hitting_laplace",
    "particular_solution",
]

SINGULAR_RTOL = 1e-12


@dataclass(frozen=True)
class ModelParams:
    """Market and constraint parameters.

    Attributes:
        mu: Drift rate of the stock price (per year).
        sigma: Volatility (per sqrt-year), strictly positive.
        r: Discount rate (per year), non-negative.
        lam: Recall intensity (per year). Zero is accepted and means recall
            never happens; every rate actually used is ``lam + r``, which
            must then be positive.
        c: Collateral budget (currency), non-negative.
    """

    mu: float
    sigma: float
    r: float
    lam: float
    c: float

    def __post_init__(self) -> None:
        for name in ("mu", "sigma", "r", "lam", "c"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                raise DomainError(f"{name} must be a finite number, got {value!r}")
        if self.sigma <= 0:
            raise DomainError(f"sigma must be > 0, got {self.sigma}")
        if self.r < 0:
            raise DomainError(f"r must be >= 0, got {self.r}")
        if self.lam < 0:
            raise DomainError(f"lam must be >= 0, got {self.lam}")
        if self.c < 0:
            raise DomainError(f"c must be >= 0, got {self.c}")

    @property
    def nu(self) -> float:
        return self.mu / self.sigma**2 - 0.5

    def with_(self, **changes: float) -> "ModelParams":
        """Copy with some fields replaced (validated again)."""
        return replace(self, **changes)


# Default comparative-statics parameters; mu defaults to the negative-drift case.
DEFAULTS = ModelParams(mu=-0.02, sigma=0.3, r=0.05, lam=0.01, c=50.0)


class SolutionKind(enum.Enum):
    DECREASING = "decreasing"  # phi_alpha
    INCREASING = "increasing"  # psi_alpha


class Direction(enum.Enum):
    UP = "up"
    DOWN = "down"


def exp_guarded(v: float) -> float:
    """``math.exp`` that saturates to ``inf`` instead of raising OverflowError."""
    try:
        return math.exp(v)
    except OverflowError:
        return math.inf


def _check_alpha(alpha: float) -> None:
    if not alpha > 0:
        raise DomainError(f"alpha must be > 0, got {alpha}")


def _check_price(name: str, x: float) -> None:
    if not x > 0:
        raise DomainError(f"{name} must be > 0, got {x}")


def root_term(alpha: float, p: ModelParams) -> float:
    """``sqrt(nu^2 + 2 alpha / sigma^2)``, the half-Wronskian."""
    _check_alpha(alpha)
    nu = p.nu
    return math.sqrt(nu * nu + 2.0 * alpha / p.sigma**2)


def _exponent(kind: SolutionKind, alpha: float, p: ModelParams) -> float:
    s = root_term(alpha, p)
    if kind is SolutionKind.DECREASING:
        return -s - p.nu
    return s - p.nu


def fundamental_solution(kind: SolutionKind, alpha: float, x: float, p: ModelParams) -> float:
    """phi_alpha(x) for DECREASING, psi_alpha(x) for INCREASING."""
    _check_price("x", x)
    return exp_guarded(_exponent(kind, alpha, p) * math.log(x))


def fundamental_solution_derivative(
    kind: SolutionKind, alpha: float, x: float, p: ModelParams
) -> float:
    _check_price("x", x)
    e = _exponent(kind, alpha, p)
    return e * exp_guarded(e * math.log(x)) / x


def fundamental_solution_second_derivative(
    kind: SolutionKind, alpha: float, x: float, p: ModelParams
) -> float:
    _check_price("x", x)
    e = _exponent(kind, alpha, p)
    return e * (e - 1.0) * exp_guarded(e * math.log(x)) / (x * x)


def wronskian(alpha: float, p: ModelParams) -> float:
    """``(phi psi' - phi' psi) / s'`` which does not depend on the price."""
    return 2.0 * root_term(alpha, p)


def scale_derivative(x: float, p: ModelParams) -> float:
    """Derivative of the scale function, ``x ** (-2 nu - 1)``."""
    _check_price("x", x)
    return exp_guarded((-2.0 * p.nu - 1.0) * math.log(x))


def generator(u: float, du: float, d2u: float, x: float, p: ModelParams) -> float:
    """Infinitesimal generator ``0.5 sigma^2 x^2 u'' + mu x u'`` at x."""
    return 0.5 * p.sigma**2 * x * x * d2u + p.mu * x * du


def hitting_laplace(
    direction: Direction, x: float, z: float, alpha: float, p: ModelParams
) -> float:
    """Laplace transform ``E_x[exp(-alpha * tau)]`` of the first passage to z.

    ``Direction.UP`` is the first time X >= z, ``Direction.DOWN`` the first time
    X <= z. Returns 1 when the level is already reached at time zero.
    """
    _check_price("x", x)
    _check_price("z", z)
    _check_alpha(alpha)
    ratio = math.log(x / z)
    if direction is Direction.UP:
        if x >= z:
            return 1.0
        return exp_guarded(_exponent(SolutionKind.INCREASING, alpha, p) * ratio)
    if x <= z:
        return 1.0
    return exp_guarded(_exponent(SolutionKind.DECREASING, alpha, p) * ratio)


def particular_solution(x: float, kappa: float, p: ModelParams) -> tuple[float, float]:
    """Resolvent of the recall payoff stream ``lam * (kappa - x)`` at rate ``lam + r``.

    Returns ``(value, derivative)``. The function is affine in x, so its second
    derivative is zero.

    Raises:
        SingularParameterError: if ``lam + r - mu`` vanishes.
    """
    _check_price("x", x)
    _check_price("kappa", kappa)
    alpha = p.lam + p.r
    _check_alpha(alpha)
    gap = alpha - p.mu
    if abs(gap) < SINGULAR_RTOL * max(1.0, alpha):
        raise SingularParameterError(
            f"lam + r - mu = {gap!r} is zero; particular solution undefined"
        )
    slope = -p.lam / gap
    return p.lam * kappa / alpha + slope * x, slope
