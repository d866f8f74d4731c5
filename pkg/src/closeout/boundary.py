"""Optimal stopping with the collateral barrier fixed at ``kappa + c``.

The payoff on stopping at price x is ``kappa - x``; stopping is forced when the
price first reaches ``b = kappa + c`` (payoff ``-c``) or at an independent
exponential recall time with intensity ``lam``. The optimal rule is always a
down-crossing threshold ``z*``:

* regime A: ``z*`` is the root of H in ``(0, r kappa / (r - mu))``;
* regime E: ``z* = 0`` (never close voluntarily);
* all other regimes: ``z* = b`` (close immediately).

In regime A the continuation value on ``(z*, b)`` is written as

    V(x) = vhat(x) + [ K1 (x/z)**e_dn - K1 (x/z)**e_dn (x/b)**2s
                      - K2 (x/b)**e_up + K2 (x/b)**e_up (z/x)**2s ] / D

with ``K1 = kappa - z - vhat(z)``, ``K2 = c + vhat(b)``, ``D = 1 - (z/b)**2s``
and ``e_dn, e_up`` the exponents of phi and psi. Every power is of a ratio in
(0, 1] (or a product of such), so the form is free of the cancellation that
the raw ``A phi + B psi`` coefficients suffer from when c is large. This form
gives the derivatives.

The value itself goes through the early-exercise gap. With the affine
``F = vhat - (kappa - x)`` it is

    U(x) = F(x) - F(z) w_z(x) - F(b) w_b(x)

where ``w_z`` and ``w_b`` are the discounted probabilities of reaching z
before b and b before z. Both lie in [0, 1] and are built from ``expm1``, so
the error in U scales with |F| rather than with the terms above.

When ``(z, b)`` is thin, U is of third order in its width and even |F| eps is
too coarse. There U is integrated directly against the Green's function of
the killed diffusion. The source is ``h(y) = r kappa + (mu - r) y`` and every
other factor is positive, so the only cancellation left is the sign change of
h, which is intrinsic to U.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .gbm import ModelParams, exp_guarded, particular_solution, root_term
from .regime import Regime, RootReport, classify, eval_F, locate_root

__all__ = [
    "ValueKind",
    "SimplerSolution",
    "solve_simpler",
    "value_simpler",
    "value_derivatives",
    "early_exercise_gap",
    "policy_value",
]


# log-width (in units of the largest exponent) below which U is integrated directly
THIN_SPAN = 1.0
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


class ValueKind(enum.Enum):
    PIECEWISE_REGIME_A = "piecewise_regime_a"
    CLOSED_FORM_REGIME_E = "closed_form_regime_e"
    IMMEDIATE_PAYOFF = "immediate_payoff"


@dataclass(frozen=True)
class SimplerSolution:
    """Solution of the fixed-barrier problem.

    ``coef_A`` and ``coef_B`` multiply ``phi_{lam+r}`` and ``psi_{lam+r}`` in the
    continuation region; they are only set in regime A and are kept for
    diagnostics (the value itself is evaluated in ratio form).
    """

    kappa: float
    params: ModelParams
    regime: Regime
    z_star: float
    value_kind: ValueKind
    coef_A: float = math.nan
    coef_B: float = math.nan
    root_report: RootReport | None = None

    @property
    def barrier(self) -> float:
        return self.kappa + self.params.c


def _coefficients(kappa: float, z: float, p: ModelParams) -> tuple[float, float]:
    """A and B from the two value-matching conditions at z and b."""
    alpha = p.lam + p.r
    s = root_term(alpha, p)
    e_dn, e_up = -s - p.nu, s - p.nu
    b = kappa + p.c
    phi_z, psi_z = exp_guarded(e_dn * math.log(z)), exp_guarded(e_up * math.log(z))
    phi_b, psi_b = exp_guarded(e_dn * math.log(b)), exp_guarded(e_up * math.log(b))
    k1 = kappa - z - particular_solution(z, kappa, p)[0]
    k2 = p.c + particular_solution(b, kappa, p)[0]
    den = phi_z * psi_b - phi_b * psi_z
    coef_a = (k1 * psi_b + k2 * psi_z) / den
    coef_b = (k1 * phi_b + k2 * phi_z) / -den
    return coef_a, coef_b


def solve_simpler(kappa: float, p: ModelParams) -> SimplerSolution:
    if not kappa > 0:
        raise DomainError(f"kappa must be > 0, got {kappa}")
    regime = classify(kappa, p)
    b = kappa + p.c
    if regime is Regime.A:
        report = locate_root(kappa, p)
        z = report.root
        assert z is not None
        coef_a, coef_b = _coefficients(kappa, z, p)
        return SimplerSolution(
            kappa=kappa,
            params=p,
            regime=regime,
            z_star=z,
            value_kind=ValueKind.PIECEWISE_REGIME_A,
            coef_A=coef_a,
            coef_B=coef_b,
            root_report=report,
        )
    if regime is Regime.E:
        if not p.lam > 0:
            raise DomainError("regime E (r = 0, mu < 0) needs lam > 0")
        return SimplerSolution(kappa, p, regime, 0.0, ValueKind.CLOSED_FORM_REGIME_E)
    # regime C has a root beyond b; it is never a usable threshold
    report = locate_root(kappa, p) if regime is Regime.C else None
    return SimplerSolution(kappa, p, regime, b, ValueKind.IMMEDIATE_PAYOFF, root_report=report)


def _policy_terms(kappa: float, z: float, p: ModelParams, x: float) -> list[tuple[float, float]]:
    """(term value, power of x) pairs with ``J = vhat + sum of terms`` on ``(z, b)``.

    ``z = 0`` is the never-stop policy; only the barrier term survives (it
    needs an increasing solution that vanishes at 0, i.e. ``s > nu``).
    """
    b = kappa + p.c
    s = root_term(p.lam + p.r, p)
    e_dn, e_up = -s - p.nu, s - p.nu
    k2 = p.c + particular_solution(b, kappa, p)[0]
    lxb = math.log(x / b)
    if z == 0.0:
        return [(-k2 * exp_guarded(e_up * lxb), e_up)]
    k1 = kappa - z - particular_solution(z, kappa, p)[0]
    lxz, lzb = math.log(x / z), math.log(z / b)
    d = -math.expm1(2.0 * s * lzb)
    return [
        (k1 * exp_guarded(e_dn * lxz) / d, e_dn),
        (-k1 * exp_guarded(e_dn * lxz + 2.0 * s * lxb) / d, e_up),
        (-k2 * exp_guarded(e_up * lxb) / d, e_up),
        (k2 * exp_guarded(e_up * lxb - 2.0 * s * lxz) / d, e_dn),
    ]


def _sum_terms(kappa: float, z: float, p: ModelParams, x: float) -> tuple[float, float, float]:
    vhat, dvhat = particular_solution(x, kappa, p)
    v, dv, d2v = vhat, dvhat, 0.0
    for term, power in _policy_terms(kappa, z, p, x):
        v += term
        dv += power * term / x
        d2v += power * (power - 1.0) * term / (x * x)
    return v, dv, d2v


def _exit_weights(z: float, b: float, p: ModelParams, x: float) -> tuple[float, float]:
    """Discounted probabilities of leaving ``(z, b)`` through z and through b."""
    s = root_term(p.lam + p.r, p)
    e_dn, e_up = -s - p.nu, s - p.nu
    if z == 0.0:
        return 0.0, exp_guarded(e_up * math.log(x / b))
    span, a = math.log(b / z), math.log(x / z)
    den = math.expm1(-2.0 * s * span)
    w_z = exp_guarded(e_dn * a) * (math.expm1(-2.0 * s * (span - a)) / den)
    w_b = exp_guarded(e_up * (a - span)) * (math.expm1(-2.0 * s * a) / den)
    return w_z, w_b


def _gauss(f, lo: float, hi: float) -> float:
    half = 0.5 * (hi - lo)
    t = lo + half * (_GL_NODES + 1.0)
    return half * math.fsum(_GL_WEIGHTS * f(t))


def _thin_gap(kappa: float, z: float, b: float, p: ModelParams, x: float, s: float) -> float:
    """U on a thin ``(z, b)`` from its Green's-function integral, in ``t = log(y / z)``."""
    nu = p.nu
    span = math.log1p((b - z) / z)
    a = math.log1p((x - z) / z)
    h_z = p.r * kappa + (p.mu - p.r) * z
    h = lambda t: h_z + (p.mu - p.r) * z * np.expm1(t)  # noqa: E731
    left = _gauss(lambda t: np.exp(nu * t) * np.sinh(s * t) * h(t), 0.0, a)
    right = _gauss(lambda t: np.exp(nu * t) * np.sinh(s * (span - t)) * h(t), a, span)
    inner = math.sinh(s * (span - a)) * left + math.sinh(s * a) * right
    return -2.0 * math.exp(-nu * a) * inner / (p.sigma**2 * s * math.sinh(s * span))


def _gap(kappa: float, z: float, p: ModelParams, x: float) -> float:
    """``U(x) = J(x) - (kappa - x)`` for the threshold z, with x inside ``(z, b)``."""
    b = kappa + p.c
    if z > 0:
        s = root_term(p.lam + p.r, p)
        if math.log(b / z) * (s + abs(p.nu)) <= THIN_SPAN:
            return _thin_gap(kappa, z, b, p, x, s)
    w_z, w_b = _exit_weights(z, b, p, x)
    f_z = eval_F(z, kappa, p) if z > 0 else 0.0
    return math.fsum((eval_F(x, kappa, p), -f_z * w_z, -eval_F(b, kappa, p) * w_b))


def policy_value(kappa: float, z: float, x: float, p: ModelParams) -> float:
    """Value at x of "stop at the first fall to z" with the barrier at ``kappa + c``.

    Any ``z in [0, kappa + c]`` is allowed; the optimal threshold is only
    special in that the value also pastes smoothly there. Needs
    ``lam + r > 0``.
    """
    if not x > 0:
        raise DomainError(f"x must be > 0, got {x}")
    if not kappa > 0:
        raise DomainError(f"kappa must be > 0, got {kappa}")
    b = kappa + p.c
    if not 0.0 <= z <= b:
        raise DomainError(f"z must lie in [0, {b}], got {z}")
    if not p.lam + p.r > 0:
        raise DomainError("lam + r must be > 0 for a finite policy value")
    if x <= z or x >= b:
        return kappa - x
    return (kappa - x) + _gap(kappa, z, p, x)


def _regime_e_gap(p: ModelParams, b: float, x: float) -> float:
    """U in regime E as ``-mu x / (lam - mu) * (1 - (x / b)**(e - 1))``, every factor positive."""
    s = root_term(p.lam, p)
    # e - 1 = s - nu - 1, rationalised so that it keeps its digits as lam - mu -> 0
    e_minus_1 = 2.0 * (p.lam - p.mu) / p.sigma**2 / (s + p.nu + 1.0)
    return -p.mu * x / (p.lam - p.mu) * -math.expm1(-e_minus_1 * math.log(b / x))


def value_derivatives(sol: SimplerSolution, x: float) -> tuple[float, float, float]:
    """``(V, V', V'')`` at x, using analytic derivatives of each piece.

    At the kinks (``z*`` and ``b``) the right-hand derivative is returned at
    ``z*`` and the right-hand (payoff) derivative at ``b``.
    """
    if not x > 0:
        raise DomainError(f"x must be > 0, got {x}")
    p = sol.params
    kappa, b = sol.kappa, sol.barrier
    if sol.value_kind is ValueKind.IMMEDIATE_PAYOFF or x >= b:
        return kappa - x, -1.0, 0.0
    if sol.value_kind is ValueKind.CLOSED_FORM_REGIME_E:
        s = root_term(p.lam, p)
        e_up = s - p.nu
        lin = -p.lam / (p.lam - p.mu)
        term = p.mu * b / (p.lam - p.mu) * exp_guarded(e_up * math.log(x / b))
        return (
            (kappa - x) + _regime_e_gap(p, b, x),
            lin + e_up * term / x,
            e_up * (e_up - 1.0) * term / (x * x),
        )
    if x < sol.z_star:
        return kappa - x, -1.0, 0.0
    _, dv, d2v = _sum_terms(kappa, sol.z_star, p, x)
    return (kappa - x) + _gap(kappa, sol.z_star, p, x), dv, d2v


def value_simpler(sol: SimplerSolution, x: float) -> float:
    if not x > 0:
        raise DomainError(f"x must be > 0, got {x}")
    if sol.value_kind is ValueKind.PIECEWISE_REGIME_A and x == sol.z_star:
        return sol.kappa - x
    return value_derivatives(sol, x)[0]


def early_exercise_gap(sol: SimplerSolution, x: float) -> float:
    """``U(x) = V(x) - (kappa - x)``: the value of being allowed to wait."""
    if not x > 0:
        raise DomainError(f"x must be > 0, got {x}")
    if sol.value_kind is ValueKind.PIECEWISE_REGIME_A and sol.z_star < x < sol.barrier:
        return _gap(sol.kappa, sol.z_star, sol.params, x)
    if sol.value_kind is ValueKind.CLOSED_FORM_REGIME_E and x < sol.barrier:
        return _regime_e_gap(sol.params, sol.barrier, x)
    return value_simpler(sol, x) - (sol.kappa - x)
