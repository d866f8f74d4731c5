"""Optimal close-out of a short position opened at price x0.

The constrained problem is the fixed-barrier problem with ``kappa = x0``: the
collateral runs out when the price first reaches ``x0 + c``. The unconstrained
benchmark drops both the barrier and recall (``c -> inf``, ``lam -> 0``) and
reduces to a perpetual American put struck at x0.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

from .boundary import solve_simpler, value_simpler
from .errors import DomainError
from .gbm import ModelParams, exp_guarded, root_term
from .regime import EQUALITY_RTOL, Regime, classify

__all__ = [
    "PolicyKind",
    "Policy",
    "ShortSaleSolution",
    "solve_constrained",
    "solve_unconstrained",
    "solve",
    "LIMIT_C_FRACTION",
]

# c used (as a fraction of x0) to report the threshold in the c -> 0 limit
LIMIT_C_FRACTION = 1e-6


class PolicyKind(enum.Enum):
    INTERIOR = "interior"  # close when the price first falls to the threshold
    IMMEDIATE = "immediate"  # close now; the short sale has no value
    WAIT_FOREVER = "wait_forever"  # never close voluntarily
    NO_OPTIMAL = "no_optimal"  # value is a supremum that no threshold attains


class Policy(NamedTuple):
    threshold: float
    value: float
    kind: PolicyKind


@dataclass(frozen=True)
class ShortSaleSolution:
    x0: float
    params: ModelParams
    regime: Regime
    constrained_z: float
    constrained_value: float
    unconstrained_z: float
    unconstrained_value: float
    immediate_close: bool
    wait_forever: bool
    no_optimal_policy: bool = False
    limit_z: Optional[float] = None

    @property
    def threshold_gap(self) -> float:
        return self.constrained_z - self.unconstrained_z

    @property
    def value_gap(self) -> float:
        """Loss of value caused by margin and recall risk."""
        return self.unconstrained_value - self.constrained_value


def _check_x0(x0: float) -> float:
    if not (x0 > 0 and math.isfinite(x0)):
        raise DomainError(f"x0 must be a positive finite price, got {x0}")
    return float(x0)


def solve_constrained(x0: float, p: ModelParams) -> Policy:
    x0 = _check_x0(x0)
    if p.c == 0:
        # the barrier sits at x0 itself: forced close-out at time zero
        return Policy(x0, 0.0, PolicyKind.IMMEDIATE)
    sol = solve_simpler(x0, p)
    if sol.regime is Regime.E:
        return Policy(0.0, value_simpler(sol, x0), PolicyKind.WAIT_FOREVER)
    if sol.regime is Regime.A and sol.z_star < x0:
        return Policy(sol.z_star, value_simpler(sol, x0), PolicyKind.INTERIOR)
    return Policy(x0, 0.0, PolicyKind.IMMEDIATE)


def solve_unconstrained(x0: float, p: ModelParams) -> Policy:
    x0 = _check_x0(x0)
    if p.r > EQUALITY_RTOL:
        s = root_term(p.r, p)
        nu = p.nu
        z = x0 * (s + nu) / (1.0 + s + nu)
        # (x0 - z) * phi_r(x0) / phi_r(z)
        value = (x0 - z) * exp_guarded((-s - nu) * math.log(x0 / z))
        return Policy(z, value, PolicyKind.INTERIOR)
    half_var = 0.5 * p.sigma**2
    if abs(p.mu - half_var) <= EQUALITY_RTOL * max(1.0, half_var):
        return Policy(0.0, x0, PolicyKind.NO_OPTIMAL)
    if p.mu < half_var:
        return Policy(0.0, x0, PolicyKind.WAIT_FOREVER)
    return Policy(x0, 0.0, PolicyKind.IMMEDIATE)


def solve(x0: float, p: ModelParams) -> ShortSaleSolution:
    """Constrained and unconstrained solutions at the same initial price."""
    x0 = _check_x0(x0)
    con = solve_constrained(x0, p)
    unc = solve_unconstrained(x0, p)
    limit_z = None
    if p.c == 0:
        limit_z = solve_constrained(x0, p.with_(c=LIMIT_C_FRACTION * x0)).threshold
    return ShortSaleSolution(
        x0=x0,
        params=p,
        regime=classify(x0, p),
        constrained_z=con.threshold,
        constrained_value=con.value,
        unconstrained_z=unc.threshold,
        unconstrained_value=unc.value,
        immediate_close=con.kind is PolicyKind.IMMEDIATE,
        wait_forever=con.kind is PolicyKind.WAIT_FOREVER,
        no_optimal_policy=unc.kind is PolicyKind.NO_OPTIMAL,
        limit_z=limit_z,
    )
