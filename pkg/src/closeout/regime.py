"""Root structure of the free-boundary function H and the seven parameter regimes.

With ``b = kappa + c``, ``alpha = lam + r`` and

    F(z) = (r - mu) z / (alpha - mu) - r kappa / alpha
    G(z) = phi(b) psi(z) - phi(z) psi(b)

the function is ``H(z) = (F'G - FG') / (w s'(z)) + F(b)``. A threshold
``z in (0, b)`` satisfies the smooth-pasting condition iff ``H(z) = 0``.

H is evaluated after dividing G by ``phi(b) psi(b) = b**(-2 nu)``, which turns
every power into a power of ``z / b``:

    H(z) = [ q**(s+nu) (F'z - (s-nu) F) - q**(nu-s) (F'z + (s+nu) F) ] / (2s) + F(b)

with ``q = z / b``. Only one of the two powers can be large on either side of
b, so the form saturates to +-inf rather than producing inf - inf.

Near b that form cancels badly (H vanishes to second order at b, and to third
order on the boundary of regime B). With ``t = log(z / b)`` the same function
is

    2s H = sum_i c_i (exp(a_i t) - 1)

where the first-order terms cancel exactly and the second-order ones add up to
``2s t**2 (mu b - r c) / sigma**2``. Subtracting both analytically leaves a sum
of third-order remainders that keeps full relative accuracy as ``z -> b``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Optional

from .errors import ConvergenceError, DomainError, SingularParameterError
from .gbm import SINGULAR_RTOL, ModelParams, exp_guarded, root_term

__all__ = [
    "Regime",
    "RootReport",
    "eval_F",
    "eval_H",
    "eval_H_prime",
    "classify",
    "locate_root",
    "bisect",
]

EQUALITY_RTOL = 1e-12
# largest |a t| for which the expanded form of H is used
SERIES_REACH = 30.0
MAX_BISECTIONS = 200
MAX_DOUBLINGS = 100
MAX_HALVINGS = 200


class Regime(enum.Enum):
    """Parameter regimes (a)-(g) for the roots of H.

    A: mu < rc/(kappa+c), r > 0        second root in (0, r kappa / (r - mu))
    B: mu = rc/(kappa+c), r > 0        only root kappa + c (inflection)
    C: rc/(kappa+c) < mu < r, r > 0    second root beyond kappa + c
    D: mu >= r > 0                     only root kappa + c (global min)
    E: mu < 0 = r                      only root kappa + c (global max)
    F: mu = 0 = r                      H identically zero
    G: mu > 0 = r                      only root kappa + c (global min)
    """

    A = "A"
    B = "B"
    C = "C"
    D = "D"
    E = "E"
    F = "F"
    G = "G"


@dataclass(frozen=True)
class RootReport:
    regime: Regime
    root: Optional[float] = None
    bracket: Optional[tuple[float, float]] = None
    stationary_point: Optional[float] = None


def _is_zero(v: float, scale: float = 1.0) -> bool:
    return abs(v) <= EQUALITY_RTOL * max(1.0, abs(scale))


def classify(kappa: float, p: ModelParams) -> Regime:
    if not kappa > 0:
        raise DomainError(f"kappa must be > 0, got {kappa}")
    mu, r = p.mu, p.r
    if _is_zero(r):
        if _is_zero(mu):
            return Regime.F
        return Regime.E if mu < 0 else Regime.G
    threshold = r * p.c / (kappa + p.c)
    if _is_zero(mu - threshold, threshold):
        return Regime.B
    if mu < threshold:
        return Regime.A
    if mu < r:
        return Regime.C
    return Regime.D


def _alpha_gap(p: ModelParams) -> tuple[float, float]:
    alpha = p.lam + p.r
    if not alpha > 0:
        raise DomainError(f"lam + r must be > 0, got {alpha}")
    gap = alpha - p.mu
    if abs(gap) < SINGULAR_RTOL * max(1.0, alpha):
        raise SingularParameterError(f"lam + r - mu = {gap!r}; H is undefined")
    return alpha, gap


def eval_F(z: float, kappa: float, p: ModelParams) -> float:
    """``F(z) = vhat(z) - (kappa - z)``."""
    alpha, gap = _alpha_gap(p)
    return (p.r - p.mu) * z / gap - p.r * kappa / alpha


def _expm1_tail3(x: float) -> float:
    """``exp(x) - 1 - x - x**2/2`` without cancellation for small x."""
    if abs(x) > 0.5:
        return math.expm1(x) - x - 0.5 * x * x
    term = x * x * x / 6.0
    total = term
    k = 3
    while abs(term) > 1e-17 * abs(total):
        k += 1
        term *= x / k
        total += term
    return total


def eval_H(z: float, kappa: float, p: ModelParams) -> float:
    if not z > 0:
        raise DomainError(f"z must be > 0, got {z}")
    if not kappa > 0:
        raise DomainError(f"kappa must be > 0, got {kappa}")
    alpha, gap = _alpha_gap(p)
    b = kappa + p.c
    s = root_term(alpha, p)
    nu = p.nu
    slope = (p.r - p.mu) / gap
    k0 = p.r * kappa / alpha
    t = math.log(z / b)
    pairs = (
        (slope * b * (1.0 - s + nu), 1.0 + s + nu),
        (-slope * b * (1.0 + s + nu), 1.0 + nu - s),
        (k0 * (s - nu), s + nu),
        (k0 * (s + nu), nu - s),
    )
    if abs(t) * max(abs(a) for _, a in pairs) <= SERIES_REACH:
        tail = math.fsum(c * _expm1_tail3(a * t) for c, a in pairs)
        return tail / (2.0 * s) + t * t * (p.mu * b - p.r * p.c) / p.sigma**2
    f_z = slope * z - k0
    f_b = slope * b - k0
    up = slope * z - (s - nu) * f_z
    down = slope * z + (s + nu) * f_z
    # skip a term whose coefficient is exactly zero so 0 * inf cannot occur
    first = up * exp_guarded((s + nu) * t) if up != 0.0 else 0.0
    second = down * exp_guarded((nu - s) * t) if down != 0.0 else 0.0
    return (first - second) / (2.0 * s) + f_b


def eval_H_prime(z: float, kappa: float, p: ModelParams) -> float:
    """``H'(z) = 2 (r kappa + (mu - r) z) G(z) / (sigma^2 z^2 w s'(z))``."""
    if not z > 0:
        raise DomainError(f"z must be > 0, got {z}")
    if not kappa > 0:
        raise DomainError(f"kappa must be > 0, got {kappa}")
    alpha, _ = _alpha_gap(p)
    b = kappa + p.c
    s = root_term(alpha, p)
    nu = p.nu
    t = math.log(z / b)
    factor = p.r * kappa + (p.mu - p.r) * z
    if factor == 0.0 or t == 0.0:
        return 0.0
    if abs(s * t) <= SERIES_REACH:
        g_scaled = 2.0 * math.exp(nu * t) * math.sinh(s * t)
    else:
        g_scaled = exp_guarded((s + nu) * t) - exp_guarded((nu - s) * t)
    return 2.0 * factor * g_scaled / (p.sigma**2 * z * 2.0 * s)


def bisect(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    *,
    xtol: float,
    ftol: float = 0.0,
    maxiter: int = MAX_BISECTIONS,
) -> tuple[float, tuple[float, float]]:
    """Bisection on a sign-change bracket. Returns the root and the final bracket."""
    f_lo, f_hi = f(lo), f(hi)
    if f_lo == 0.0:
        return lo, (lo, lo)
    if f_hi == 0.0:
        return hi, (hi, hi)
    if (f_lo > 0) == (f_hi > 0):
        raise ConvergenceError(f"no sign change on [{lo}, {hi}]: f = {f_lo}, {f_hi}")
    for _ in range(maxiter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        f_mid = f(mid)
        if f_mid == 0.0 or abs(f_mid) < ftol:
            return mid, (lo, hi)
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid
        if hi - lo < xtol:
            break
    root = lo if abs(f_lo) <= abs(f_hi) else hi
    return root, (lo, hi)


def _newton_polish(z: float, bracket: tuple[float, float], kappa: float, p: ModelParams) -> float:
    h = eval_H(z, kappa, p)
    dh = eval_H_prime(z, kappa, p)
    if dh == 0.0 or not math.isfinite(dh):
        return z
    cand = z - h / dh
    if not bracket[0] <= cand <= bracket[1]:
        return z
    return cand if abs(eval_H(cand, kappa, p)) < abs(h) else z


def locate_root(kappa: float, p: ModelParams) -> RootReport:
    """Find the root of H other than ``kappa + c`` when it exists (regimes A and C)."""
    regime = classify(kappa, p)
    zbar = p.r * kappa / (p.r - p.mu) if p.r > p.mu else None
    if regime not in (Regime.A, Regime.C):
        return RootReport(regime=regime, stationary_point=zbar)
    assert zbar is not None
    b = kappa + p.c
    h = lambda z: eval_H(z, kappa, p)  # noqa: E731

    if regime is Regime.A:
        # H < 0 on (root, zbar) but may round to >= 0 right next to zbar when
        # zbar is within rounding of b; step down until the sign is resolved
        hi = zbar * (1.0 - 1e-12)
        for _ in range(MAX_HALVINGS):
            if h(hi) < 0:
                break
            hi = zbar - 2.0 * (zbar - hi)
            if hi <= 0:
                break
        lo = 1e-8 * min(b, zbar)
        for _ in range(MAX_HALVINGS):
            if h(lo) > 0:
                break
            lo *= 0.5
        else:
            raise ConvergenceError(f"H stays non-positive near 0 for kappa={kappa}, {p}")
    else:
        lo = zbar
        hi = 2.0 * zbar
        for _ in range(MAX_DOUBLINGS):
            if h(hi) < 0:
                break
            lo, hi = hi, 2.0 * hi
        else:
            raise ConvergenceError(f"H stays non-negative above {zbar} for kappa={kappa}, {p}")

    # no |H| stopping rule: near-degenerate roots are flat enough that a small
    # |H| still leaves the root loose, and the extra halvings are cheap
    root, bracket = bisect(h, lo, hi, xtol=EQUALITY_RTOL * b)
    root = _newton_polish(root, bracket, kappa, p)
    return RootReport(regime=regime, root=root, bracket=bracket, stationary_point=zbar)
