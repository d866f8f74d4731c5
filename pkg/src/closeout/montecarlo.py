"""
Monte Carlo oracle for threshold close-out policies
===================================================

Estimates

    J(x, z) = E_x[ exp(-r T) (kappa - X_T) ],   T = tau_z ^ tau_b ^ rho ^ horizon

for the policy "close the first time the price falls to z", with forced
close-out at the barrier ``b = kappa + c`` and at an exponential recall time
``rho`` of intensity ``lam``. Used to check the analytic solutions, never by
them.

Path scheme
-----------
Log-prices move by exact Gaussian transitions,

    log X_{t+h} = log X_t + (mu - sigma^2/2) h + sigma sqrt(h) N(0, 1),

so the only discretisation error comes from boundary monitoring. The step is
``dt`` whenever a path is close to a boundary. Far from both boundaries the
step is enlarged to the largest ``h`` for which drift plus ``far_sigmas``
standard deviations still does not reach the nearer boundary; crossings inside
such a step have probability below ~1e-9 and are caught by the bridge test
anyway when it is enabled. Steps never overshoot the recall time or the
horizon.

With ``bridge_correction`` each step also kills the path with the Brownian
bridge crossing probability ``exp(-2 d0 d1 / (sigma^2 h))`` for each boundary,
where d0, d1 are the log-distances at the ends of the step.

Estimators
----------
KILLED_DISCOUNT samples ``rho`` and discounts at r. INTEGRAL_FORM drops the
recall time and instead discounts at ``lam + r`` while accumulating the
running recall payoff ``lam exp(-(lam + r) t) (kappa - X_t)``; each step adds
its conditional expectation given the step's starting price. Both estimate
the same quantity.

Reproducibility
---------------
Paths are processed in fixed-size blocks. Block ``k`` draws from the stream
``SeedSequence(seed, spawn_key=(k,))``, so the estimate depends on
``(seed, block_size)`` but not on how many workers process the blocks.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DomainError
from .gbm import Direction, ModelParams

__all__ = [
    "Estimator",
    "McConfig",
    "McEstimate",
    "estimate_value",
    "estimate_hitting_laplace",
]

Array = np.ndarray

LOWER, UPPER, RECALL, HORIZON = 0, 1, 2, 3


class Estimator(enum.Enum):
    KILLED_DISCOUNT = "killed"
    INTEGRAL_FORM = "integral"


@dataclass(frozen=True)
class McConfig:
    n_paths: int = 200_000
    dt: float = 1.0 / 3650.0
    horizon: float = 200.0
    seed: int = 0
    estimator: Estimator = Estimator.KILLED_DISCOUNT
    bridge_correction: bool = True
    far_sigmas: float = 6.0
    block_size: int = 1 << 15

    def __post_init__(self) -> None:
        if int(self.n_paths) != self.n_paths or self.n_paths < 1:
            raise DomainError(f"n_paths must be a positive integer, got {self.n_paths}")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise DomainError(f"dt must be > 0, got {self.dt}")
        if not (self.horizon > 0 and math.isfinite(self.horizon)):
            raise DomainError(f"horizon must be > 0, got {self.horizon}")
        if self.dt > self.horizon:
            raise DomainError(f"dt ({self.dt}) exceeds horizon ({self.horizon})")
        if not 0 <= self.seed < 2**64:
            raise DomainError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if not self.far_sigmas > 0:
            raise DomainError(f"far_sigmas must be > 0, got {self.far_sigmas}")
        if self.block_size < 1:
            raise DomainError(f"block_size must be >= 1, got {self.block_size}")


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    n_paths: int
    truncated_fraction: float
    dt: float
    seed: int

    def within(self, target: float, n_se: float = 3.0, allowance: float = 0.0) -> bool:
        return abs(self.mean - target) <= n_se * self.std_error + allowance


@dataclass(frozen=True)
class _Boundaries:
    lo: float  # log of lower threshold, -inf if none
    hi: float  # log of upper barrier, +inf if none
    kill_rate: float  # intensity of the sampled recall time (0: never)
    integral_rate: float  # lam in the running payoff (0: no running payoff)
    discount: float  # rate of the integral-form discount (lam + r)
    kappa: float


@dataclass
class _BlockResult:
    t: Array
    kind: Array
    y: Array
    integral: Array


def _expm1_ratio(a: float, h: Array) -> Array:
    """``(1 - exp(-a h)) / a`` with the ``a -> 0`` limit h."""
    if abs(a) < 1e-300:
        return h
    return -np.expm1(-a * h) / a


def _simulate_block(
    index: int, n: int, x0: float, bnd: _Boundaries, p: ModelParams, cfg: McConfig
) -> _BlockResult:
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(index,)))
    sig = p.sigma
    drift = p.mu - 0.5 * sig * sig
    k = cfg.far_sigmas

    y = np.full(n, math.log(x0))
    t = np.zeros(n)
    kind = np.full(n, -1, dtype=np.int8)
    integral = np.zeros(n)
    if bnd.kill_rate > 0:
        rho = rng.exponential(1.0 / bnd.kill_rate, n)
    else:
        rho = np.full(n, np.inf)

    y0 = math.log(x0)
    if y0 <= bnd.lo:
        kind[:] = LOWER
        return _BlockResult(t, kind, y, integral)
    if y0 >= bnd.hi:
        kind[:] = UPPER
        return _BlockResult(t, kind, y, integral)

    idx = np.arange(n)
    while idx.size:
        ya = y[idx]
        ta = t[idx]
        dist = np.minimum(ya - bnd.lo, bnd.hi - ya)
        # largest sqrt(h) with |drift| h + k sig sqrt(h) <= dist
        root = 2.0 * dist / (k * sig + np.sqrt(k * k * sig * sig + 4.0 * abs(drift) * dist))
        h = np.maximum(cfg.dt, root * root)
        h = np.minimum(h, np.minimum(rho[idx] - ta, cfg.horizon - ta))
        h = np.maximum(h, 0.0)

        y1 = ya + drift * h + sig * np.sqrt(h) * rng.standard_normal(idx.size)
        t1 = ta + h

        if bnd.integral_rate > 0:
            disc = np.exp(-bnd.discount * ta)
            integral[idx] += bnd.integral_rate * disc * (
                bnd.kappa * _expm1_ratio(bnd.discount, h)
                - np.exp(ya) * _expm1_ratio(bnd.discount - p.mu, h)
            )

        hit_hi = y1 >= bnd.hi
        hit_lo = y1 <= bnd.lo
        if cfg.bridge_correction:
            u = rng.random(idx.size)
            var = sig * sig * h
            with np.errstate(invalid="ignore", divide="ignore"):
                p_hi = np.exp(-2.0 * np.maximum(bnd.hi - ya, 0.0) * np.maximum(bnd.hi - y1, 0.0) / var)
                p_lo = np.exp(-2.0 * np.maximum(ya - bnd.lo, 0.0) * np.maximum(y1 - bnd.lo, 0.0) / var)
            p_hi = np.nan_to_num(p_hi, nan=0.0)
            p_lo = np.nan_to_num(p_lo, nan=0.0)
            hit_hi |= u < p_hi
            hit_lo |= (u >= p_hi) & (u < p_hi + p_lo)
        hit_lo &= ~hit_hi
        alive = ~(hit_hi | hit_lo)
        recalled = alive & (t1 >= rho[idx])
        truncated = alive & ~recalled & (t1 >= cfg.horizon)

        step_kind = np.full(idx.size, -1, dtype=np.int8)
        step_kind[hit_lo] = LOWER
        step_kind[hit_hi] = UPPER
        step_kind[recalled] = RECALL
        step_kind[truncated] = HORIZON

        y[idx] = y1
        t[idx] = t1
        kind[idx] = step_kind
        idx = idx[step_kind < 0]

    return _BlockResult(t, kind, y, integral)


def _run(
    x0: float, bnd: _Boundaries, p: ModelParams, cfg: McConfig, workers: int
) -> list[_BlockResult]:
    n_blocks = -(-cfg.n_paths // cfg.block_size)
    sizes = [min(cfg.block_size, cfg.n_paths - i * cfg.block_size) for i in range(n_blocks)]

    def job(i: int) -> _BlockResult:
        return _simulate_block(i, sizes[i], x0, bnd, p, cfg)

    if workers <= 1 or n_blocks == 1:
        return [job(i) for i in range(n_blocks)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(job, range(n_blocks)))


def _summarise(payoff: Array, kinds: Array, cfg: McConfig) -> McEstimate:
    n = payoff.size
    se = float(payoff.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return McEstimate(
        mean=float(payoff.mean()),
        std_error=se,
        n_paths=n,
        truncated_fraction=float(np.count_nonzero(kinds == HORIZON) / n),
        dt=cfg.dt,
        seed=cfg.seed,
    )


def estimate_value(
    x0: float,
    z: float,
    p: ModelParams,
    cfg: McConfig,
    *,
    kappa: Optional[float] = None,
    unconstrained: bool = False,
    workers: int = 1,
) -> McEstimate:
    """Estimate the value of closing out at the first fall to z.

    Args:
        x0: Initial price.
        z: Close-out threshold; 0 means never close voluntarily.
        p: Model parameters.
        cfg: Simulation settings.
        kappa: Reference level of the payoff ``kappa - X`` and of the barrier
            ``kappa + c``; defaults to x0 (the original short-sale problem).
        unconstrained: Drop the collateral barrier and recall.
        workers: Threads used to process blocks; does not affect the result.
    """
    if not x0 > 0:
        raise DomainError(f"x0 must be > 0, got {x0}")
    if not (z >= 0 and math.isfinite(z)):
        raise DomainError(f"z must be a finite threshold >= 0, got {z}")
    kappa = float(x0) if kappa is None else float(kappa)
    if not kappa > 0:
        raise DomainError(f"kappa must be > 0, got {kappa}")

    barrier = math.inf if unconstrained else kappa + p.c
    lam = 0.0 if unconstrained else p.lam
    integral = cfg.estimator is Estimator.INTEGRAL_FORM
    bnd = _Boundaries(
        lo=math.log(z) if z > 0 else -math.inf,
        hi=math.log(barrier),
        kill_rate=0.0 if integral else lam,
        integral_rate=lam if integral else 0.0,
        discount=lam + p.r,
        kappa=kappa,
    )
    blocks = _run(x0, bnd, p, cfg, workers)
    t = np.concatenate([b.t for b in blocks])
    kind = np.concatenate([b.kind for b in blocks])
    y = np.concatenate([b.y for b in blocks])

    stop_price = np.exp(y)
    stop_price[kind == LOWER] = z
    stop_price[kind == UPPER] = barrier
    if x0 <= z:
        stop_price[:] = x0
    elif x0 >= barrier:
        stop_price[:] = x0

    rate = lam + p.r if integral else p.r
    payoff = np.exp(-rate * t) * (kappa - stop_price)
    if integral:
        payoff += np.concatenate([b.integral for b in blocks])
    return _summarise(payoff, kind, cfg)


def estimate_hitting_laplace(
    direction: Direction,
    x: float,
    z: float,
    alpha: float,
    p: ModelParams,
    cfg: McConfig,
    *,
    workers: int = 1,
) -> McEstimate:
    """Estimate ``E_x[exp(-alpha tau)]`` for the first passage to z (0 if never within horizon)."""
    if not (x > 0 and z > 0):
        raise DomainError(f"x and z must be > 0, got {x}, {z}")
    if not alpha > 0:
        raise DomainError(f"alpha must be > 0, got {alpha}")
    up = direction is Direction.UP
    bnd = _Boundaries(
        lo=-math.inf if up else math.log(z),
        hi=math.log(z) if up else math.inf,
        kill_rate=0.0,
        integral_rate=0.0,
        discount=0.0,
        kappa=0.0,
    )
    blocks = _run(x, bnd, p, cfg, workers)
    t = np.concatenate([b.t for b in blocks])
    kind = np.concatenate([b.kind for b in blocks])
    hit = (kind == UPPER) if up else (kind == LOWER)
    payoff = np.where(hit, np.exp(-alpha * t), 0.0)
    return _summarise(payoff, kind, cfg)
