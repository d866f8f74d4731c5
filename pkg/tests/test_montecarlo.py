import math

import numpy as np
import pytest

from closeout.boundary import policy_value
from closeout.errors import DomainError
from closeout.gbm import DEFAULTS, Direction, hitting_laplace
from closeout.montecarlo import Estimator, McConfig, estimate_hitting_laplace, estimate_value
from closeout.shortsale import solve

FAST = dict(n_paths=40_000, dt=1 / 365)
# barrier-sensitive case: the collateral barrier sits at 2 with sigma = 0.5
BARRIER_CASE = DEFAULTS.with_(mu=0.02, sigma=0.5, c=1.0)


def combined_se(a, b):
    return math.hypot(a.std_error, b.std_error)


@pytest.mark.parametrize("estimator", list(Estimator))
def test_threshold_at_start_is_immediate(estimator):
    est = estimate_value(1.0, 1.0, DEFAULTS, McConfig(n_paths=1000, estimator=estimator))
    assert est.mean == 0.0 and est.std_error == 0.0
    assert est.truncated_fraction == 0.0


def test_start_above_barrier_pays_minus_c():
    est = estimate_value(60.0, 0.5, DEFAULTS, McConfig(n_paths=100), kappa=1.0)
    assert est.mean == pytest.approx(-59.0) and est.std_error == 0.0


@pytest.mark.parametrize(
    "direction,z,mu",
    [(Direction.UP, 1.5, 0.02), (Direction.DOWN, 0.5, -0.02)],
)
def test_hitting_laplace_matches_closed_form(direction, z, mu):
    p = DEFAULTS.with_(mu=mu)
    cfg = McConfig(n_paths=50_000, dt=1 / 3650, seed=11)
    est = estimate_hitting_laplace(direction, 1.0, z, 0.06, p, cfg)
    target = hitting_laplace(direction, 1.0, z, 0.06, p)
    assert est.within(target, n_se=3.0, allowance=2e-3), (est, target)


def test_hitting_laplace_already_there():
    est = estimate_hitting_laplace(Direction.UP, 1.0, 1.0, 0.06, DEFAULTS, McConfig(n_paths=500))
    assert est.mean == 1.0


def test_bit_identical_across_workers():
    cfg = McConfig(n_paths=10_000, dt=1 / 365, seed=7, block_size=1024)
    z = solve(1.0, DEFAULTS).constrained_z
    runs = [estimate_value(1.0, z, DEFAULTS, cfg, workers=w) for w in (1, 2, 5)]
    assert runs[0] == runs[1] == runs[2]
    other = estimate_value(1.0, z, DEFAULTS, McConfig(n_paths=10_000, dt=1 / 365, seed=8, block_size=1024))
    assert other.mean != runs[0].mean


@pytest.mark.parametrize("p", [DEFAULTS, DEFAULTS.with_(mu=0.02)])
def test_estimators_agree(p):
    z = solve(1.0, p).constrained_z
    a = estimate_value(1.0, z, p, McConfig(**FAST, seed=1, estimator=Estimator.KILLED_DISCOUNT))
    b = estimate_value(1.0, z, p, McConfig(**FAST, seed=2, estimator=Estimator.INTEGRAL_FORM))
    assert abs(a.mean - b.mean) <= 3 * combined_se(a, b)


def test_default_case_matches_analytic():
    sol = solve(1.0, DEFAULTS)
    est = estimate_value(1.0, sol.constrained_z, DEFAULTS, McConfig(**FAST, seed=5))
    assert est.within(sol.constrained_value, allowance=0.005)
    assert est.truncated_fraction < 1e-3


def test_bridge_reduces_barrier_bias():
    z, dt = 0.5, 1 / 52
    target = policy_value(1.0, z, 1.0, BARRIER_CASE)
    plain = estimate_value(1.0, z, BARRIER_CASE, McConfig(n_paths=100_000, dt=dt, bridge_correction=False, seed=21))
    bridged = estimate_value(1.0, z, BARRIER_CASE, McConfig(n_paths=100_000, dt=dt, bridge_correction=True, seed=21))
    # missed barrier hits avoid the -c payoff, so the plain estimate is biased up
    assert plain.mean - target > 3 * plain.std_error
    assert abs(bridged.mean - target) < abs(plain.mean - target)


def test_halving_step_reduces_bias():
    z = 0.5
    target = policy_value(1.0, z, 1.0, BARRIER_CASE)
    biases = []
    for dt in (1 / 4, 1 / 8):
        est = estimate_value(1.0, z, BARRIER_CASE, McConfig(n_paths=200_000, dt=dt, bridge_correction=False, seed=31))
        biases.append((est.mean - target, est.std_error))
    (b1, s1), (b2, s2) = biases
    assert b1 > b2 > 0
    assert b1 - b2 > 3 * math.hypot(s1, s2)


def test_unconstrained_flag_drops_barrier_and_recall():
    p = DEFAULTS.with_(mu=-0.02)
    sol = solve(1.0, p)
    est = estimate_value(1.0, sol.unconstrained_z, p, McConfig(n_paths=40_000, dt=1 / 365, horizon=600.0, seed=9), unconstrained=True)
    assert est.within(sol.unconstrained_value, allowance=0.005)


def test_std_error_definition():
    cfg = McConfig(n_paths=5000, dt=1 / 365, seed=2)
    est = estimate_value(1.0, 0.5, DEFAULTS, cfg)
    assert est.std_error > 0
    assert 0.0 <= est.truncated_fraction <= 1.0
    assert est.n_paths == 5000 and est.seed == 2 and est.dt == cfg.dt


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(n_paths=0),
        dict(n_paths=2.5),
        dict(dt=0.0),
        dict(dt=-1.0),
        dict(horizon=0.0),
        dict(dt=2.0, horizon=1.0),
        dict(seed=-1),
        dict(seed=2**64),
        dict(far_sigmas=0.0),
        dict(block_size=0),
    ],
)
def test_config_validation(kwargs):
    with pytest.raises(DomainError):
        McConfig(**kwargs)


def test_estimate_domain_errors():
    cfg = McConfig(n_paths=10)
    with pytest.raises(DomainError):
        estimate_value(0.0, 0.5, DEFAULTS, cfg)
    with pytest.raises(DomainError):
        estimate_value(1.0, -0.5, DEFAULTS, cfg)
    with pytest.raises(DomainError):
        estimate_hitting_laplace(Direction.UP, 1.0, 2.0, 0.0, DEFAULTS, cfg)


def test_prices_stay_finite_with_extreme_drift():
    p = DEFAULTS.with_(mu=3.0, sigma=2.0, c=1e6)
    est = estimate_value(1.0, 0.0, p, McConfig(n_paths=2000, dt=1 / 52, horizon=50.0, seed=4))
    assert np.isfinite(est.mean) and np.isfinite(est.std_error)
