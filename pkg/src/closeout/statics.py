"""Comparative statics: one-parameter sweeps, CSV output and the drift-sign risk."""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Sequence, Union

import numpy as np

from .errors import CloseoutError, DomainError
from .gbm import DEFAULTS, ModelParams
from .regime import Regime
from .shortsale import solve

__all__ = [
    "VARIABLES",
    "SweepSpec",
    "SweepRow",
    "SweepError",
    "run_sweep",
    "normal_cdf",
    "drift_misestimation",
    "CSV_HEADER",
    "emit_csv",
]

# sweepable parameter -> ModelParams field
VARIABLES = {"mu": "mu", "sigma": "sigma", "r": "r", "lambda": "lam", "c": "c"}

CSV_HEADER = (
    "param",
    "value",
    "regime",
    "z_constrained",
    "v_constrained",
    "z_unconstrained",
    "v_unconstrained",
    "immediate_close",
)

Destination = Union[str, os.PathLike, IO[str]]


class SweepError(CloseoutError):
    """A solver failure at one grid point of a sweep."""


@dataclass(frozen=True)
class SweepSpec:
    vary: str
    start: float
    stop: float
    steps: int
    base: ModelParams = field(default=DEFAULTS)
    x0: float = 1.0

    def __post_init__(self) -> None:
        if self.vary not in VARIABLES:
            raise DomainError(f"vary must be one of {sorted(VARIABLES)}, got {self.vary!r}")
        if not self.start < self.stop:
            raise DomainError(f"need start < stop, got {self.start} >= {self.stop}")
        if int(self.steps) != self.steps or self.steps < 2:
            raise DomainError(f"steps must be an integer >= 2, got {self.steps}")
        if not self.x0 > 0:
            raise DomainError(f"x0 must be > 0, got {self.x0}")
        # every constraint on a parameter is an interval, so the end points decide
        self.params_at(self.start)
        self.params_at(self.stop)

    def grid(self) -> list[float]:
        return [float(v) for v in np.linspace(self.start, self.stop, int(self.steps))]

    def params_at(self, value: float) -> ModelParams:
        return self.base.with_(**{VARIABLES[self.vary]: value})


@dataclass(frozen=True)
class SweepRow:
    param: str
    param_value: float
    regime: Regime
    z_constrained: float
    v_constrained: float
    z_unconstrained: float
    v_unconstrained: float
    immediate_close: bool


def _row(spec: SweepSpec, value: float) -> SweepRow:
    try:
        sol = solve(spec.x0, spec.params_at(value))
    except CloseoutError as exc:
        raise SweepError(f"{spec.vary}={value!r}: {exc}") from exc
    return SweepRow(
        param=spec.vary,
        param_value=value,
        regime=sol.regime,
        z_constrained=sol.constrained_z,
        v_constrained=sol.constrained_value,
        z_unconstrained=sol.unconstrained_z,
        v_unconstrained=sol.unconstrained_value,
        immediate_close=sol.immediate_close,
    )


def _row_star(args: tuple[SweepSpec, float]) -> SweepRow:
    return _row(*args)


def run_sweep(spec: SweepSpec, workers: int = 1) -> list[SweepRow]:
    """Solve at ``steps`` equally spaced values of one parameter, end points included."""
    grid = spec.grid()
    if workers <= 1:
        return [_row(spec, v) for v in grid]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_row_star, [(spec, v) for v in grid]))


def normal_cdf(x: float) -> float:
    """Standard normal CDF via ``erfc``; absolute error near machine precision."""
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def drift_misestimation(mu: float, sigma: float, T: float) -> float:
    """Probability that the drift MLE from T years of prices is <= 0.

    The estimator is ``N(mu, sigma^2 / T)``, so the probability is
    ``Phi(-mu sqrt(T) / sigma)``.
    """
    if not (sigma > 0 and math.isfinite(sigma)):
        raise DomainError(f"sigma must be > 0, got {sigma}")
    if not (T > 0 and math.isfinite(T)):
        raise DomainError(f"T must be > 0, got {T}")
    if not math.isfinite(mu):
        raise DomainError(f"mu must be finite, got {mu}")
    return normal_cdf(-mu * math.sqrt(T) / sigma)


def _fmt(v: float) -> str:
    return format(v, ".17g")


def csv_text(rows: Sequence[SweepRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow(
            [
                row.param,
                _fmt(row.param_value),
                row.regime.value,
                _fmt(row.z_constrained),
                _fmt(row.v_constrained),
                _fmt(row.z_unconstrained),
                _fmt(row.v_unconstrained),
                "true" if row.immediate_close else "false",
            ]
        )
    return buf.getvalue()


def write_text(text: str, destination: Destination) -> None:
    if hasattr(destination, "write"):
        destination.write(text)  # type: ignore[union-attr]
        return
    path = Path(destination)  # type: ignore[arg-type]
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def emit_csv(rows: Iterable[SweepRow], destination: Destination) -> None:
    rows = list(rows)
    if not rows:
        raise DomainError("no rows to write")
    write_text(csv_text(rows), destination)


def parse_csv(text: str) -> list[SweepRow]:
    """Inverse of ``emit_csv`` (floats round-trip exactly)."""
    reader = csv.DictReader(io.StringIO(text))
    return [
        SweepRow(
            param=rec["param"],
            param_value=float(rec["value"]),
            regime=Regime(rec["regime"]),
            z_constrained=float(rec["z_constrained"]),
            v_constrained=float(rec["v_constrained"]),
            z_unconstrained=float(rec["z_unconstrained"]),
            v_unconstrained=float(rec["v_unconstrained"]),
            immediate_close=rec["immediate_close"] == "true",
        )
        for rec in reader
    ]
