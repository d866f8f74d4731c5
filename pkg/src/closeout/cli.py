"""Command-line front end.

Subcommands::

    closeout solve       [model flags] [--format text|json]
    closeout sweep       [model flags] --vary P --from A --to B --steps N [--csv F] [--svg F]
    closeout mc          [model flags] [--z Z] [--paths N] [--dt H] ... [--out F]
    closeout drift-risk  --mu M --sigma S --T YEARS

Any long flag can be preloaded from a ``key = value`` file given with
``--config``; flags on the command line win. Exit status is 0 on success, 2 on
argument errors and 1 on solver errors.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Optional, Sequence

from .errors import CloseoutError
from .gbm import ModelParams
from .montecarlo import Estimator, McConfig, estimate_value
from .shortsale import ShortSaleSolution, solve
from .statics import VARIABLES, SweepSpec, csv_text, drift_misestimation, run_sweep, write_text
from .svg import svg_text

__all__ = ["main", "build_parser", "solution_to_dict", "solution_from_dict", "read_config"]


class ArgumentError(Exception):
    """Bad user input detected after argparse (exit status 2)."""


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


@dataclass(frozen=True)
class _Opt:
    flag: str
    dest: str
    type: Callable[[str], Any]
    default: Any
    help: str
    choices: Optional[Sequence[str]] = None


MODEL_OPTS = (
    _Opt("--mu", "mu", float, -0.02, "drift (default -0.02)"),
    _Opt("--sigma", "sigma", float, 0.3, "volatility (default 0.3)"),
    _Opt("--r", "r", float, 0.05, "interest rate (default 0.05)"),
    _Opt("--lambda", "lam", float, 0.01, "recall intensity (default 0.01)"),
    _Opt("--c", "c", float, 50.0, "collateral budget (default 50)"),
    _Opt("--x0", "x0", float, 1.0, "price at the short sale (default 1)"),
)

SOLVE_OPTS = (_Opt("--format", "format", str, "text", "output format", ("text", "json")),)

SWEEP_OPTS = (
    _Opt("--vary", "vary", str, None, "parameter to sweep", tuple(VARIABLES)),
    _Opt("--from", "start", float, None, "first grid value"),
    _Opt("--to", "stop", float, None, "last grid value"),
    _Opt("--steps", "steps", int, 11, "number of grid points (default 11)"),
    _Opt("--csv", "csv", str, None, "write the CSV here instead of stdout"),
    _Opt("--svg", "svg", str, None, "also write a two-panel SVG chart"),
    _Opt("--workers", "workers", int, 1, "parallel processes (output does not depend on it)"),
)

MC_OPTS = (
    _Opt("--z", "z", float, None, "threshold (default: the analytic optimum)"),
    _Opt("--kappa", "kappa", float, None, "payoff reference level (default x0)"),
    _Opt("--unconstrained", "unconstrained", _bool, False, "drop barrier and recall"),
    _Opt("--paths", "n_paths", int, 200_000, "number of paths"),
    _Opt("--dt", "dt", float, 1.0 / 3650.0, "time step near the boundaries, in years"),
    _Opt("--horizon", "horizon", float, 200.0, "truncation horizon in years"),
    _Opt("--seed", "seed", int, 0, "random seed"),
    _Opt("--estimator", "estimator", str, "killed", "estimator", tuple(e.value for e in Estimator)),
    _Opt("--bridge", "bridge_correction", _bool, True, "Brownian-bridge crossing correction"),
    _Opt("--far-sigmas", "far_sigmas", float, 6.0, "far-field step safety factor"),
    _Opt("--block-size", "block_size", int, 1 << 15, "paths per random substream"),
    _Opt("--workers", "workers", int, 1, "threads (output does not depend on it)"),
    _Opt("--out", "out", str, None, "write the JSON result here instead of stdout"),
)

DRIFT_OPTS = (
    _Opt("--mu", "mu", float, None, "drift"),
    _Opt("--sigma", "sigma", float, None, "volatility"),
    _Opt("--T", "T", float, None, "years of observed prices"),
)

COMMANDS: dict[str, tuple[tuple[_Opt, ...], str]] = {
    "solve": (MODEL_OPTS + SOLVE_OPTS, "constrained and unconstrained solution at one point"),
    "sweep": (MODEL_OPTS + SWEEP_OPTS, "one-parameter comparative statics as CSV/SVG"),
    "mc": (MODEL_OPTS + MC_OPTS, "Monte Carlo value of a threshold policy"),
    "drift-risk": (DRIFT_OPTS, "probability that the estimated drift has the wrong sign"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="closeout", description="Optimal close-out of short sales.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name, (opts, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--config", type=Path, default=None, help="key = value file preloading flags")
        for o in opts:
            # None marks "not given" so config values can fill the gap
            p.add_argument(o.flag, dest=o.dest, type=o.type, default=None, choices=o.choices, help=o.help)
    return parser


def read_config(path: Path) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment, keys may omit the dashes."""
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ArgumentError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    out: dict[str, str] = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ArgumentError(f"{path}:{n}: expected key = value, got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        out["--" + key.lstrip("-").replace("_", "-")] = value
    return out


def _resolve(ns: argparse.Namespace, opts: Sequence[_Opt]) -> dict[str, Any]:
    """Merge command line, config file and defaults, in that order of priority."""
    config = read_config(ns.config) if ns.config is not None else {}
    known = {o.flag: o for o in opts}
    unknown = sorted(set(config) - set(known))
    if unknown:
        raise ArgumentError(f"unknown config keys: {', '.join(k[2:] for k in unknown)}")
    values: dict[str, Any] = {}
    for o in opts:
        v = getattr(ns, o.dest)
        if v is None and o.flag in config:
            try:
                v = o.type(config[o.flag])
            except ValueError as exc:
                raise ArgumentError(f"config {o.flag[2:]}: {exc}") from exc
            if o.choices is not None and v not in o.choices:
                raise ArgumentError(f"config {o.flag[2:]}: must be one of {', '.join(o.choices)}")
        values[o.dest] = o.default if v is None else v
    return values


def _params(v: dict[str, Any]) -> ModelParams:
    try:
        return ModelParams(mu=v["mu"], sigma=v["sigma"], r=v["r"], lam=v["lam"], c=v["c"])
    except ValueError as exc:
        raise ArgumentError(str(exc)) from exc


def _x0(v: dict[str, Any]) -> float:
    x0 = v["x0"]
    if not (x0 > 0 and math.isfinite(x0)):
        raise ArgumentError(f"--x0 must be a positive price, got {x0}")
    return x0


def solution_to_dict(sol: ShortSaleSolution) -> dict[str, Any]:
    p = sol.params
    return {
        "x0": sol.x0,
        "mu": p.mu,
        "sigma": p.sigma,
        "r": p.r,
        "lambda": p.lam,
        "c": p.c,
        "regime": sol.regime.value,
        "constrained_z": sol.constrained_z,
        "constrained_value": sol.constrained_value,
        "unconstrained_z": sol.unconstrained_z,
        "unconstrained_value": sol.unconstrained_value,
        "immediate_close": sol.immediate_close,
        "wait_forever": sol.wait_forever,
        "no_optimal_policy": sol.no_optimal_policy,
        "limit_z": sol.limit_z,
    }


def solution_from_dict(d: dict[str, Any]) -> ShortSaleSolution:
    from .regime import Regime

    return ShortSaleSolution(
        x0=d["x0"],
        params=ModelParams(mu=d["mu"], sigma=d["sigma"], r=d["r"], lam=d["lambda"], c=d["c"]),
        regime=Regime(d["regime"]),
        constrained_z=d["constrained_z"],
        constrained_value=d["constrained_value"],
        unconstrained_z=d["unconstrained_z"],
        unconstrained_value=d["unconstrained_value"],
        immediate_close=d["immediate_close"],
        wait_forever=d["wait_forever"],
        no_optimal_policy=d["no_optimal_policy"],
        limit_z=d["limit_z"],
    )


def _cents(v: float) -> str:
    return f"${v:,.2f}"


def _solution_text(sol: ShortSaleSolution) -> str:
    p = sol.params
    if sol.immediate_close:
        policy = "close immediately"
    elif sol.wait_forever:
        policy = "never close voluntarily"
    else:
        policy = f"close when the price first falls to {_cents(sol.constrained_z)}"
    lines = [
        f"parameters           mu={p.mu:g} sigma={p.sigma:g} r={p.r:g} lambda={p.lam:g} c={p.c:g} x0={sol.x0:g}",
        f"regime               {sol.regime.value}",
        f"policy               {policy}",
        f"constrained z*       {_cents(sol.constrained_z)}",
        f"constrained value    {_cents(sol.constrained_value)}",
        f"unconstrained z*     {_cents(sol.unconstrained_z)}",
        f"unconstrained value  {_cents(sol.unconstrained_value)}",
        f"threshold gap        {_cents(sol.threshold_gap)}",
        f"value gap            {_cents(sol.value_gap)}",
    ]
    if sol.no_optimal_policy:
        lines.append("note                 unconstrained value is a supremum; no threshold attains it")
    if sol.limit_z is not None:
        lines.append(f"threshold as c -> 0  {_cents(sol.limit_z)}")
    return "\n".join(lines) + "\n"


def _emit(text: str, dest: Optional[str]) -> None:
    if dest is None:
        sys.stdout.write(text)
    else:
        write_text(text, dest)


def _cmd_solve(v: dict[str, Any]) -> None:
    sol = solve(_x0(v), _params(v))
    if v["format"] == "json":
        sys.stdout.write(json.dumps(solution_to_dict(sol), indent=2) + "\n")
    else:
        sys.stdout.write(_solution_text(sol))


def _cmd_sweep(v: dict[str, Any]) -> None:
    for key, flag in (("vary", "--vary"), ("start", "--from"), ("stop", "--to")):
        if v[key] is None:
            raise ArgumentError(f"sweep needs {flag}")
    if v["workers"] < 1:
        raise ArgumentError("--workers must be >= 1")
    base = _params(v)
    try:
        spec = SweepSpec(v["vary"], v["start"], v["stop"], v["steps"], base=base, x0=_x0(v))
    except ValueError as exc:
        raise ArgumentError(str(exc)) from exc
    rows = run_sweep(spec, workers=v["workers"])
    _emit(csv_text(rows), v["csv"])
    if v["svg"] is not None:
        write_text(svg_text(rows), v["svg"])


def _cmd_mc(v: dict[str, Any]) -> None:
    p = _params(v)
    x0 = _x0(v)
    if v["workers"] < 1:
        raise ArgumentError("--workers must be >= 1")
    try:
        cfg = McConfig(
            n_paths=v["n_paths"],
            dt=v["dt"],
            horizon=v["horizon"],
            seed=v["seed"],
            estimator=Estimator(v["estimator"]),
            bridge_correction=v["bridge_correction"],
            far_sigmas=v["far_sigmas"],
            block_size=v["block_size"],
        )
    except ValueError as exc:
        raise ArgumentError(str(exc)) from exc
    unconstrained = v["unconstrained"]
    z = v["z"]
    analytic = None
    if z is None:
        if v["kappa"] is not None:
            raise ArgumentError("--z is required together with --kappa")
        # default: simulate the analytic optimum and report its value alongside
        sol = solve(x0, p)
        z = sol.unconstrained_z if unconstrained else sol.constrained_z
        analytic = sol.unconstrained_value if unconstrained else sol.constrained_value
    est = estimate_value(
        x0, z, p, cfg, kappa=v["kappa"], unconstrained=unconstrained, workers=v["workers"]
    )
    result = {
        "x0": x0,
        "z": z,
        "kappa": x0 if v["kappa"] is None else v["kappa"],
        "unconstrained": unconstrained,
        "estimator": cfg.estimator.value,
        "n_paths": est.n_paths,
        "dt": est.dt,
        "horizon": cfg.horizon,
        "seed": est.seed,
        "bridge_correction": cfg.bridge_correction,
        "mean": est.mean,
        "std_error": est.std_error,
        "truncated_fraction": est.truncated_fraction,
        "analytic_value": analytic,
    }
    _emit(json.dumps(result, indent=2) + "\n", v["out"])


def _cmd_drift(v: dict[str, Any]) -> None:
    for key in ("mu", "sigma", "T"):
        if v[key] is None:
            raise ArgumentError(f"drift-risk needs --{key}")
    try:
        prob = drift_misestimation(v["mu"], v["sigma"], v["T"])
    except ValueError as exc:
        raise ArgumentError(str(exc)) from exc
    sys.stdout.write(f"{prob:.17g}\n")


HANDLERS = {"solve": _cmd_solve, "sweep": _cmd_sweep, "mc": _cmd_mc, "drift-risk": _cmd_drift}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    opts, _ = COMMANDS[ns.command]
    try:
        values = _resolve(ns, opts)
        HANDLERS[ns.command](values)
    except ArgumentError as exc:
        parser.print_usage(sys.stderr)
        print(f"closeout {ns.command}: error: {exc}", file=sys.stderr)
        return 2
    except (CloseoutError, OSError) as exc:
        print(f"closeout {ns.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
