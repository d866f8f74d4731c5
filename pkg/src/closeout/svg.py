"""Minimal deterministic SVG line charts for sweep results.

Two panels side by side: optimal threshold and value against the swept
parameter. Constrained series are solid red, unconstrained series dashed
blue. Coordinates are printed with fixed precision so identical rows always
give identical bytes.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence
from xml.sax.saxutils import escape

from .errors import DomainError
from .statics import Destination, SweepRow, write_text

__all__ = ["svg_text", "emit_svg", "nice_ticks"]

PANEL_W, PANEL_H = 420, 300
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 60, 20, 40, 45
RED, BLUE = "#c0392b", "#1f4e9a"

_LABELS = {"mu": "mu", "sigma": "sigma", "r": "r", "lambda": "lambda", "c": "c"}


def nice_ticks(lo: float, hi: float, target: int = 5) -> list[float]:
    """Round tick positions covering ``[lo, hi]`` (roughly ``target`` of them)."""
    span = hi - lo
    if span <= 0:
        return [lo]
    raw = span / max(target - 1, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1.0, 2.0, 2.5, 5.0, 10.0) if m * mag >= raw)
    first = math.ceil(lo / step - 1e-9) * step
    ticks = []
    k = 0
    while first + k * step <= hi + 1e-9 * step:
        ticks.append(round(first + k * step, 12))
        k += 1
    return ticks


def _range(values: Sequence[float]) -> tuple[float, float]:
    finite = [v for v in values if math.isfinite(v)]
    if not finite:
        return 0.0, 1.0
    lo, hi = min(finite), max(finite)
    if hi - lo < 1e-12 * max(1.0, abs(hi)):
        pad = 0.05 * abs(hi) if hi != 0 else 0.5
        return lo - pad, hi + pad
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _tick_label(v: float) -> str:
    return format(v, ".4g")


def _panel(
    x0: int,
    title: str,
    xs: Sequence[float],
    constrained: Sequence[float],
    unconstrained: Sequence[float],
    xlabel: str,
    ident: str,
) -> list[str]:
    plot_w = PANEL_W - MARGIN_L - MARGIN_R
    plot_h = PANEL_H - MARGIN_T - MARGIN_B
    left, top = x0 + MARGIN_L, MARGIN_T
    xlo, xhi = xs[0], xs[-1]
    ylo, yhi = _range(list(constrained) + list(unconstrained))

    def px(v: float) -> float:
        return left + (v - xlo) / (xhi - xlo) * plot_w

    def py(v: float) -> float:
        return top + (yhi - v) / (yhi - ylo) * plot_h

    out = [
        f'<g id="{ident}">',
        f'<text x="{_fmt(left + plot_w / 2)}" y="{top - 15}" text-anchor="middle" '
        f'font-size="14">{escape(title)}</text>',
        f'<rect x="{left}" y="{top}" width="{plot_w}" height="{plot_h}" '
        f'fill="none" stroke="#000" stroke-width="1"/>',
    ]
    for t in nice_ticks(xlo, xhi):
        x = px(t)
        out.append(
            f'<line x1="{_fmt(x)}" y1="{top + plot_h}" x2="{_fmt(x)}" y2="{top + plot_h + 5}" stroke="#000"/>'
        )
        out.append(
            f'<text x="{_fmt(x)}" y="{top + plot_h + 18}" text-anchor="middle" '
            f'font-size="10">{_tick_label(t)}</text>'
        )
    for t in nice_ticks(ylo, yhi):
        y = py(t)
        out.append(f'<line x1="{left - 5}" y1="{_fmt(y)}" x2="{left}" y2="{_fmt(y)}" stroke="#000"/>')
        out.append(
            f'<text x="{left - 8}" y="{_fmt(y + 3)}" text-anchor="end" '
            f'font-size="10">{_tick_label(t)}</text>'
        )
    out.append(
        f'<text x="{_fmt(left + plot_w / 2)}" y="{top + plot_h + 36}" text-anchor="middle" '
        f'font-size="12">{escape(xlabel)}</text>'
    )
    for name, series, style in (
        ("constrained", constrained, f'stroke="{RED}"'),
        ("unconstrained", unconstrained, f'stroke="{BLUE}" stroke-dasharray="6,4"'),
    ):
        pts = " ".join(
            f"{_fmt(px(x))},{_fmt(py(y))}" for x, y in zip(xs, series) if math.isfinite(y)
        )
        out.append(
            f'<polyline id="{ident}-{name}" class="{name}" fill="none" {style} '
            f'stroke-width="2" points="{pts}"/>'
        )
    out.append("</g>")
    return out


def svg_text(rows: Sequence[SweepRow]) -> str:
    if len(rows) < 2:
        raise DomainError("an SVG chart needs at least two rows")
    param = rows[0].param
    xlabel = _LABELS.get(param, param)
    xs = [r.param_value for r in rows]
    width = 2 * PANEL_W
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{PANEL_H + 30}" '
        f'viewBox="0 0 {width} {PANEL_H + 30}">',
        f'<rect x="0" y="0" width="{width}" height="{PANEL_H + 30}" fill="#fff"/>',
    ]
    lines += _panel(
        0,
        "optimal threshold",
        xs,
        [r.z_constrained for r in rows],
        [r.z_unconstrained for r in rows],
        xlabel,
        "threshold",
    )
    lines += _panel(
        PANEL_W,
        "value",
        xs,
        [r.v_constrained for r in rows],
        [r.v_unconstrained for r in rows],
        xlabel,
        "value",
    )
    legend_y = PANEL_H + 15
    lines += [
        f'<line x1="{MARGIN_L}" y1="{legend_y}" x2="{MARGIN_L + 30}" y2="{legend_y}" '
        f'stroke="{RED}" stroke-width="2"/>',
        f'<text x="{MARGIN_L + 36}" y="{legend_y + 4}" font-size="11">constrained</text>',
        f'<line x1="{MARGIN_L + 130}" y1="{legend_y}" x2="{MARGIN_L + 160}" y2="{legend_y}" '
        f'stroke="{BLUE}" stroke-width="2" stroke-dasharray="6,4"/>',
        f'<text x="{MARGIN_L + 166}" y="{legend_y + 4}" font-size="11">unconstrained</text>',
        "</svg>",
        "",
    ]
    return "\n".join(lines)


def emit_svg(rows: Iterable[SweepRow], destination: Destination) -> None:
    rows = list(rows)
    if not rows:
        raise DomainError("no rows to write")
    write_text(svg_text(rows), destination)
