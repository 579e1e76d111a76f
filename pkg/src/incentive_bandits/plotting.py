"""Static SVG curves: mean trajectory, shaded 95% band, dotted bound."""

from __future__ import annotations

from pathlib import Path

import numpy as np

WIDTH, HEIGHT = 640, 420
LEFT, RIGHT, TOP, BOTTOM = 70, 20, 30, 50

METRICS = {
    "pseudo_regret": ("mean_pseudo_regret", "ci_pseudo_regret", "cumulative pseudo-regret"),
    "realized_regret": ("mean_realized_regret", "ci_realized_regret", "cumulative realized regret"),
    "compensation": ("mean_compensation", "ci_compensation", "cumulative compensation"),
}


def _num(v: float) -> str:
    s = f"{v:.2f}"
    return "0.00" if s == "-0.00" else s


def _tick(v: float) -> str:
    return f"{v:.4g}"


def render_svg(
    t: np.ndarray,
    mean: np.ndarray,
    ci: np.ndarray,
    bound: np.ndarray | None,
    ylabel: str,
    meta: list[tuple[str, str]] | None = None,
) -> str:
    t = np.asarray(t, dtype=float)
    mean = np.asarray(mean, dtype=float)
    ci = np.asarray(ci, dtype=float)
    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        *(f"<!-- {k} = {v} -->" for k, v in meta or ()),
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
        f'<text x="{LEFT + pw / 2}" y="{HEIGHT - 12}" text-anchor="middle" font-size="14">t</text>',
        f'<text x="18" y="{TOP + ph / 2}" text-anchor="middle" font-size="14" '
        f'transform="rotate(-90 18 {TOP + ph / 2})">{ylabel}</text>',
    ]
    if len(t):
        lo, hi = mean - ci, mean + ci
        ys = [lo, hi] + ([np.asarray(bound, dtype=float)] if bound is not None else [])
        y_min = min(0.0, min(float(y.min()) for y in ys))
        y_max = max(float(y.max()) for y in ys)
        if y_max <= y_min:
            y_max = y_min + 1.0
        t_min, t_max = float(t.min()), float(t.max())
        if t_max <= t_min:
            t_min, t_max = t_min - 0.5, t_max + 0.5

        def px(v):
            return LEFT + (v - t_min) / (t_max - t_min) * pw

        def py(v):
            return TOP + ph - (v - y_min) / (y_max - y_min) * ph

        for frac in (0.0, 0.5, 1.0):
            tv = t_min + frac * (t_max - t_min)
            yv = y_min + frac * (y_max - y_min)
            out.append(f'<text x="{_num(px(tv))}" y="{TOP + ph + 18}" text-anchor="middle" font-size="11">{_tick(tv)}</text>')
            out.append(f'<text x="{LEFT - 6}" y="{_num(py(yv) + 4)}" text-anchor="end" font-size="11">{_tick(yv)}</text>')

        if len(t) == 1:
            out.append(f'<circle cx="{_num(px(t[0]))}" cy="{_num(py(mean[0]))}" r="4" fill="steelblue"/>')
        else:
            band = [f"{_num(px(a))},{_num(py(b))}" for a, b in zip(t, hi)]
            band += [f"{_num(px(a))},{_num(py(b))}" for a, b in zip(t[::-1], lo[::-1])]
            out.append(f'<polygon points="{" ".join(band)}" fill="steelblue" fill-opacity="0.25" stroke="none"/>')
            line = " ".join(f"{_num(px(a))},{_num(py(b))}" for a, b in zip(t, mean))
            out.append(f'<polyline points="{line}" fill="none" stroke="steelblue" stroke-width="2"/>')
        if bound is not None and len(t) > 1:
            line = " ".join(f"{_num(px(a))},{_num(py(b))}" for a, b in zip(t, bound))
            out.append(f'<polyline points="{line}" fill="none" stroke="black" stroke-dasharray="2,4"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def plot_summary(columns: dict[str, np.ndarray], out_dir, meta=None) -> list[Path]:
    """Write one SVG per metric into ``out_dir``; returns the paths written."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, (mean_col, ci_col, label) in METRICS.items():
        svg = render_svg(columns["checkpoint_t"], columns[mean_col], columns[ci_col], columns.get("bound_value"), label, meta)
        path = out_dir / f"{name}.svg"
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(svg)
        paths.append(path)
    return paths
