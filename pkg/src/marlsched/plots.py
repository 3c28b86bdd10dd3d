"""Hand-emitted SVG plots from result CSVs; no plotting dependency."""

from __future__ import annotations

from pathlib import Path

from .experiment import read_episode_csv

WIDTH, HEIGHT = 640, 400
MARGIN = 56
COLORS = {"random": "#7f7f7f", "wrr": "#1f77b4", "minmin": "#2ca02c", "drl": "#d62728"}


class PlotInputError(ValueError):
    """Raised when a result CSV is missing or unusable; names the file."""


def _load_series(results_dir, name):
    path = Path(results_dir) / f"{name}.csv"
    if not path.exists():
        raise PlotInputError(f"missing results file: {path}")
    rows = read_episode_csv(path)
    episodes, atct = [], []
    for r in rows:
        if r.get("atct_s"):
            episodes.append(int(r["episode"]) + 1)
            atct.append(float(r["atct_s"]))
    if not atct:
        raise PlotInputError(f"no usable ATCT data in {path}")
    return episodes, atct


def _svg(body: list[str]) -> str:
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">\n'
        '<rect width="100%" height="100%" fill="white"/>\n' + "\n".join(body) + "\n</svg>\n"
    )


def _axes(x0, y0, x1, y1, xlabel, ylabel, title):
    return [
        f'<line x1="{x0}" y1="{y1}" x2="{x1}" y2="{y1}" stroke="black"/>',
        f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>',
        f'<text x="{(x0 + x1) / 2:.0f}" y="{y1 + 34}" text-anchor="middle">{xlabel}</text>',
        f'<text x="{x0 - 40}" y="{(y0 + y1) / 2:.0f}" text-anchor="middle" '
        f'transform="rotate(-90 {x0 - 40} {(y0 + y1) / 2:.0f})">{ylabel}</text>',
        f'<text x="{(x0 + x1) / 2:.0f}" y="{y0 - 8}" text-anchor="middle" font-size="13">{title}</text>',
    ]


def _scale(values, lo_px, hi_px, vmin=None, vmax=None):
    vmin = min(values) if vmin is None else vmin
    vmax = max(values) if vmax is None else vmax
    if vmax == vmin:
        vmax = vmin + 1.0
    span = vmax - vmin

    def to_px(v):
        return lo_px + (v - vmin) / span * (hi_px - lo_px)

    return to_px, vmin, vmax


def learning_curve_svg(results_dir, schedulers, out_path) -> None:
    """Per-episode ATCT for every scheduler."""
    series = {name: _load_series(results_dir, name) for name in schedulers}
    x0, y0, x1, y1 = MARGIN, MARGIN, WIDTH - 20, HEIGHT - MARGIN
    all_eps = [e for eps, _ in series.values() for e in eps]
    all_atct = [v for _, vals in series.values() for v in vals]
    sx, *_ = _scale(all_eps, x0, x1, vmin=1)
    sy, ymin, ymax = _scale(all_atct, y1, y0, vmin=0)
    body = _axes(x0, y0, x1, y1, "Episode", "ATCT (s)", "Per-episode average task completion time")
    body.append(f'<text x="{x0 - 6}" y="{y1 + 4}" text-anchor="end">{ymin:.0f}</text>')
    body.append(f'<text x="{x0 - 6}" y="{y0 + 4}" text-anchor="end">{ymax:.0f}</text>')
    body.append(f'<text x="{x1}" y="{y1 + 16}" text-anchor="end">{max(all_eps)}</text>')
    for i, (name, (eps, vals)) in enumerate(series.items()):
        pts = " ".join(f"{sx(e):.1f},{sy(v):.1f}" for e, v in zip(eps, vals))
        color = COLORS.get(name, "#000")
        body.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        ly = y0 + 14 + 14 * i
        body.append(f'<line x1="{x1 - 110}" y1="{ly - 4}" x2="{x1 - 90}" y2="{ly - 4}" '
                    f'stroke="{color}" stroke-width="2"/>')
        body.append(f'<text x="{x1 - 84}" y="{ly}">{name}</text>')
    Path(out_path).write_text(_svg(body))


def comparison_bars_svg(results_dir, schedulers, final_window, out_path) -> None:
    """Four panels of final-window means: ATCT, energy, SLA rate, throughput."""
    panels = [
        ("atct_s", "ATCT (s)"),
        ("energy_kwh", "Energy (kWh)"),
        ("sla_rate", "SLA rate"),
        ("throughput_per_1000s", "Throughput /1000s"),
    ]
    data = {}
    for name in schedulers:
        path = Path(results_dir) / f"{name}.csv"
        if not path.exists():
            raise PlotInputError(f"missing results file: {path}")
        rows = read_episode_csv(path)[-final_window:]
        data[name] = {
            key: (sum(float(r[key]) for r in rows if r[key]) / max(1, sum(1 for r in rows if r[key])))
            for key, _ in panels
        }
    body = []
    pw, ph = WIDTH / 2, HEIGHT / 2
    for pi, (key, label) in enumerate(panels):
        ox, oy = (pi % 2) * pw, (pi // 2) * ph
        x0, y0, x1, y1 = ox + 52, oy + 28, ox + pw - 14, oy + ph - 40
        vals = [data[n][key] for n in schedulers]
        sy, _, vmax = _scale(vals, y1, y0, vmin=0)
        body += _axes(x0, y0, x1, y1, "", label, label)
        bw = (x1 - x0) / len(schedulers) * 0.6
        gap = (x1 - x0) / len(schedulers)
        for i, name in enumerate(schedulers):
            bx = x0 + gap * i + (gap - bw) / 2
            top = sy(data[name][key])
            body.append(f'<rect x="{bx:.1f}" y="{top:.1f}" width="{bw:.1f}" '
                        f'height="{y1 - top:.1f}" fill="{COLORS.get(name, "#000")}"/>')
            body.append(f'<text x="{bx + bw / 2:.1f}" y="{y1 + 14}" text-anchor="middle">{name}</text>')
            body.append(f'<text x="{bx + bw / 2:.1f}" y="{top - 3:.1f}" text-anchor="middle" '
                        f'font-size="9">{data[name][key]:.3g}</text>')
    Path(out_path).write_text(_svg(body))


def improvement_curve_svg(results_dir, out_path) -> None:
    """Per-episode relative ATCT improvement of drl over random."""
    eps_d, drl = _load_series(results_dir, "drl")
    eps_r, rnd = _load_series(results_dir, "random")
    common = sorted(set(eps_d) & set(eps_r))
    if not common:
        raise PlotInputError(f"no overlapping episodes between drl.csv and random.csv in {results_dir}")
    dmap, rmap = dict(zip(eps_d, drl)), dict(zip(eps_r, rnd))
    imp = [(rmap[e] - dmap[e]) / rmap[e] * 100.0 for e in common]
    x0, y0, x1, y1 = MARGIN, MARGIN, WIDTH - 20, HEIGHT - MARGIN
    sx, *_ = _scale(common, x0, x1, vmin=1)
    sy, ymin, ymax = _scale(imp, y1, y0)
    body = _axes(x0, y0, x1, y1, "Episode", "Improvement over random (%)",
                 "ATCT improvement of drl over random")
    if ymin < 0 < ymax:
        zy = sy(0)
        body.append(f'<line x1="{x0}" y1="{zy:.1f}" x2="{x1}" y2="{zy:.1f}" '
                    'stroke="#bbb" stroke-dasharray="4 3"/>')
    body.append(f'<text x="{x0 - 6}" y="{y1 + 4}" text-anchor="end">{ymin:.0f}</text>')
    body.append(f'<text x="{x0 - 6}" y="{y0 + 4}" text-anchor="end">{ymax:.0f}</text>')
    pts = " ".join(f"{sx(e):.1f},{sy(v):.1f}" for e, v in zip(common, imp))
    body.append(f'<polyline points="{pts}" fill="none" stroke="{COLORS["drl"]}" stroke-width="1.5"/>')
    Path(out_path).write_text(_svg(body))


def emit_all(results_dir, schedulers, final_window) -> dict[str, str | None]:
    """Emit every plot independently; return per-plot error messages (None = ok)."""
    results_dir = Path(results_dir)
    present = [n for n in schedulers if (results_dir / f"{n}.csv").exists()]
    outcomes = {}
    jobs = {
        "learning_curve.svg": lambda p: learning_curve_svg(results_dir, present or schedulers, p),
        "comparison.svg": lambda p: comparison_bars_svg(results_dir, present or schedulers, final_window, p),
        "improvement.svg": lambda p: improvement_curve_svg(results_dir, p),
    }
    for fname, job in jobs.items():
        try:
            job(results_dir / fname)
            outcomes[fname] = None
        except PlotInputError as exc:
            outcomes[fname] = str(exc)
    return outcomes
