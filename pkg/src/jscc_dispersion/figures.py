"""Figure presets: fixed parameter sets rendered to CSV tables and PNG plots."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import io, plotting
from .rate_calculator import RateProblem, joint_dmc_error, kv_bound, kv_ratio_upper
from .special_dists import StarProductSpec, SwitchedConvSpec, _phi, star_cdf, switched_cdf

PSI_V3 = (1.0, 1.0 / 9.0, 0.0, 4.0, 25.0, 625.0, math.inf)
SANDWICH_PAIRS = ((1.5, 0.5), (1.9, 0.1), (1.99, 0.01))
RATIO_SETS = ((0.1, 10.0), (0.5, 1.5))


@dataclass(frozen=True)
class Table:
    columns: tuple[str, ...]
    rows: np.ndarray
    config: dict


def _label(v: float) -> str:
    if math.isinf(v):
        return "inf"
    return io.fmt(v)


def psi_table(grid) -> Table:
    cols = ["R"] + [f"psi_1_1_{_label(v)}" for v in PSI_V3]
    specs = [SwitchedConvSpec(1.0, 1.0, v) for v in PSI_V3]
    rows = np.array([[r] + [switched_cdf(s, float(r)) for s in specs] for r in grid])
    return Table(tuple(cols), rows, {"preset": "fig-psi", "v1": 1, "v2": 1, "v3": [_label(v) for v in PSI_V3]})


def sandwich_table(grid) -> Table:
    cols = ["R", "upper_2phi4"] + [f"star_{_label(a)}_{_label(b)}" for a, b in SANDWICH_PAIRS] + ["phi_2"]
    specs = [StarProductSpec(a, b) for a, b in SANDWICH_PAIRS]
    rows = []
    for r in grid:
        u = _phi(4.0, float(r))
        rows.append([r, 2 * u - u * u] + [star_cdf(s, float(r)) for s in specs] + [_phi(2.0, float(r))])
    return Table(tuple(cols), np.array(rows), {"preset": "fig-sandwich", "pairs": [list(p) for p in SANDWICH_PAIRS]})


def ratio_table(grid) -> Table:
    cols = ["R", "bound_kv"] + [f"ratio_kv_{_label(a)}_{_label(b)}" for a, b in RATIO_SETS]
    probs = [RateProblem.from_terms(1.0, vm, vp) for vm, vp in RATIO_SETS]
    rows = []
    for r in grid:
        r = float(r)
        rows.append([r, kv_ratio_upper(probs[0], r)] + [kv_bound(p, r) / joint_dmc_error(p, r) for p in probs])
    return Table(
        tuple(cols),
        np.array(rows),
        {"preset": "fig-ratio", "source_term": 1, "v_minus_v_plus": [list(p) for p in RATIO_SETS]},
    )


PRESETS = {
    "fig-psi": (psi_table, "-4:4:0.05"),
    "fig-sandwich": (sandwich_table, "-4:4:0.05"),
    "fig-ratio": (ratio_table, "-6:6:0.05"),
}

_STYLES = {
    "fig-psi": [
        {"color": "black"},
        {"color": "red", "linestyle": "--"},
        {"color": "red"},
        {"color": "blue", "linestyle": "--"},
        {"color": "blue"},
        {"color": "blue", "linestyle": "--", "linewidth": 2.5},
        {"color": "blue", "linewidth": 2.5},
    ],
    "fig-sandwich": [
        {"color": "red"},
        {"color": "blue", "linestyle": ":"},
        {"color": "blue"},
        {"color": "blue", "linestyle": "--"},
        {"color": "black"},
    ],
    "fig-ratio": [{"color": "blue"}, {"color": "red"}, {"color": "black"}],
}


def render(name: str, outdir, grid_spec: str | None = None) -> tuple[Path, Path]:
    """Write ``<name>.csv`` and ``<name>.png`` into ``outdir``."""
    build, default_grid = PRESETS[name]
    spec = grid_spec or default_grid
    grid = io.parse_grid(spec)
    table = build(grid)
    outdir = Path(outdir)
    config = dict(table.config, grid=spec)
    csv_path = io.write_csv(outdir / f"{name}.csv", table.columns, table.rows, config)
    series = [(c, table.rows[:, i + 1], st) for i, (c, st) in enumerate(zip(table.columns[1:], _STYLES[name]))]
    ylabel = "ratio" if name == "fig-ratio" else "CDF"
    png_path = plotting.line_plot(outdir / f"{name}.png", table.rows[:, 0], series, ylabel=ylabel, title=name)
    return csv_path, png_path
