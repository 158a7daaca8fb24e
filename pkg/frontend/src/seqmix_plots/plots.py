"""Render regret curves, width bar charts, and coverage tables from the
frozen experiment CSV schemas.

Plots are a pure function of the CSV contents: statistics beyond a groupby
mean/stddev are never recomputed, inputs are opened read-only, and output
images are deterministic (fixed figure geometry, no timestamps).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import pandas as pd

# fixed method-color map; unknown methods fall back to grey
METHOD_COLORS = {
    "MQ": "tab:green",
    "PL": "tab:orange",
    "EMK": "tab:blue",
}
_FALLBACK_COLOR = "tab:gray"

_SCHEMAS = {
    "regret": ["method", "S", "seed", "t", "cum_regret", "threshold", "width_proxy"],
    "widths": ["method", "run", "coord", "width"],
    "coverage": ["construction", "delta", "R", "failures", "failure_rate", "binomial_3sigma"],
}


class FigureKind(enum.Enum):
    REGRET_GRID = "regret"
    WIDTH_BARS = "widths"
    COVERAGE_TABLE = "coverage"


@dataclass(frozen=True)
class FigureSpec:
    input_path: Path
    kind: FigureKind
    output_path: Path
    method_colors: dict = field(default_factory=lambda: dict(METHOD_COLORS))


class SchemaError(ValueError):
    """Input CSV does not match the frozen schema."""


def _color(spec: FigureSpec, method: str) -> str:
    return spec.method_colors.get(method, _FALLBACK_COLOR)


def _load(spec: FigureSpec) -> pd.DataFrame:
    path = Path(spec.input_path)
    if not path.exists():
        raise FileNotFoundError(f"input CSV not found: {path}")
    # the first line is the `# version, git, config, seed` metadata comment
    frame = pd.read_csv(path, comment="#")
    expected = _SCHEMAS[spec.kind.value]
    missing = [c for c in expected if c not in frame.columns]
    if missing:
        raise SchemaError(
            f"{path}: missing column(s) {', '.join(missing)} "
            f"(expected {expected})"
        )
    return frame


def plot_regret(spec: FigureSpec) -> Path:
    """One panel per S: mean cumulative regret per method with a +-1 stddev
    band over seeds."""
    frame = _load(spec)
    s_values = sorted(frame["S"].unique())
    n = len(s_values)
    fig, axes = plt.subplots(1, n, figsize=(4.0 * n, 3.2), squeeze=False, sharex=True)
    for ax, s in zip(axes[0], s_values):
        panel = frame[frame["S"] == s]
        for method in sorted(panel["method"].unique()):
            grp = panel[panel["method"] == method].groupby("t")["cum_regret"]
            mean = grp.mean()
            # single-seed inputs get a degenerate (zero-width) band
            std = grp.std(ddof=1).fillna(0.0)
            color = _color(spec, method)
            ax.plot(mean.index, mean.values, label=method, color=color)
            ax.fill_between(
                mean.index,
                (mean - std).values,
                (mean + std).values,
                color=color,
                alpha=0.2,
                linewidth=0,
            )
        ax.set_title(f"S = {s:g}")
        ax.set_xlabel("t")
        ax.grid(True, alpha=0.3)
    axes[0][0].set_ylabel("cumulative regret")
    axes[0][0].legend(loc="upper left")
    fig.tight_layout()
    return _save(fig, spec)


def plot_width_bars(spec: FigureSpec) -> Path:
    """Grouped bars per coordinate x method: mean width over reruns with
    1 stddev error bars."""
    frame = _load(spec)
    methods = sorted(frame["method"].unique())
    coords = sorted(frame["coord"].unique())
    stats = frame.groupby(["method", "coord"])["width"].agg(["mean", "std"])
    stats["std"] = stats["std"].fillna(0.0)
    width = 0.8 / len(methods)
    fig, ax = plt.subplots(figsize=(10.0, 3.6))
    for i, method in enumerate(methods):
        sub = stats.loc[method].reindex(coords)
        positions = [c + (i - (len(methods) - 1) / 2.0) * width for c in coords]
        ax.bar(
            positions,
            sub["mean"].values,
            width=width,
            yerr=sub["std"].values,
            label=method,
            color=_color(spec, method),
            capsize=2,
        )
    ax.set_xticks(coords)
    ax.set_xlabel("coordinate")
    ax.set_ylabel("confidence width")
    ax.legend()
    fig.tight_layout()
    return _save(fig, spec)


def plot_coverage_table(spec: FigureSpec) -> Path:
    """Failure-rate table, one row per construction."""
    frame = _load(spec)
    columns = _SCHEMAS["coverage"]
    cells = [[_cell(row[c]) for c in columns] for _, row in frame.iterrows()]
    fig, ax = plt.subplots(figsize=(9.0, 0.4 * (len(cells) + 2)))
    ax.axis("off")
    table = ax.table(cellText=cells, colLabels=columns, loc="center")
    table.auto_set_font_size(False)
    table.set_fontsize(9)
    fig.tight_layout()
    return _save(fig, spec)


def _cell(value) -> str:
    if isinstance(value, float):
        return format(value, ".6g")
    return str(value)


def _save(fig, spec: FigureSpec) -> Path:
    out = Path(spec.output_path)
    fig.savefig(out, dpi=120)
    plt.close(fig)
    return out


_RENDERERS = {
    FigureKind.REGRET_GRID: plot_regret,
    FigureKind.WIDTH_BARS: plot_width_bars,
    FigureKind.COVERAGE_TABLE: plot_coverage_table,
}


def render(spec: FigureSpec) -> Path:
    return _RENDERERS[spec.kind](spec)
