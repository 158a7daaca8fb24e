"""Figure rendering for the seqmix experiment CSV outputs."""

from .plots import (
    METHOD_COLORS,
    FigureKind,
    FigureSpec,
    SchemaError,
    plot_coverage_table,
    plot_regret,
    plot_width_bars,
    render,
)

__version__ = "0.1.0"

__all__ = [
    "METHOD_COLORS",
    "FigureKind",
    "FigureSpec",
    "SchemaError",
    "plot_coverage_table",
    "plot_regret",
    "plot_width_bars",
    "render",
    "__version__",
]
