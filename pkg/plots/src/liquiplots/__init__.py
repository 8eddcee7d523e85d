"""Figure rendering for the liquidation CLI's CSV outputs."""

from .render import (
    PATH_COLUMNS,
    SWEEP_COLUMNS,
    load_table,
    path_figure,
    save_png,
    sweep_figure,
)

__all__ = [
    "PATH_COLUMNS",
    "SWEEP_COLUMNS",
    "load_table",
    "path_figure",
    "save_png",
    "sweep_figure",
]
