"""Figures from the liquidation CLI's CSV emissions.

This package is a read-only consumer: the two CSV schemas are its whole
contract with the numerical side, and nothing is imported from it. The
style is pinned so that byte-identical input yields byte-identical PNGs.
"""

import csv

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

SWEEP_COLUMNS = ("h", "standard", "delayed", "insider")
PATH_COLUMNS = ("t", "price", "phi_standard", "phi_delayed", "phi_insider",
                "pos_standard", "pos_delayed", "pos_insider")

_COLORS = {"standard": "#1f77b4", "delayed": "#d62728", "insider": "#2ca02c"}
_DPI = 150


def load_table(src, columns):
    """Parse a CSV whose header is exactly `columns` into a column dict.

    The header is matched order-sensitively; a permuted file is someone
    else's format and refusing it beats silently mislabeling a series.
    """
    with open(src, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValueError(f"{src}: file is empty")
        if tuple(header) != tuple(columns):
            missing = [c for c in columns if c not in header]
            if missing:
                raise ValueError(f"{src}: missing column(s) {', '.join(missing)}")
            raise ValueError(f"{src}: header must be exactly "
                             f"{','.join(columns)}, got {','.join(header)}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(columns):
                raise ValueError(f"{src}: line {lineno} has {len(row)} fields, "
                                 f"expected {len(columns)}")
            try:
                rows.append([float(x) for x in row])
            except ValueError:
                raise ValueError(f"{src}: line {lineno} has a non-numeric "
                                 "field") from None
    if not rows:
        raise ValueError(f"{src}: header but no data rows")
    return {name: [r[i] for r in rows] for i, name in enumerate(columns)}


def sweep_figure(table):
    """Tracking value against the Hurst index, one line per information regime."""
    fig, ax = plt.subplots(figsize=(6.4, 4.0), dpi=_DPI)
    for name in ("standard", "delayed", "insider"):
        ax.plot(table["h"], table[name], color=_COLORS[name], label=name)
    ax.set_xlabel("H")
    ax.set_ylabel("normalized value")
    ax.grid(True, alpha=0.3)
    ax.legend(frameon=False)
    fig.tight_layout()
    return fig


def path_figure(table):
    """Two panels: the simulated price on top, the three trading rates below."""
    fig, (top, bottom) = plt.subplots(2, 1, figsize=(6.4, 5.6), dpi=_DPI,
                                      sharex=True)
    top.plot(table["t"], table["price"], color="#444444")
    top.set_ylabel("price")
    top.grid(True, alpha=0.3)
    for name in ("standard", "delayed", "insider"):
        bottom.plot(table["t"], table["phi_" + name], color=_COLORS[name],
                    label=name)
    bottom.set_xlabel("t")
    bottom.set_ylabel("trading rate")
    bottom.grid(True, alpha=0.3)
    bottom.legend(frameon=False)
    fig.tight_layout()
    return fig


def save_png(fig, out):
    # drop the writer's Software tag; the pixels are then the only content
    fig.savefig(out, format="png", dpi=_DPI, metadata={"Software": None})
    plt.close(fig)
