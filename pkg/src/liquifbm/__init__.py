"""Optimal liquidation under linear temporary impact with fBm prices."""

__version__ = "0.1.0"

from .kernel import TimeGrid, KernelTable, c_h, z_kernel, k_integral, build_table

__all__ = [
    "TimeGrid",
    "KernelTable",
    "c_h",
    "z_kernel",
    "k_integral",
    "build_table",
    "__version__",
]
