"""Second-order error curves for joint source-channel coding with Markov sources."""

from __future__ import annotations

__version__ = "0.1.0"

from . import dmc_analysis, finite_blocklength_lab, markov_info, rate_calculator, special_dists  # noqa: E402
from .errors import ConfigError, ToolkitError  # noqa: E402

__all__ = [
    "__version__",
    "markov_info",
    "special_dists",
    "dmc_analysis",
    "rate_calculator",
    "finite_blocklength_lab",
    "ConfigError",
    "ToolkitError",
]
