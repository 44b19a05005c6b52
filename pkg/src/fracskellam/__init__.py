"""Time-changed generalized counting and Skellam processes.

Analytic distributions (p.m.f., p.g.f., moments, tails, passage times)
from truncated Mittag-Leffler series with explicit truncation bounds,
Monte Carlo samplers built on stable and inverse stable subordinators,
and a harness that checks one against the other.
"""

__version__ = "0.1.0"

from .processes import ConfigError, ProcessSpec, RateVector, process_path, process_sample
from .special_functions import ConvergenceError, mittag_leffler
from .subordinators import RngStream, TimeGrid
from .analytics import (
    gstfcp_pmf,
    gstfcp_pmf_table,
    gstfsp_pgf,
    gstfsp_pmf,
    gstfsp_pmf_table,
    moments,
)
from .validation import load_config, parse_config, run_experiment

__all__ = [
    "__version__",
    "ConfigError",
    "ConvergenceError",
    "ProcessSpec",
    "RateVector",
    "RngStream",
    "TimeGrid",
    "mittag_leffler",
    "process_path",
    "process_sample",
    "gstfcp_pmf",
    "gstfcp_pmf_table",
    "gstfsp_pmf",
    "gstfsp_pmf_table",
    "gstfsp_pgf",
    "moments",
    "parse_config",
    "load_config",
    "run_experiment",
]
