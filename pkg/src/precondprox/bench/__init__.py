"""Synthetic benchmark families, experiment harness and reporting."""

from .generators import gen_lasso, gen_simplex_qp, gen_structured_l1
from .harness import ALL_ALGOS, ExperimentManifest, ExperimentResult, run_experiment
from .report import emit_report, plot_dir

__all__ = [
    "ALL_ALGOS",
    "ExperimentManifest",
    "ExperimentResult",
    "emit_report",
    "gen_lasso",
    "gen_simplex_qp",
    "gen_structured_l1",
    "plot_dir",
    "run_experiment",
]
