"""CSV traces, JSON summary and log-gap plots for one experiment."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Dict, List

import numpy as np

from .harness import GAP_FLOOR, ExperimentResult

__all__ = ["CSV_COLUMNS", "emit_report", "read_trace", "plot_dir", "write_trace"]

CSV_COLUMNS = ("algo", "iter", "time_sec", "objective", "residual", "stepsize")
GAP_LEVELS = (1e-6, 1e-10)
_SVG_SALT = "precondprox"


def _finite_or_none(x):
    # keeps summary.json strict JSON when a run diverges
    return x if math.isfinite(x) else None


def _fmt(x: float) -> str:
    return repr(float(x))


def write_trace(path: Path, result: ExperimentResult, algo: str) -> None:
    """One row per iterate, starting with ``k = 0``."""
    res = result.runs[algo]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        w.writerow([algo, 0, _fmt(0.0), _fmt(res.initial_objective), "nan", "nan"])
        for r in res.trace:
            w.writerow([algo, r.iter, _fmt(r.wall_seconds), _fmt(r.objective), _fmt(r.residual),
                        _fmt(r.stepsize)])


def read_trace(path) -> Dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    out = {"algo": rows[0]["algo"] if rows else Path(path).stem}
    for col in CSV_COLUMNS[1:]:
        out[col] = np.array([float(r[col]) for r in rows])
    return out


def _summary(result: ExperimentResult) -> dict:
    algos = {}
    for algo in result.manifest.algos:
        if algo in result.skipped:
            algos[algo] = {"status": result.skipped[algo]}
            continue
        res = result.runs[algo]
        entry = {
            "status": res.status,
            "iterations": res.iterations,
            "final_objective": _finite_or_none(res.objective),
            "final_gap": _finite_or_none(float(res.objective - result.reference)),
            "wall_seconds": res.trace[-1].wall_seconds if res.trace else 0.0,
        }
        for level in GAP_LEVELS:
            entry[f"iters_to_gap_{level:g}"] = result.iters_to_gap(algo, level)
        algos[algo] = entry
    return {
        "manifest": result.manifest.to_dict(),
        "reference": result.reference,
        "reference_status": result.reference_status,
        "reference_iterations": result.reference_iterations,
        "initial_objective": result.initial_objective,
        "algos": algos,
    }


def emit_report(result: ExperimentResult, out_dir) -> List[Path]:
    """Write ``<algo>.csv`` per run, ``summary.json`` and the two SVG plots."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for algo in result.runs:
        path = out / f"{algo}.csv"
        write_trace(path, result, algo)
        written.append(path)
    path = out / "summary.json"
    path.write_text(json.dumps(_summary(result), indent=2, sort_keys=True) + "\n")
    written.append(path)
    written.extend(plot_dir(out))
    return written


def plot_dir(in_dir) -> List[Path]:
    """Regenerate the log-gap plots of a report directory from its CSVs."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    src = Path(in_dir)
    summary = json.loads((src / "summary.json").read_text())
    family = summary["manifest"]["family"]
    ref = summary["reference"]
    traces = []
    for algo in summary["manifest"]["algos"]:
        path = src / f"{algo}.csv"
        if path.exists():
            traces.append(read_trace(path))

    written = []
    panels = (("iter", "iteration", "iter"), ("time_sec", "time (s)", "time"))
    with matplotlib.rc_context({"svg.hashsalt": _SVG_SALT, "svg.fonttype": "path"}):
        for col, xlabel, tag in panels:
            fig, ax = plt.subplots(figsize=(6.0, 4.0))
            for tr in traces:
                gap = np.maximum(tr["objective"] - ref, GAP_FLOOR)
                ax.semilogy(tr[col], gap, label=tr["algo"], linewidth=1.2)
            ax.set_xlabel(xlabel)
            ax.set_ylabel(r"$F(x^k) - \tilde F$")
            ax.set_title(family)
            ax.grid(True, which="major", alpha=0.3)
            if traces:
                ax.legend()
            path = src / f"{family}_gap_vs_{tag}.svg"
            fig.savefig(path, format="svg", metadata={"Date": None})
            plt.close(fig)
            written.append(path)
    return written
