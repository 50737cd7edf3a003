"""Experiment manifests and the benchmark driver.

A manifest fixes the family, its parameters, the seed, the algorithms and the
iteration budgets.  :func:`run_experiment` generates the problem, computes the
reference value ``F_ref`` with a long P2GM_CM run and then runs every
requested algorithm from the same starting point.
"""

from __future__ import annotations

import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from ..baselines import fista_bt, fista_bt_rs, pdhg, supports
from ..problem import eval_objective
from ..solver import RunResult, SolverConfig, Variant, run
from .generators import Instance, gen_lasso, gen_simplex_qp, gen_structured_l1

__all__ = [
    "ALL_ALGOS",
    "FAMILIES",
    "GAP_FLOOR",
    "ExperimentManifest",
    "ExperimentResult",
    "bench_threads",
    "run_experiment",
]

logger = logging.getLogger(__name__)

ALL_ALGOS = ("P2GM_CM", "P2GM_M", "FISTA_bt", "FISTA_bt_rs", "PDHG")
FAMILIES = ("lasso", "simplex-qp", "structured-l1")
GAP_FLOOR = 1e-16

_DEFAULTS = {
    "lasso": dict(dims=(5000, 500), kappa=1e6, x0="zeros",
                  extra={"lam": 1e-4, "noise": 1e-3, "sparsity": 0.005}),
    "simplex-qp": dict(dims=(100, 100), kappa=5e5, x0="uniform", extra={}),
    "structured-l1": dict(dims=(50, 100), kappa=5e4, x0="zeros",
                          extra={"lam": 1.0 / 16, "sigma_a": math.sqrt(5000.0)}),
}


@dataclass(frozen=True)
class ExperimentManifest:
    """Everything needed to reproduce one benchmark run.

    ``dims`` is ``(m, n)``; for the simplex QP ``m = n`` (the working
    matrix is square).  ``x0`` only records the family's starting point.
    """

    family: str
    seed: int = 0
    dims: Tuple[int, int] = (0, 0)
    kappa: float = 0.0
    extra: dict = field(default_factory=dict)
    algos: Tuple[str, ...] = ALL_ALGOS
    max_iter: int = 3000
    reference_multiplier: int = 10
    x0: str = ""

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        unknown = set(self.algos) - set(ALL_ALGOS)
        if unknown:
            raise ValueError(f"unknown algorithms {sorted(unknown)}")
        if self.max_iter < 1 or self.reference_multiplier < 1:
            raise ValueError("budgets must be positive")
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "algos", tuple(self.algos))

    @classmethod
    def default(cls, family: str, **overrides) -> "ExperimentManifest":
        """Full-scale defaults for ``family``, updated with ``overrides``."""
        if family not in _DEFAULTS:
            raise ValueError(f"unknown family {family!r}")
        base = dict(_DEFAULTS[family])
        base["extra"] = {**base["extra"], **overrides.pop("extra", {})}
        base.update(overrides)
        return cls(family=family, **base)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["dims"] = list(self.dims)
        out["algos"] = list(self.algos)
        out["budgets"] = {"max_iter": out.pop("max_iter"),
                          "reference_multiplier": out.pop("reference_multiplier")}
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentManifest":
        data = dict(data)
        budgets = data.pop("budgets", {})
        return cls(**data, **budgets)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentManifest":
        return cls.from_dict(json.loads(text))

    def build(self) -> Instance:
        """Generate the problem instance (deterministic in the seed)."""
        m, n = self.dims
        ex = self.extra
        if self.family == "lasso":
            return gen_lasso(self.seed, m=m, n=n, kappa=self.kappa, sparsity=ex["sparsity"],
                             noise=ex["noise"], lam=ex["lam"])
        if self.family == "simplex-qp":
            return gen_simplex_qp(self.seed, n=n, kappa=self.kappa)
        return gen_structured_l1(self.seed, n=n, m=m, kappa=self.kappa,
                                 sigma_a=ex["sigma_a"], lam=ex["lam"])


@dataclass
class ExperimentResult:
    manifest: ExperimentManifest
    reference: float
    reference_status: str
    reference_iterations: int
    initial_objective: float
    runs: Dict[str, RunResult] = field(default_factory=dict)
    skipped: Dict[str, str] = field(default_factory=dict)

    def objectives(self, algo: str) -> np.ndarray:
        """``F(x^k)`` for ``k = 0, 1, ...`` (the starting point included)."""
        res = self.runs[algo]
        return np.array([res.initial_objective] + [r.objective for r in res.trace])

    def gaps(self, algo: str, floor: float = GAP_FLOOR) -> np.ndarray:
        """``max(F(x^k) - F_ref, floor)``."""
        return np.maximum(self.objectives(algo) - self.reference, floor)

    def iters_to_gap(self, algo: str, level: float) -> Optional[int]:
        """First ``k`` with ``F(x^k) - F_ref <= level``, or None."""
        hit = np.nonzero(self.objectives(algo) - self.reference <= level)[0]
        return int(hit[0]) if hit.size else None

    def status(self, algo: str) -> str:
        if algo in self.skipped:
            return self.skipped[algo]
        return self.runs[algo].status


def bench_threads() -> int:
    """Worker count from ``BENCH_THREADS`` (default 1)."""
    raw = os.environ.get("BENCH_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValueError(f"BENCH_THREADS must be an integer, got {raw!r}") from None


def _skip_reason(algo, problem) -> Optional[str]:
    if supports(algo, problem):
        return None
    if algo.startswith("FISTA"):
        return "skipped: no closed-form prox"
    return "skipped: requires an l1 term"


def _run_one(algo: str, problem, x0, max_iter: int) -> RunResult:
    if algo == "P2GM_CM":
        return run(problem, x0, SolverConfig(max_iter=max_iter, variant=Variant.CONJUGATE_MOMENTUM))
    if algo == "P2GM_M":
        return run(problem, x0, SolverConfig(max_iter=max_iter, variant=Variant.PLAIN_MOMENTUM))
    if algo == "FISTA_bt":
        return fista_bt(problem, x0, max_iter)
    if algo == "FISTA_bt_rs":
        return fista_bt_rs(problem, x0, max_iter)
    if algo == "PDHG":
        return pdhg(problem, x0, max_iter=max_iter)
    raise ValueError(f"unknown algorithm {algo!r}")


def run_experiment(manifest: ExperimentManifest, threads: Optional[int] = None) -> ExperimentResult:
    """Generate, compute the reference value, run every algorithm.

    Algorithms that cannot handle the family are recorded as skipped.  The
    per-iteration wall times in the traces cover only the algorithm runs.
    """
    inst = manifest.build()
    problem, x0 = inst.problem, inst.x0
    ref_budget = manifest.reference_multiplier * manifest.max_iter
    ref = run(problem, x0, SolverConfig(max_iter=ref_budget), record_info=False)
    logger.info("%s seed=%d: reference %s after %d iterations, F=%.16e", manifest.family,
                manifest.seed, ref.status, ref.iterations, ref.objective)
    out = ExperimentResult(manifest, ref.objective, ref.status, ref.iterations,
                           eval_objective(problem, x0, 1e-8))

    todo = []
    for algo in manifest.algos:
        reason = _skip_reason(algo, problem)
        if reason is None:
            todo.append(algo)
        else:
            out.skipped[algo] = reason
    workers = threads if threads is not None else bench_threads()
    if workers <= 1:
        results = [_run_one(a, problem, x0, manifest.max_iter) for a in todo]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda a: _run_one(a, problem, x0, manifest.max_iter), todo))
    out.runs = dict(zip(todo, results))
    return out
