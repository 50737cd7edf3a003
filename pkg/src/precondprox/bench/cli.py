"""``bench`` command line: run experiments, regenerate plots, run acceptance."""

from __future__ import annotations

import argparse
import logging
import os
import subprocess
import sys
from pathlib import Path

from .harness import ALL_ALGOS, FAMILIES, ExperimentManifest, run_experiment
from .report import emit_report, plot_dir

__all__ = ["main"]


def _algos(text: str):
    if text == "all":
        return ALL_ALGOS
    names = tuple(a.strip() for a in text.split(",") if a.strip())
    bad = [a for a in names if a not in ALL_ALGOS]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown algorithms {bad}; choose from {list(ALL_ALGOS)}")
    return names


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _cmd_run(args) -> int:
    overrides = {"seed": args.seed, "algos": args.algos, "max_iter": args.max_iter}
    if args.reference_multiplier is not None:
        overrides["reference_multiplier"] = args.reference_multiplier
    manifest = ExperimentManifest.default(args.family, **overrides)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "manifest.json").write_text(manifest.to_json() + "\n")
    result = run_experiment(manifest)
    emit_report(result, out)
    print(f"{manifest.family} seed={manifest.seed}  F_ref={result.reference:.16e} ({result.reference_status})")
    for algo in manifest.algos:
        hit = None if algo in result.skipped else result.iters_to_gap(algo, 1e-6)
        print(f"  {algo:<12} {result.status(algo):<30} iters_to_gap_1e-6={hit}")
    print(f"wrote {out}")
    return 0


def _cmd_plot(args) -> int:
    for path in plot_dir(args.in_dir):
        print(f"wrote {path}")
    return 0


def _acceptance_path(explicit):
    if explicit:
        return Path(explicit)
    env = os.environ.get("BENCH_ACCEPTANCE")
    if env:
        return Path(env)
    # editable/source checkout: <root>/src/precondprox/bench/cli.py
    return Path(__file__).resolve().parents[3] / "tests" / "test_acceptance.py"


def _cmd_verify(args) -> int:
    path = _acceptance_path(args.path)
    if not path.exists():
        print(f"acceptance suite not found at {path}; pass --path", file=sys.stderr)
        return 2
    return subprocess.call([sys.executable, "-m", "pytest", str(path), "-v", "-s"])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bench", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one experiment family and write a report")
    p.add_argument("--family", choices=FAMILIES, required=True)
    p.add_argument("--algos", type=_algos, default=ALL_ALGOS, help="'all' or a comma list")
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--max-iter", type=int, default=3000)
    p.add_argument("--reference-multiplier", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("plot", help="regenerate SVG plots from a report directory")
    p.add_argument("--in", dest="in_dir", required=True)
    p.set_defaults(func=_cmd_plot)

    p = sub.add_parser("verify", help="run the acceptance suite")
    p.add_argument("--path", default=None, help="path to test_acceptance.py")
    p.set_defaults(func=_cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
