"""Run every bundled scenario config and print a table of the headline numbers.

    python scripts/reproduce_figures.py [--out runs] [--only closed emission ...]

Each scenario writes its CSVs and summary.json under ``<out>/<config stem>/``.
"""
import argparse
import time
from pathlib import Path

from wstate_lyapunov.config import load_config
from wstate_lyapunov.scenarios import run_scenario

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
METRICS = ("final_fidelity", "peak_fidelity", "time_to_0.98", "post_herald_fidelity")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", type=Path, default=Path("runs"))
    parser.add_argument("--only", nargs="*", default=None, help="config stems to run")
    args = parser.parse_args()

    paths = sorted(CONFIGS.glob("*.yaml"))
    if args.only:
        paths = [p for p in paths if p.stem in args.only]
    failed = 0
    for path in paths:
        t0 = time.perf_counter()
        summary = run_scenario(load_config(path), args.out / path.stem)
        print(f"== {path.stem} ({time.perf_counter() - t0:.1f} s)")
        for label, run in summary["runs"].items():
            cells = [f"{m}={run[m]:.4f}" if isinstance(run.get(m), float) else f"{m}={run.get(m)}"
                     for m in METRICS if m in run]
            print(f"   {label:<18} " + "  ".join(cells))
        for check in summary.get("checks", []):
            status = "ok " if check["passed"] else "MISS"
            failed += not check["passed"]
            print(f"   [{status}] {check['run']}.{check['metric']} = {check['actual']}")
    print(f"{failed} expectation(s) missed")


if __name__ == "__main__":
    main()
