"""Regenerate the data tables behind every figure.

    python3 scripts/reproduce_figures.py --out runs/figures [--only fig2 fig6]

fig4 and fig5 include the three-mode pseudo-mode run at (1, 1), about
10 minutes each on one core; the remaining figures take a few minutes.
"""
import argparse
import json
import logging
import sys
import time

from spinboson import harness

FIGS = [f"fig{i}" for i in range(1, 9)]


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--out", default="runs/figures")
    p.add_argument("--only", nargs="*", choices=FIGS, default=FIGS)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")
    failed = 0
    for fig in args.only:
        t0 = time.perf_counter()
        cfg = harness.ExperimentConfig(experiment=fig, out=f"{args.out}/{fig}", seed=args.seed)
        summary = harness.run_experiment(cfg)
        failed += bool(summary["failures"])
        logging.info("%s: %d files, %d failures, %.0f s", fig, len(summary["written"]),
                     len(summary["failures"]), time.perf_counter() - t0)
        if summary["failures"]:
            print(json.dumps(harness._jsonable(summary["failures"]), indent=2), file=sys.stderr)
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
