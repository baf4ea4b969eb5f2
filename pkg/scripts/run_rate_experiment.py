"""Run an experiment plan and print the fitted learning-rate slopes.

    python scripts/run_rate_experiment.py plans/slow_rate_exponential.json --workers 4
"""

import argparse
import json

from rffrates.bench import ExperimentPlan, compare_schemes, fit_rate, run


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("plan")
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--out-dir", default="results")
    args = parser.parse_args()

    plan = ExperimentPlan.load(args.plan)
    results = run(plan, out_dir=args.out_dir, workers=args.workers)
    report = {"plan": plan.name, "cells": len(results)}
    if len(plan.n_grid) >= 3:
        for scheme in plan.schemes:
            for y in ("excess_zero_one", "excess_surrogate", "kernel_baseline_excess"):
                if y.startswith("kernel") and not plan.kernel_baseline:
                    continue
                try:
                    slope, _, r2 = fit_rate(results, y=y, scheme=scheme)
                except ValueError as err:  # too few positive medians to fit
                    report[f"{scheme}/{y}"] = {"error": str(err)}
                    continue
                report[f"{scheme}/{y}"] = {"slope": slope, "r2": r2}
    if set(plan.schemes) >= {"plain", "weighted"}:
        report["weighted_vs_plain"] = [row.to_dict() for row in compare_schemes(results)]
    print(json.dumps(report, indent=2, default=float))


if __name__ == "__main__":
    main()
