"""Command-line entry point: ``rffrates run|fit|compare|spectrum``.

Every command prints JSON on stdout. Failures exit with status 1 and print
``{"error": <type>, "message": <text>}``.
"""

from __future__ import annotations

import json
import sys
from dataclasses import replace
from pathlib import Path

import click
import numpy as np

from . import bench
from .diagnostics import gram_spectrum
from .kernels import KernelSpec, gram_matrix
from .synthdata import read_dataset_csv


def _emit(payload) -> None:
    click.echo(json.dumps(payload, indent=2, default=float))


def _fail(err: Exception) -> None:
    click.echo(json.dumps({"error": type(err).__name__, "message": str(err)}))
    sys.exit(1)


@click.group()
def main():
    """Random Fourier feature classification experiments."""


@main.command()
@click.option("--plan", "plan_path", required=True, type=click.Path(dir_okay=False))
@click.option("--seed", type=int, default=None, help="Run a single trial with this seed instead of the plan's seeds.")
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--out-dir", type=click.Path(file_okay=False), default="results", show_default=True)
def run(plan_path, seed, workers, out_dir):
    """Execute an experiment plan and write CSV and summary JSON."""
    try:
        plan = bench.ExperimentPlan.load(plan_path)
        if seed is not None:
            plan = replace(plan, seeds=(seed,))
        results = bench.run(plan, out_dir=out_dir, workers=workers)
        failures = sum(c.status != "ok" for c in results)
        _emit({"cells": len(results), "failures": failures,
               "csv": str(Path(out_dir) / f"{plan.name}.csv"),
               "summary": str(Path(out_dir) / f"{plan.name}_summary.json")})
    except Exception as err:  # noqa: BLE001 - every failure becomes an error payload
        _fail(err)


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--y", "y_col", default="excess_zero_one", show_default=True)
@click.option("--x", "x_col", default="n", show_default=True)
@click.option("--scheme", default=None)
def fit(input_path, y_col, x_col, scheme):
    """Fit a log-log learning-rate slope to per-n medians of a results CSV."""
    try:
        results = bench.read_results_csv(input_path)
        slope, intercept, r2 = bench.fit_rate(results, x=x_col, y=y_col, scheme=scheme)
        _emit({"x": x_col, "y": y_col, "scheme": scheme, "slope": slope, "intercept": intercept, "r2": r2})
    except Exception as err:  # noqa: BLE001
        _fail(err)


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--y", "y_col", default="excess_zero_one", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True, help="Bootstrap seed.")
def compare(input_path, y_col, seed):
    """Weighted/plain median ratios with bootstrap intervals."""
    try:
        rows = bench.compare_schemes(bench.read_results_csv(input_path), y=y_col, seed=seed)
        _emit({"y": y_col, "cells": [r.to_dict() for r in rows]})
    except Exception as err:  # noqa: BLE001
        _fail(err)


@main.command()
@click.option("--dataset", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--lambda", "lam", required=True, type=float)
@click.option("--kernel", "family", default="gaussian", show_default=True)
@click.option("--bandwidth", default=1.0, show_default=True, type=float)
@click.option("--out-dir", type=click.Path(file_okay=False), default=None,
              help="Also write the eigenvalues as CSV here.")
def spectrum(dataset, lam, family, bandwidth, out_dir):
    """Spectrum decay class, fixed point and effective dimension of a CSV dataset."""
    try:
        X, _, _ = read_dataset_csv(dataset)
        spec = KernelSpec(family, bandwidth, X.shape[1])
        if not lam > 0:
            raise ValueError("lambda must be positive")
        report = gram_spectrum(gram_matrix(spec, X))
        mu = report.eigenvalues
        payload = {"n": int(X.shape[0]), "kernel": spec.to_dict(), "lambda": lam,
                   "d_hat": float(np.sum(mu / (mu + lam))), "decay_class": report.decay_class,
                   "decay_param": report.decay_param, "r2": report.r2, "r_star": report.r_star,
                   "h_star": report.h_star, "top_eigenvalues": np.asarray(mu[:10]).tolist()}
        if out_dir is not None:
            Path(out_dir).mkdir(parents=True, exist_ok=True)
            report.write_csv(Path(out_dir) / "spectrum.csv")
        _emit(payload)
    except Exception as err:  # noqa: BLE001
        _fail(err)


if __name__ == "__main__":
    main()
