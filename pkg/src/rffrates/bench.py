"""Learning-curve sweeps over (n, scheme, seed) on synthetic source problems.

One reference sample per seed plays the population. The holdout is a fixed
slice of it, and the training sets for increasing ``n`` are nested prefixes of
the remainder, so a seed's learning curve is monotone in the data it sees.

Risks are averaged analytically over the label noise on the holdout inputs:
for a predictor with margins ``m`` and target ``f_H``,

* zero-one excess = ``gamma0 * P_holdout(sign m != sign f_H)`` (never negative),
* surrogate excess = noise-averaged surrogate risk of ``m`` minus that of the
  best rescaling ``c f_H``. This baseline is exact when the hypothesis class is
  invariant under the symmetry of the problem (the finite-rank regime) and an
  upper bound otherwise, so the surrogate excess can go slightly negative.
"""

from __future__ import annotations

import csv
import json
import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .diagnostics import local_rademacher_fixed_point
from .erm import Loss, SolverOptions, train_kernel, train_rff
from .errors import ConvergenceError
from .features import build_plain, build_weighted, default_pool_size, feature_matrix, gram_factor, linear_factor
from .kernels import cross_gram, gram_matrix
from .leverage import build_profile, feature_budget
from .synthdata import (REGIMES, NoiseModel, best_scaled_surrogate, expected_surrogate, expected_zero_one, label,
                        make_source_problem, regime_setup)

CSV_COLUMNS = ("n", "s", "lambda", "scheme", "seed", "excess_zero_one", "excess_surrogate",
               "kernel_baseline_excess", "kernel_baseline_surrogate", "r_star", "d_hat", "status", "wall_time")
SCHEMES = ("plain", "weighted")


@dataclass(frozen=True)
class ExperimentPlan:
    """A sweep definition. ``s_rule`` is one of::

        {"kind": "explicit", "values": [s_1, ..., s_k]}      # one per n, or a single value
        {"kind": "power_log", "c": c, "a": a, "b": b}        # ceil(c * n^a * ln(n)^b)
        {"kind": "budget", "formula": "plain" | "weighted" | "theorem", "delta": delta}

    ``lam_rule`` is ``{"c": c, "r": r}`` meaning ``lambda = c * n^(-1/(2 r))``.
    """

    regime: str
    n_grid: tuple
    s_rule: dict
    lam_rule: dict
    seeds: tuple = (0,)
    loss: str = "hinge"
    schemes: tuple = ("plain",)
    holdout: int = 2048
    reference_size: int | None = None
    gamma0: float = 0.8
    source_r: float = 1.0
    source_R: float = 1.0
    regime_dim: int | None = None
    regime_gamma: float | None = None
    kernel_baseline: bool = True
    tol: float = 1e-5
    name: str = "experiment"
    gnuplot: bool = False
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "n_grid", tuple(int(n) for n in self.n_grid))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        object.__setattr__(self, "schemes", tuple(self.schemes))
        if self.regime not in REGIMES:
            raise ValueError(f"unsupported regime {self.regime!r}")
        if not self.n_grid or any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise ValueError("n_grid must be nonempty and strictly ascending")
        if self.n_grid[0] < 2:
            raise ValueError("n must be >= 2")
        if not self.seeds:
            raise ValueError("at least one seed (trial) is required")
        if not self.schemes or any(s not in SCHEMES for s in self.schemes):
            raise ValueError(f"schemes must be drawn from {SCHEMES}")
        Loss(self.loss)
        NoiseModel(self.gamma0)
        if self.holdout < 1:
            raise ValueError("holdout must be >= 1")
        if self.reference_size is not None and self.reference_size < self.n_grid[-1] + self.holdout:
            raise ValueError("reference_size must cover the largest n plus the holdout")
        if not self.lam_rule.get("c", 0) > 0 or not 0 < self.lam_rule.get("r", 0) <= 1:
            raise ValueError("lam_rule needs c > 0 and r in (0, 1]")
        for n in self.n_grid:
            self.resolve_s(n, d_hat=1.0, kappa=1.0)

    @property
    def reference_n(self) -> int:
        return self.reference_size or self.n_grid[-1] + self.holdout

    def lam(self, n: int) -> float:
        return float(self.lam_rule["c"]) * n ** (-1.0 / (2.0 * float(self.lam_rule["r"])))

    def resolve_s(self, n: int, d_hat: float, kappa: float) -> int:
        rule = self.s_rule
        kind = rule.get("kind")
        if kind == "explicit":
            values = list(rule["values"])
            if len(values) == 1:
                s = values[0]
            elif len(values) == len(self.n_grid):
                s = values[self.n_grid.index(n)]
            else:
                raise ValueError("explicit s list must have one entry or one per n")
        elif kind == "power_log":
            s = math.ceil(float(rule.get("c", 1.0)) * n ** float(rule.get("a", 0.5))
                          * math.log(n) ** float(rule.get("b", 1.0)))
        elif kind == "budget":
            s = feature_budget(rule.get("formula", "plain"), self.lam(n), d_hat, kappa, float(rule.get("delta", 0.1)))
        else:
            raise ValueError(f"unknown s rule {kind!r}")
        s = int(s)
        if s < 1:
            raise ValueError("s rule resolved to a nonpositive feature count")
        return s

    def to_dict(self) -> dict:
        out = asdict(self)
        out["n_grid"] = list(self.n_grid)
        out["seeds"] = list(self.seeds)
        out["schemes"] = list(self.schemes)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentPlan":
        data = dict(data)
        if "trials" in data and "seeds" not in data:
            data["seeds"] = list(range(int(data.pop("trials"))))
        data.pop("trials", None)
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown plan keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def load(cls, path) -> "ExperimentPlan":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class CellResult:
    n: int
    s: int
    lam: float
    scheme: str
    seed: int
    excess_zero_one: float
    excess_surrogate: float
    kernel_baseline_excess: float
    kernel_baseline_surrogate: float
    r_star: float
    d_hat: float
    status: str = "ok"
    wall_time: float = 0.0

    def row(self) -> list:
        values = asdict(self)
        values["lambda"] = values.pop("lam")
        return [values[c] for c in CSV_COLUMNS]

    @property
    def key(self):
        return (self.n, self.scheme, self.s, self.seed)


def _rng(seed: int, *tags) -> np.random.Generator:
    return np.random.default_rng([int(seed), *[int(t) for t in tags]])


def _stream_seed(seed: int, *tags) -> int:
    return int(np.random.SeedSequence([int(seed), *[int(t) for t in tags]]).generate_state(1)[0])


def _train_spectrum(spec, X) -> np.ndarray:
    """Eigenvalues of ``K/n`` for the training sample, sorted decreasingly."""
    n = X.shape[0]
    if spec.family == "linear":
        sv = np.linalg.svd(X / math.sqrt(spec.input_dim * n), compute_uv=False)
        mu = np.zeros(n)
        mu[: sv.size] = sv**2
        return mu
    mu = np.linalg.eigvalsh(gram_matrix(spec, X) / n)
    return np.sort(np.clip(mu, 0.0, None))[::-1]


class _Problem:
    """Everything a seed's learning curve shares: reference sample, target, labels, holdout."""

    def __init__(self, plan: ExperimentPlan, seed: int):
        setup = regime_setup(plan.regime, plan.regime_dim, plan.regime_gamma)
        self.spec = setup.kernel
        N = plan.reference_n
        X = setup.sample(N, _stream_seed(seed, 1))
        self.target = make_source_problem(self.spec, N, plan.source_r, plan.source_R, _stream_seed(seed, 2), X=X)
        self.noise = NoiseModel(plan.gamma0)
        self.loss = Loss(plan.loss)
        order = _rng(seed, 3).permutation(N)
        self.hold_idx = order[: plan.holdout]
        self.train_order = order[plan.holdout:]
        self.y = label(self.target, self.noise, np.arange(N), _stream_seed(seed, 4)).astype(float)
        self.X = X
        self.f_hold = self.target.f_vals[self.hold_idx]
        self.X_hold = X[self.hold_idx]
        self.surrogate_floor, _ = best_scaled_surrogate(self.f_hold, self.noise, self.loss)

    def excess(self, margins) -> tuple[float, float]:
        zero_one = expected_zero_one(margins, self.f_hold, self.noise) - self.noise.bayes_risk
        surrogate = expected_surrogate(margins, self.f_hold, self.noise, self.loss) - self.surrogate_floor
        return zero_one, surrogate


def _fit_rff(problem: _Problem, fmap, X_train, y, lam, opts):
    """Train on the features (or their compressed Gram factor) and return holdout margins."""
    if fmap.kernel.family == "linear":
        C = linear_factor(fmap)
        model = train_rff(X_train @ C, y, problem.loss, lam, opts)
        return problem.X_hold @ (C @ model.coefficients)
    model = train_rff(feature_matrix(fmap, X_train), y, problem.loss, lam, opts)
    return feature_matrix(fmap, problem.X_hold) @ model.coefficients


def _run_seed(plan: ExperimentPlan, seed: int) -> list[CellResult]:
    problem = _Problem(plan, seed)
    spec = problem.spec
    opts = SolverOptions(tol=plan.tol, seed=seed)
    out = []
    for n in plan.n_grid:
        start = time.perf_counter()
        idx = problem.train_order[:n]
        X_train, y = problem.X[idx], problem.y[idx]
        lam = plan.lam(n)
        mu = _train_spectrum(spec, X_train)
        d_hat = float(np.sum(mu / (mu + lam)))
        r_star, _ = local_rademacher_fixed_point(mu, n)
        K = None
        base01 = base_sur = float("nan")
        status_base = "ok"
        if plan.kernel_baseline or "weighted" in plan.schemes:
            K = gram_matrix(spec, X_train)
        if plan.kernel_baseline:
            try:
                model = train_kernel(K, y, problem.loss, lam, opts)
                base01, base_sur = problem.excess(cross_gram(spec, problem.X_hold, X_train) @ model.coefficients)
            except ConvergenceError as err:
                status_base = f"kernel_baseline_failed: {err}"
        shared = time.perf_counter() - start
        for scheme_id, scheme in enumerate(plan.schemes):
            t0 = time.perf_counter()
            s = plan.resolve_s(n, d_hat, spec.kappa)
            fseed = _stream_seed(seed, 5, n, scheme_id)
            status = status_base
            e01 = esur = float("nan")
            try:
                if scheme == "plain":
                    fmap = build_plain(spec, s, fseed)
                else:
                    profile = build_profile(spec, X_train, lam, default_pool_size(s), _stream_seed(seed, 6, n), K=K)
                    fmap = build_weighted(spec, s, profile, fseed)
                e01, esur = problem.excess(_fit_rff(problem, fmap, X_train, y, lam, opts))
            except ConvergenceError as err:
                status = f"convergence_failure: {err}"
            out.append(CellResult(n, s, lam, scheme, seed, e01, esur, base01, base_sur, r_star, d_hat, status,
                                  shared + time.perf_counter() - t0))
    return out


def _run_seed_job(args):
    plan, seed = args
    return _run_seed(plan, seed)


def run(plan: ExperimentPlan, out_dir=None, workers: int = 1) -> list[CellResult]:
    """Execute every (n, scheme, seed) cell; write CSV, JSON summary and optional gnuplot files.

    Results are sorted by (n, scheme, s, seed) regardless of scheduling, so
    outputs other than ``wall_time`` are identical across reruns and worker counts.
    """
    jobs = [(plan, seed) for seed in plan.seeds]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_run_seed_job, jobs))
    else:
        chunks = [_run_seed_job(job) for job in jobs]
    results = sorted((c for chunk in chunks for c in chunk), key=lambda c: c.key)
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        write_results_csv(results, out_dir / f"{plan.name}.csv")
        (out_dir / f"{plan.name}_summary.json").write_text(json.dumps(summarize(results, plan), indent=2) + "\n")
        if plan.gnuplot:
            write_gnuplot(results, out_dir, plan.name)
    return results


def write_results_csv(results, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for cell in results:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in cell.row()])


def read_results_csv(path) -> list[CellResult]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise ValueError(f"unexpected CSV columns {reader.fieldnames}")
        out = []
        for row in reader:
            out.append(CellResult(int(row["n"]), int(row["s"]), float(row["lambda"]), row["scheme"], int(row["seed"]),
                                  float(row["excess_zero_one"]), float(row["excess_surrogate"]),
                                  float(row["kernel_baseline_excess"]), float(row["kernel_baseline_surrogate"]),
                                  float(row["r_star"]), float(row["d_hat"]), row["status"], float(row["wall_time"])))
    return out


def _value(cell, name):
    if isinstance(cell, dict):
        return cell["lambda"] if name == "lam" else cell[name]
    return getattr(cell, "lam" if name == "lambda" else name)


def _groups(results, keys):
    groups: dict = {}
    for cell in results:
        groups.setdefault(tuple(_value(cell, k) for k in keys), []).append(cell)
    return groups


def summarize(results, plan: ExperimentPlan | None = None) -> dict:
    metrics = ("excess_zero_one", "excess_surrogate", "kernel_baseline_excess", "kernel_baseline_surrogate",
               "r_star", "d_hat", "wall_time")
    cells = []
    for (n, scheme, s), group in sorted(_groups(results, ("n", "scheme", "s")).items()):
        entry = {"n": n, "scheme": scheme, "s": s, "lambda": _value(group[0], "lam"), "trials": len(group),
                 "failures": sum(_value(c, "status") != "ok" for c in group)}
        for m in metrics:
            vals = np.array([_value(c, m) for c in group], dtype=float)
            vals = vals[np.isfinite(vals)]
            entry[f"median_{m}"] = float(np.median(vals)) if vals.size else None
        cells.append(entry)
    out = {"cells": cells}
    if plan is not None:
        out["plan"] = plan.to_dict()
    return out


def fit_rate(results, x: str = "n", y: str = "excess_zero_one", scheme: str | None = None):
    """Least-squares fit of ``log(median y)`` on ``log(x)``; returns ``(slope, intercept, r2)``.

    ``results`` may be cell results, dicts, or a mapping ``{x_value: [y values]}``.
    Points whose median is not positive are excluded with a warning.
    """
    if isinstance(results, dict):
        medians = {float(k): float(np.median(np.asarray(v, dtype=float))) for k, v in results.items()}
    else:
        if scheme is not None:
            results = [c for c in results if _value(c, "scheme") == scheme]
        medians = {}
        for (xv,), group in _groups(results, (x,)).items():
            vals = np.array([_value(c, y) for c in group], dtype=float)
            vals = vals[np.isfinite(vals)]
            if vals.size:
                medians[float(xv)] = float(np.median(vals))
    dropped = sorted(k for k, v in medians.items() if not v > 0)
    if dropped:
        warnings.warn(f"excluded {x} values with nonpositive median {y}: {dropped}")
    points = sorted((k, v) for k, v in medians.items() if v > 0 and k > 0)
    if len(points) < 3:
        raise ValueError(f"need at least 3 usable points to fit a rate, got {len(points)}")
    lx = np.log([p[0] for p in points])
    ly = np.log([p[1] for p in points])
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2


@dataclass(frozen=True)
class SchemeComparison:
    n: int
    s: int
    trials: int
    median_weighted: float
    median_plain: float
    ratio: float
    lower: float
    upper: float

    def to_dict(self) -> dict:
        return asdict(self)


def _median_ratio(w, p):
    mp = float(np.median(p))
    mw = float(np.median(w))
    if mp == 0:
        return 1.0 if mw == 0 else math.inf
    return mw / mp


def compare_schemes(results, y: str = "excess_zero_one", resamples: int = 200, level: float = 0.9,
                    seed: int = 0) -> list[SchemeComparison]:
    """Median ``y`` ratio weighted/plain per matched (n, s) cell with a paired bootstrap interval.

    Trials are paired by seed; the bootstrap resamples seeds with replacement.
    """
    rng = np.random.default_rng(seed)
    by_cell = _groups(results, ("n", "s"))
    out = []
    alpha = (1.0 - level) / 2.0
    for (n, s), group in sorted(by_cell.items()):
        plain = {_value(c, "seed"): _value(c, y) for c in group if _value(c, "scheme") == "plain"}
        weighted = {_value(c, "seed"): _value(c, y) for c in group if _value(c, "scheme") == "weighted"}
        seeds = sorted(k for k in set(plain) & set(weighted)
                       if np.isfinite(plain[k]) and np.isfinite(weighted[k]))
        if not seeds:
            warnings.warn(f"cell n={n}, s={s} lacks matched plain and weighted trials; skipped")
            continue
        p = np.array([plain[k] for k in seeds], dtype=float)
        w = np.array([weighted[k] for k in seeds], dtype=float)
        boot = np.empty(resamples)
        for b in range(resamples):
            pick = rng.integers(0, len(seeds), len(seeds))
            boot[b] = _median_ratio(w[pick], p[pick])
        lo, hi = np.quantile(boot, [alpha, 1.0 - alpha])
        out.append(SchemeComparison(int(n), int(s), len(seeds), float(np.median(w)), float(np.median(p)),
                                    _median_ratio(w, p), float(lo), float(hi)))
    return out


def write_gnuplot(results, out_dir, name: str) -> None:
    """Median learning curves as a whitespace table plus a gnuplot script that plots them."""
    out_dir = Path(out_dir)
    schemes = sorted({_value(c, "scheme") for c in results})
    cols = [(sch, m) for sch in schemes for m in ("excess_zero_one", "excess_surrogate")]
    cols += [("kernel", "kernel_baseline_excess")]
    lines = ["# n " + " ".join(f"{a}:{b}" for a, b in cols)]
    for n in sorted({_value(c, "n") for c in results}):
        row = [str(n)]
        for sch, m in cols:
            sel = [c for c in results if _value(c, "n") == n and (sch == "kernel" or _value(c, "scheme") == sch)]
            vals = np.array([_value(c, m) for c in sel], dtype=float)
            vals = vals[np.isfinite(vals)]
            row.append(repr(float(np.median(vals))) if vals.size else "NaN")
        lines.append(" ".join(row))
    (out_dir / f"{name}.dat").write_text("\n".join(lines) + "\n")
    plots = ", ".join(f"'{name}.dat' using 1:{i + 2} with linespoints title '{a} {b}'" for i, (a, b) in enumerate(cols))
    script = ["set logscale xy", "set xlabel 'n'", "set ylabel 'median excess risk'", "set key left bottom",
              "set terminal pngcairo size 900,600", f"set output '{name}.png'", f"plot {plots}"]
    (out_dir / f"{name}.gp").write_text("\n".join(script) + "\n")
