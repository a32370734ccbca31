"""Replication harness for coupled Q_eps experiments.

Replication ``r`` of an experiment draws its stream from
:func:`epsmiss.dist.stream_seed` on ``(master_seed, experiment_id, r)``, and
results are gathered by replication index. Output is therefore identical for
any thread count.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import dist, qsim
from .brownian import PathConfig, simulate_q
from .edgeworth import gaussian_tail_integral, tail_bound

Z95 = 1.959963984540054

CSV_HEADER = (
    "experiment_id",
    "epsilon",
    "n_reps",
    "mean",
    "std_error",
    "ci_lo",
    "ci_hi",
    "target",
    "truncation_bound",
    "master_seed",
)

RESULTS_DIR_ENV = "EPSMISS_RESULTS_DIR"


class BudgetExceededError(RuntimeError):
    pass


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    n_reps: int
    ci95: tuple
    truncation_bound_total: float
    master_seed: int
    experiment_id: str
    epsilon: Optional[float] = None
    target: Optional[float] = None

    @property
    def seed_lineage(self):
        return (self.master_seed, self.experiment_id)

    def contains(self, value: float) -> bool:
        return self.ci95[0] <= value <= self.ci95[1]


def summarize(values, *, master_seed, experiment_id, epsilon=None, target=None,
              truncation_bound=0.0) -> McEstimate:
    """Mean, standard error and normal 95% interval of replication values."""
    x = np.asarray(values, dtype=float)
    if x.size < 2:
        raise ValueError("need at least two replications")
    mean = float(np.mean(x))
    se = float(np.std(x, ddof=1) / math.sqrt(x.size))
    return McEstimate(mean, se, int(x.size), (mean - Z95 * se, mean + Z95 * se),
                      float(truncation_bound), int(master_seed), str(experiment_id),
                      epsilon, target)


def replicate(fn, n_reps: int, master_seed: int, experiment_id, threads: int = 1):
    """``[fn(seed_r) for r in range(n_reps)]`` with per-replication seeds."""
    seeds = [dist.stream_seed(master_seed, experiment_id, r) for r in range(n_reps)]
    if threads <= 1:
        return [fn(s) for s in seeds]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, seeds))


def coupled_counts(families: Sequence, g, config: qsim.QConfig, n_reps: int,
                   master_seed: int, experiment_id, threads: int = 1) -> np.ndarray:
    """(n_reps, len(families)) miss counts, all families sharing each stream."""
    families = list(families)

    def one(seed):
        return qsim.count_many(families, g, config, seed)[0]

    return np.array(replicate(one, n_reps, master_seed, experiment_id, threads))


def pair_tail_bound(families, g, config) -> float:
    sig = max(f.sigma_limit(g) for f in families)
    _, n_max = config.window(sig)
    return len(families) * tail_bound(n_max * config.epsilon**2, sig, config.epsilon)


@dataclass
class ExperimentPlan:
    generator: object
    f1: object
    f2: object
    epsilon_grid: Sequence[float]
    cutoff_rule: str = "shrinking"
    a: Optional[float] = None
    n_reps: int = 2000
    master_seed: int = 20240611
    experiment_id: str = "ard"
    closed_form_target: Optional[float] = None
    threads: int = 1
    max_total_steps: int = 4_000_000_000

    def __post_init__(self):
        grid = [float(e) for e in self.epsilon_grid]
        if not grid:
            raise ValueError("epsilon_grid is empty")
        if any(b >= a for a, b in zip(grid, grid[1:])):
            raise ValueError("epsilon_grid must be strictly decreasing")
        if self.n_reps < 2:
            raise ValueError("n_reps must be >= 2")
        self.epsilon_grid = grid

    def config(self, eps) -> qsim.QConfig:
        return qsim.QConfig(eps, self.cutoff_rule, self.a)

    def to_dict(self) -> dict:
        return {
            "generator": dist.generator_to_config(self.generator),
            "f1": qsim.family_to_config(self.f1),
            "f2": qsim.family_to_config(self.f2),
            "epsilon_grid": list(self.epsilon_grid),
            "cutoff_rule": self.cutoff_rule,
            "a": self.a,
            "n_reps": self.n_reps,
            "master_seed": self.master_seed,
            "experiment_id": self.experiment_id,
            "closed_form_target": self.closed_form_target,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentPlan":
        obj = dict(obj)
        obj["generator"] = dist.generator_from_config(obj["generator"])
        obj["f1"] = qsim.family_from_config(obj["f1"])
        obj["f2"] = qsim.family_from_config(obj["f2"])
        return cls(**obj)


@dataclass(frozen=True)
class ConvergenceSummary:
    status: str
    extrapolated: float
    extrapolated_se: float
    smallest_eps_contains_target: Optional[bool]
    monotone_toward_target: Optional[bool]


@dataclass
class ExperimentResult:
    plan: dict
    estimates: list
    summary: ConvergenceSummary
    crn_ratio: Optional[float] = None
    extra: dict = field(default_factory=dict)


def _extrapolate(eps, means, ses, rate="sqrt"):
    eps, means, ses = map(np.asarray, (eps, means, ses))
    if eps.size == 1:
        return float(means[0]), float(ses[0])
    w = 1.0 / np.where(ses > 0, ses, 1.0) ** 2
    x = np.sqrt(eps) if rate == "sqrt" else eps
    design = np.column_stack([np.ones_like(x), x])
    xtw = design.T * w
    cov = np.linalg.pinv(xtw @ design)
    coef = cov @ (xtw @ means)
    se = math.sqrt(max(cov[0, 0], 0.0)) if np.any(ses > 0) else 0.0
    return float(coef[0]), se


def convergence_summary(estimates, target: Optional[float], rate="sqrt") -> ConvergenceSummary:
    """Extrapolation to eps -> 0 plus a CI and monotone-trend verdict.

    The fit is linear in sqrt(eps) (``rate="sqrt"``): under the shrinking
    cutoff a(eps) = eps the leading correction to the limit is O(sqrt(a)).
    ``rate="linear"`` fits in eps instead.

    The trend check tolerates noise: the distance to the target may grow
    between consecutive eps only by less than 1.96 joint standard errors.
    """
    eps = [e.epsilon for e in estimates]
    means = [e.mean for e in estimates]
    ses = [e.std_error for e in estimates]
    ext, ext_se = _extrapolate(eps, means, ses, rate)
    if target is None:
        return ConvergenceSummary("NO_TARGET", ext, ext_se, None, None)
    last = estimates[-1]
    contains = last.contains(target) or (last.std_error == 0 and last.mean == target)
    monotone = True
    for prev, cur in zip(estimates, estimates[1:]):
        slack = Z95 * math.hypot(prev.std_error, cur.std_error)
        if abs(cur.mean - target) > abs(prev.mean - target) + slack:
            monotone = False
    status = "PASS" if contains and monotone else "FAIL"
    return ConvergenceSummary(status, ext, ext_se, contains, monotone)


def run_ard_experiment(plan: ExperimentPlan) -> ExperimentResult:
    """CRN-coupled estimates of E{Q(f1) - Q(f2)} along the eps grid."""
    g = plan.generator
    qsim.check_coupled(plan.f1, plan.f2, g)
    families = [plan.f1, plan.f2]
    estimates = []
    for eps in plan.epsilon_grid:
        config = plan.config(eps)
        _, n_max, _ = qsim._resolve(families, g, config)
        if n_max * plan.n_reps > plan.max_total_steps:
            raise BudgetExceededError(
                f"eps = {eps}: {plan.n_reps} x {n_max} steps exceed {plan.max_total_steps}"
            )
        exp_id = f"{plan.experiment_id}/eps={eps!r}"
        if plan.f1 == plan.f2:
            diffs = np.zeros(plan.n_reps)
        else:
            counts = coupled_counts(families, g, config, plan.n_reps, plan.master_seed,
                                    exp_id, plan.threads)
            diffs = counts[:, 0] - counts[:, 1]
        estimates.append(summarize(
            diffs, master_seed=plan.master_seed, experiment_id=plan.experiment_id,
            epsilon=eps, target=plan.closed_form_target,
            truncation_bound=pair_tail_bound(families, g, config),
        ))
    summary = convergence_summary(estimates, plan.closed_form_target)
    return ExperimentResult(plan.to_dict(), estimates, summary)


def crn_efficiency(f1, f2, g, config: qsim.QConfig, n_reps: int, master_seed: int,
                   experiment_id="crn", threads: int = 1):
    """Coupled vs independently-seeded estimates of E{Q(f1) - Q(f2)}.

    Returns ``(coupled, independent, ratio)`` where ``ratio`` is the coupled
    standard error over the independent one.
    """
    qsim.check_coupled(f1, f2, g)
    both = coupled_counts([f1, f2], g, config, n_reps, master_seed, experiment_id, threads)
    other = coupled_counts([f2], g, config, n_reps, master_seed, f"{experiment_id}/indep",
                           threads)[:, 0]
    bound = pair_tail_bound([f1, f2], g, config)
    coupled = summarize(both[:, 0] - both[:, 1], master_seed=master_seed,
                        experiment_id=experiment_id, epsilon=config.epsilon,
                        truncation_bound=bound)
    a, b = both[:, 0].astype(float), other.astype(float)
    mean = float(a.mean() - b.mean())
    se = math.hypot(a.std(ddof=1), b.std(ddof=1)) / math.sqrt(n_reps)
    independent = McEstimate(mean, se, n_reps, (mean - Z95 * se, mean + Z95 * se), bound,
                             master_seed, f"{experiment_id}/indep", config.epsilon)
    ratio = coupled.std_error / se if se > 0 else math.nan
    return coupled, independent, ratio


def run_qlaw_experiment(paths: int, config: PathConfig, threads: int = 1) -> McEstimate:
    """Monte Carlo mean of the occupation functional Q."""
    if paths < 2:
        raise ValueError("need at least two paths")

    def one(seed):
        return simulate_q(config, seed).q

    qs = replicate(one, paths, config.seed, "qlaw", threads)
    return summarize(qs, master_seed=config.seed, experiment_id="qlaw",
                     target=config.sigma**2,
                     truncation_bound=gaussian_tail_integral(config.T, config.sigma))


def default_results_dir() -> Path:
    return Path(os.environ.get(RESULTS_DIR_ENV, "results"))


def _estimate_from_json(obj):
    obj = dict(obj)
    obj["ci95"] = tuple(obj["ci95"])
    return McEstimate(**obj)


def result_to_json(result: ExperimentResult) -> dict:
    return {
        "plan": result.plan,
        "estimates": [asdict(e) for e in result.estimates],
        "summary": asdict(result.summary),
        "crn_ratio": result.crn_ratio,
        "extra": result.extra,
    }


def result_from_json(obj: dict) -> ExperimentResult:
    return ExperimentResult(
        plan=obj["plan"],
        estimates=[_estimate_from_json(e) for e in obj["estimates"]],
        summary=ConvergenceSummary(**obj["summary"]),
        crn_ratio=obj.get("crn_ratio"),
        extra=obj.get("extra") or {},
    )


def _csv_cell(x):
    return "" if x is None else repr(x) if isinstance(x, float) else str(x)


def write_csv(estimates, path) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for e in estimates:
            writer.writerow([_csv_cell(v) for v in (
                e.experiment_id, e.epsilon, e.n_reps, e.mean, e.std_error,
                e.ci95[0], e.ci95[1], e.target, e.truncation_bound_total, e.master_seed,
            )])
    return path


def read_csv(path) -> list:
    def num(s, cast=float):
        return None if s == "" else cast(s)

    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != CSV_HEADER:
            raise ValueError(f"{path}: unexpected CSV header {header}")
        out = []
        for row in reader:
            r = dict(zip(CSV_HEADER, row))
            out.append(McEstimate(
                mean=float(r["mean"]), std_error=float(r["std_error"]),
                n_reps=int(r["n_reps"]), ci95=(float(r["ci_lo"]), float(r["ci_hi"])),
                truncation_bound_total=float(r["truncation_bound"]),
                master_seed=int(r["master_seed"]), experiment_id=r["experiment_id"],
                epsilon=num(r["epsilon"]), target=num(r["target"]),
            ))
    return out


def persist_results(result: ExperimentResult, path):
    """Write ``<path>.json`` (full metadata) and ``<path>.csv`` (flat table).

    Returns the two paths written.
    """
    base = Path(path)
    if base.suffix in (".json", ".csv"):
        base = base.with_suffix("")
    try:
        base.parent.mkdir(parents=True, exist_ok=True)
        json_path = base.with_suffix(".json")
        with open(json_path, "w") as fh:
            json.dump(result_to_json(result), fh, indent=2)
        csv_path = write_csv(result.estimates, base.with_suffix(".csv"))
    except OSError as exc:
        raise OSError(f"could not persist results to {base}: {exc}") from exc
    return json_path, csv_path


def load_results(path) -> ExperimentResult:
    path = Path(path)
    if path.suffix != ".json":
        path = path.with_suffix(".json")
    try:
        with open(path) as fh:
            return result_from_json(json.load(fh))
    except OSError as exc:
        raise OSError(f"could not load results from {path}: {exc}") from exc


def _single_target(f, g):
    from . import ard

    if isinstance(f, qsim.ShrinkMean):
        return ard.lambda0(f.c, f.d, dist.generator_spec(g)).value
    if isinstance(f, qsim.Transformed):
        h = ard.TransformSpec(f.h)
        return ard.lambda0_transformed(f.base.c, f.base.d, dist.generator_spec(g), h).value
    if isinstance(f, qsim.VarianceDenom):
        if not isinstance(g, dist.Normal):
            return None
        tag = {"variance": "identity", "sd": "sqrt", "log": "log"}[f.scale]
        return ard.lambda0_transformed(f.c, 0.0, ard.CHI2_1, ard.TransformSpec(tag)).value
    if isinstance(f, qsim.SquaredMean):
        if not isinstance(g, dist.Normal) or g.mu == 0:
            return None
        return ard.lambda0_squared_mean(f.d, dist.generator_spec(g)).value
    return None


def closed_form_target(f1, f2, g) -> Optional[float]:
    """Limit of E{Q(f1) - Q(f2)} from the closed forms, when one applies.

    Each family's deficiency is taken against its own baseline (c = 0 or
    d = 0), so the pair's limit is the difference of the two.
    """
    t1, t2 = _single_target(f1, g), _single_target(f2, g)
    if t1 is None or t2 is None:
        return None
    return t1 - t2
