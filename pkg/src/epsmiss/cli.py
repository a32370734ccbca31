"""Command-line front end.

Exit codes: 0 success, 1 experiment FAIL against its closed-form target (or
a runtime/IO failure), 2 usage error. Results go to ``--out`` or to the
directory named by ``EPSMISS_RESULTS_DIR`` (default ``./results``).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import ard, brownian, dist, mc, qsim

DEFAULT_SEED = 20240611


class UsageError(Exception):
    pass


def _grid(text):
    try:
        lo, hi, step = (float(x) for x in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected start:stop:step, got {text!r}") from None
    if not step > 0 or hi < lo:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}")
    k = int(math.floor((hi - lo) / step + 1e-9))
    return [lo + i * step for i in range(k + 1)]


def _float_list(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _add_dist_args(p):
    p.add_argument("--dist", help="generator: normal, exp1, exponential, chisq1, bernoulli, "
                                  "smoothed-bernoulli")
    p.add_argument("--mu", type=float, help="normal mean (default 0)")
    p.add_argument("--sigma", type=float, help="normal sd, or sigma of a custom moment spec")
    p.add_argument("--theta", type=float, help="exponential mean (default 1)")
    p.add_argument("--p", type=float, help="success probability")
    p.add_argument("--eta", type=float, help="smoothing half-width (default 0.01)")


def _generator(args):
    name = (args.dist or "").lower()
    params = {}
    if name in ("normal", "norm"):
        params = {"mu": args.mu if args.mu is not None else getattr(args, "xi", None) or 0.0,
                  "sigma": args.sigma if args.sigma is not None else 1.0}
    elif name in ("exponential", "exp"):
        params = {"theta": args.theta if args.theta is not None else 1.0}
    elif name in ("bernoulli",):
        params = {"p": args.p if args.p is not None else 0.5}
    elif name in ("smoothed-bernoulli", "smoothed_bernoulli"):
        params = {"p": args.p if args.p is not None else 0.5,
                  "eta": args.eta if args.eta is not None else 0.01}
    return dist.generator_from_config({"family": name, "params": params})


def _moment_spec(args):
    if args.dist:
        return dist.generator_spec(_generator(args))
    if args.xi is None:
        raise UsageError("give --dist or --xi/--sigma/--gamma")
    return dist.MomentSpec(args.xi, args.sigma if args.sigma is not None else 1.0,
                           args.gamma or 0.0)


def _out_base(args, default_name):
    if args.out:
        return Path(args.out)
    return mc.default_results_dir() / default_name


def _write_rows(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return path


# ---------------------------------------------------------------- ard-closed

def cmd_ard_closed(args):
    name = args.formula.replace("-", "_").lower()
    fn = ard.formula(name)
    if name == "binomial":
        if args.p is None:
            raise UsageError("binomial needs --p")
        d = args.d if args.d is not None else 0.5
        curve = lambda c: fn(c, d, args.p).value  # noqa: E731
        var = "c"
    elif name == "squared_mean":
        spec = _moment_spec(args)
        curve = lambda d: fn(d, spec).value  # noqa: E731
        var = "d"
    else:
        spec = _moment_spec(args)
        d = args.d if args.d is not None else 0.0
        if name == "lambda0":
            curve = lambda c: fn(c, d, spec).value  # noqa: E731
        elif name == "hl":
            curve = lambda c: fn(c, d, spec).value  # noqa: E731
        elif name == "lambda0_transformed":
            h = ard.TransformSpec(args.h or "identity", args.h_ratio)
            curve = lambda c: fn(c, d, spec, h).value  # noqa: E731
        else:
            if args.a is None:
                raise UsageError("lambda_a needs --a")
            curve = lambda c: fn(c, spec, args.a, d).value  # noqa: E731
        var = "c"

    single = args.c if var == "c" else args.d
    if single is not None and not (var == "d" and args.d_grid):
        grid = [single]
    elif var == "c":
        grid = args.c_grid or _grid("0:1:0.05")
    else:
        grid = args.d_grid or _grid("-2:1:0.05")
    rows = [(x, curve(x)) for x in grid]
    vertex = ard.argmin_c(curve)

    path = _write_rows(_out_base(args, f"ard_closed_{name}").with_suffix(".csv"),
                       (var, "value"), rows)
    print(f"{var:>10}  value")
    for x, v in rows:
        print(f"{x:10.4f}  {v: .6f}")
    if vertex.unbounded:
        print(f"argmin: unbounded below (slope {vertex.slope:g}, leading coefficient "
              f"{vertex.lead:g})")
    else:
        print(f"argmin: {var}0 = {vertex.c0:.10g}, value = {vertex.value:.10g}")
    print(f"table written to {path}")
    return 0


# -------------------------------------------------------------------- ard-mc

PRESETS = {
    "exp-mean": dict(generator={"family": "exponential", "params": {"theta": 1.0}},
                     f1={"kind": "shrink_mean", "c": 1 / 3, "d": 0.0},
                     f2={"kind": "shrink_mean", "c": 0.0, "d": 0.0},
                     epsilon_grid=[0.1, 0.05, 0.02], n_reps=2000),
    "normal-variance": dict(generator={"family": "normal", "params": {"mu": 0.0, "sigma": 1.0}},
                            f1={"kind": "variance_denom", "c": 2 / 3, "scale": "variance"},
                            f2={"kind": "variance_denom", "c": 0.0, "scale": "variance"},
                            epsilon_grid=[0.1, 0.05, 0.02], n_reps=500),
    "normal-sd": dict(generator={"family": "normal", "params": {"mu": 0.0, "sigma": 1.0}},
                      f1={"kind": "variance_denom", "c": 1 / 6, "scale": "sd"},
                      f2={"kind": "variance_denom", "c": 0.0, "scale": "sd"},
                      epsilon_grid=[0.1, 0.05, 0.02], n_reps=500),
    "normal-sd-log": dict(generator={"family": "normal", "params": {"mu": 0.0, "sigma": 1.0}},
                          f1={"kind": "variance_denom", "c": -1 / 3, "scale": "log"},
                          f2={"kind": "variance_denom", "c": 0.0, "scale": "log"},
                          epsilon_grid=[0.1, 0.05, 0.02], n_reps=500),
    "squared-mean-known": dict(generator={"family": "normal", "params": {"mu": 1.0, "sigma": 1.0}},
                               f1={"kind": "squared_mean", "d": -1.0, "variance_mode": "known"},
                               f2={"kind": "squared_mean", "d": 0.0, "variance_mode": "known"},
                               epsilon_grid=[0.1, 0.05], n_reps=2000),
    "squared-mean-unknown": dict(generator={"family": "normal", "params": {"mu": 1.0, "sigma": 1.0}},
                                 f1={"kind": "squared_mean", "d": -1.0, "variance_mode": "unbiased"},
                                 f2={"kind": "squared_mean", "d": 0.0, "variance_mode": "unbiased"},
                                 epsilon_grid=[0.1, 0.05], n_reps=2000),
    "binomial-smoothed": dict(generator={"family": "smoothed_bernoulli",
                                         "params": {"p": 0.5, "eta": 0.01}},
                              f1={"kind": "shrink_mean", "c": 4 / 3, "d": 0.5},
                              f2={"kind": "shrink_mean", "c": 0.0, "d": 0.0},
                              epsilon_grid=[0.1, 0.05], n_reps=2000),
    "bayes-normal": dict(generator={"family": "normal", "params": {"mu": 0.5, "sigma": 1.0}},
                         f1={"kind": "shrink_mean", "c": 1.0, "d": 0.0},
                         f2={"kind": "shrink_mean", "c": 0.0, "d": 0.0},
                         epsilon_grid=[0.1, 0.05, 0.02], n_reps=2000),
}


def _family_pair(args):
    kind = (args.family or "shrink-mean").replace("-", "_")
    c1, c2 = args.c1 or 0.0, args.c2 or 0.0
    d1, d2 = args.d1 or 0.0, args.d2 or 0.0
    if kind == "shrink_mean":
        return ({"kind": "shrink_mean", "c": c1, "d": d1},
                {"kind": "shrink_mean", "c": c2, "d": d2})
    if kind in ("variance", "sd", "log"):
        return ({"kind": "variance_denom", "c": c1, "scale": kind},
                {"kind": "variance_denom", "c": c2, "scale": kind})
    if kind in ("squared_known", "squared_unknown"):
        mode = "known" if kind == "squared_known" else "unbiased"
        return ({"kind": "squared_mean", "d": d1, "variance_mode": mode},
                {"kind": "squared_mean", "d": d2, "variance_mode": mode})
    if kind == "transformed":
        h = args.h or "identity"
        return ({"kind": "transformed", "base": {"kind": "shrink_mean", "c": c1, "d": d1}, "h": h},
                {"kind": "transformed", "base": {"kind": "shrink_mean", "c": c2, "d": d2}, "h": h})
    raise UsageError(f"unknown family {args.family!r}")


def _build_plan(args):
    plan = {}
    if args.preset:
        if args.preset not in PRESETS:
            raise UsageError(f"unknown preset {args.preset!r}; known: {', '.join(PRESETS)}")
        plan.update(json.loads(json.dumps(PRESETS[args.preset])))
        plan["experiment_id"] = args.preset
    if args.config:
        try:
            with open(args.config) as fh:
                plan.update(json.load(fh))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
    if args.dist:
        plan["generator"] = dist.generator_to_config(_generator(args))
    if any(v is not None for v in (args.family, args.c1, args.c2, args.d1, args.d2)) \
            or "f1" not in plan:
        plan["f1"], plan["f2"] = _family_pair(args)
    if "generator" not in plan:
        raise UsageError("give --dist, --preset or --config")
    for key, val in (("epsilon_grid", args.eps), ("n_reps", args.reps), ("a", args.a),
                     ("closed_form_target", args.target), ("experiment_id", args.experiment_id)):
        if val is not None:
            plan[key] = val
    if args.cutoff is not None:
        plan["cutoff_rule"] = args.cutoff
    plan.setdefault("epsilon_grid", [0.1, 0.05, 0.02])
    plan.setdefault("experiment_id", "ard-mc")
    plan["master_seed"] = args.seed if args.seed is not None else plan.get("master_seed",
                                                                          DEFAULT_SEED)
    plan["threads"] = args.threads
    built = mc.ExperimentPlan.from_dict(plan)
    if built.closed_form_target is None:
        built.closed_form_target = mc.closed_form_target(built.f1, built.f2, built.generator)
    return built


def cmd_ard_mc(args):
    plan = _build_plan(args)
    if args.seed is None:
        print(f"seed: {plan.master_seed} (default)")
    else:
        print(f"seed: {plan.master_seed}")
    result = mc.run_ard_experiment(plan)
    base = _out_base(args, plan.experiment_id.replace("/", "_"))
    json_path, csv_path = mc.persist_results(result, base)
    target = plan.closed_form_target
    print(f"{'eps':>8} {'mean':>10} {'se':>9}   95% CI")
    for e in result.estimates:
        print(f"{e.epsilon:8.4g} {e.mean:10.4f} {e.std_error:9.4f}   "
              f"[{e.ci95[0]:.4f}, {e.ci95[1]:.4f}]")
    s = result.summary
    tgt = "none" if target is None else f"{target:.6g}"
    print(f"extrapolated {s.extrapolated:.4f} +- {s.extrapolated_se:.4f}; target {tgt}; "
          f"{s.status}")
    print(f"results written to {json_path} and {csv_path}")
    return 1 if s.status == "FAIL" else 0


# ---------------------------------------------------------------------- qlaw

def cmd_qlaw(args):
    if args.paths < 2:
        raise UsageError("--paths must be at least 2")
    config = brownian.PathConfig(args.sigma, args.horizon, args.step, args.seed)
    est = mc.run_qlaw_experiment(args.paths, config, threads=args.threads)
    base = _out_base(args, "qlaw")
    base.parent.mkdir(parents=True, exist_ok=True)
    path = mc.write_csv([est], base.with_suffix(".csv"))
    print(f"E Q ~ {est.mean:.4f} +- {est.std_error:.4f} (target sigma^2 = {args.sigma**2:g}); "
          f"horizon {config.T:g}, step {config.T / config.n_steps:g}, "
          f"tail bound {est.truncation_bound_total:.2e}")
    print(f"results written to {path}")
    return 0


# ----------------------------------------------------------------------- zoo

def cmd_zoo(args):
    rows = ard.denominator_zoo(args.N)
    path = _write_rows(_out_base(args, f"zoo_N{args.N}").with_suffix(".csv"),
                       ("label", "principle", "exact", "approx", "approx_formula"),
                       [(r.label, r.principle, float(r.exact), float(r.approx), r.approx_formula)
                        for r in rows])
    print(f"{'':>5} {'exact':>12} {'approx':>12}  rule / principle")
    for r in rows:
        print(f"{r.label:>5} {r.exact:12.6f} {r.approx:12.6f}  {r.approx_formula:<24} "
              f"{r.principle}")
    print(f"table written to {path}")
    return 0


# --------------------------------------------------------------- secondorder

def second_order_diagnostics(c, xi, sigma, eps, reps, seed, fixed_a=None, threads=1):
    """Samples of eps (Q(c) - Q(0)) and their comparison with the reference law."""
    g = dist.Normal(xi, sigma)
    cfg = (qsim.QConfig(eps, "fixed", fixed_a) if fixed_a is not None
           else qsim.QConfig(eps))
    counts = mc.coupled_counts([qsim.ShrinkMean(c), qsim.ShrinkMean(0.0)], g, cfg, reps,
                               seed, "secondorder", threads)
    x = eps * (counts[:, 0] - counts[:, 1]).astype(float)
    mean = float(x.mean())
    var = float(x.var(ddof=1))
    se_mean = math.sqrt(var / reps)
    m4 = float(np.mean((x - mean) ** 4))
    se_var = math.sqrt(max(m4 - var * var, 0.0) / reps)
    a, b = brownian.sample_ab_pairs(c, xi, reps, dist.stream_seed(seed, "secondorder/ab", 0))
    probs = (np.arange(1, 100) / 100.0)
    qq = np.column_stack([probs, np.quantile(x, probs), np.quantile(a - b, probs)])
    diag = {
        "c": c, "xi": xi, "sigma": sigma, "epsilon": eps, "reps": reps, "master_seed": seed,
        "cutoff": "shrinking" if fixed_a is None else f"fixed a={fixed_a}",
        "mean": mean, "mean_ci95": [mean - mc.Z95 * se_mean, mean + mc.Z95 * se_mean],
        "variance": var, "variance_ci95": [var - mc.Z95 * se_var, var + mc.Z95 * se_var],
        "reference_variance": 8.0 / 3.0 * (c * xi) ** 2,
        "point_mass_at_zero": float(np.mean(x == 0.0)),
        "qq_max_abs_gap": float(np.max(np.abs(qq[:, 1] - qq[:, 2]))),
    }
    return diag, qq


def cmd_secondorder(args):
    if not args.c > 0:
        raise UsageError("--c must be positive")
    if not args.xi > 0:
        raise UsageError("--xi must be positive")
    diag, qq = second_order_diagnostics(args.c, args.xi, args.sigma, args.eps, args.reps,
                                        args.seed, args.fixed_a, args.threads)
    base = _out_base(args, "secondorder")
    base.parent.mkdir(parents=True, exist_ok=True)
    with open(base.with_suffix(".json"), "w") as fh:
        json.dump(diag, fh, indent=2)
    qq_path = _write_rows(base.parent / (base.name + "_qq.csv"),
                          ("prob", "empirical", "reference"), [tuple(map(float, r)) for r in qq])
    print(f"mean {diag['mean']:.4f}  CI [{diag['mean_ci95'][0]:.4f}, {diag['mean_ci95'][1]:.4f}]")
    print(f"variance {diag['variance']:.4f}  CI [{diag['variance_ci95'][0]:.4f}, "
          f"{diag['variance_ci95'][1]:.4f}]  reference {diag['reference_variance']:.4f}")
    print(f"point mass at 0: {diag['point_mass_at_zero']:.4f}; "
          f"QQ max gap vs reference pair: {diag['qq_max_abs_gap']:.4f} (diagnostic)")
    print(f"results written to {base.with_suffix('.json')} and {qq_path}")
    return 0


# -------------------------------------------------------------------- parser

class _HelpFormatter(argparse.HelpFormatter):
    # like ArgumentDefaultsHelpFormatter, but silent about unset (None) defaults
    def _get_help_string(self, action):
        text = action.help or ""
        if action.default not in (None, argparse.SUPPRESS) and "%(default)" not in text \
                and action.option_strings:
            text += " (default: %(default)s)"
        return text


def build_parser():
    parser = argparse.ArgumentParser(
        prog="epsmiss",
        description="Count eps-misses of estimator sequences, evaluate deficiency formulas "
                    "and run the Monte Carlo checks.",
        formatter_class=_HelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)
    fmt = _HelpFormatter

    p = sub.add_parser("ard-closed", help="evaluate a closed-form deficiency curve",
                       formatter_class=fmt)
    p.add_argument("--formula", required=True,
                   help="lambda0, lambda0-transformed, hl, binomial, squared-mean, lambda-a")
    _add_dist_args(p)
    p.add_argument("--xi", type=float, help="mean of a custom moment spec")
    p.add_argument("--gamma", type=float, help="skewness of a custom moment spec")
    p.add_argument("--c", type=float, help="single c value")
    p.add_argument("--d", type=float, help="prior guess d (single value for squared-mean)")
    p.add_argument("--c-grid", type=_grid, help="start:stop:step (default 0:1:0.05)")
    p.add_argument("--d-grid", type=_grid, help="start:stop:step (default -2:1:0.05)")
    p.add_argument("--a", type=float, help="fixed cutoff for lambda-a")
    p.add_argument("--h", help="transform tag: identity, sqrt, log, square, custom")
    p.add_argument("--h-ratio", type=float, help="-h''(xi)/h'(xi) for a custom transform")
    p.add_argument("--out", help="output CSV path")
    p.set_defaults(func=cmd_ard_closed)

    p = sub.add_parser("ard-mc", help="Monte Carlo deficiency experiment",
                       formatter_class=fmt)
    p.add_argument("--preset", help=", ".join(PRESETS))
    p.add_argument("--config", help="JSON file mirroring the experiment plan")
    _add_dist_args(p)
    p.add_argument("--family", help="shrink-mean, variance, sd, log, squared-known, "
                                    "squared-unknown, transformed")
    p.add_argument("--c1", type=float, help="c of the first family")
    p.add_argument("--c2", type=float, help="c of the second family")
    p.add_argument("--d1", type=float, help="d of the first family (default 0)")
    p.add_argument("--d2", type=float, help="d of the second family (default 0)")
    p.add_argument("--h", help="transform tag for --family transformed")
    p.add_argument("--eps", type=_float_list, help="decreasing eps grid (default 0.1,0.05,0.02)")
    p.add_argument("--reps", type=int, help="replications per eps (default 2000)")
    p.add_argument("--seed", type=int, help=f"master seed (default {DEFAULT_SEED})")
    p.add_argument("--cutoff", choices=("shrinking", "fixed"), help="default shrinking")
    p.add_argument("--a", type=float, help="fixed cutoff a")
    p.add_argument("--target", type=float, help="override the closed-form target")
    p.add_argument("--experiment-id", help="seed-lineage label (default: preset name or ard-mc)")
    p.add_argument("--threads", type=int, default=1, help="worker threads")
    p.add_argument("--out", help="output base path (.json and .csv are written)")
    p.set_defaults(func=cmd_ard_mc)

    p = sub.add_parser("qlaw", help="simulate the Brownian occupation law",
                       formatter_class=fmt)
    p.add_argument("--sigma", type=float, default=1.0, help="standard deviation sigma")
    p.add_argument("--paths", type=int, default=10000, help="number of simulated paths")
    p.add_argument("--horizon", type=float, help="default 40 sigma^2")
    p.add_argument("--step", type=float, help="default sigma^2 / 400")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED, help="master seed")
    p.add_argument("--threads", type=int, default=1, help="worker threads")
    p.add_argument("--out", help="output base path")
    p.set_defaults(func=cmd_qlaw)

    p = sub.add_parser("zoo", help="variance-denominator table", formatter_class=fmt)
    p.add_argument("--N", type=int, required=True, help="sample size N >= 2")
    p.add_argument("--out", help="output CSV path")
    p.set_defaults(func=cmd_zoo)

    p = sub.add_parser("secondorder", help="distribution of eps (Q(c) - Q(0))",
                       formatter_class=fmt)
    p.add_argument("--c", type=float, default=1.0, help="shrinkage weight c > 0")
    p.add_argument("--xi", type=float, default=1.0, help="exponential mean xi")
    p.add_argument("--sigma", type=float, default=1.0, help="standard deviation sigma")
    p.add_argument("--eps", type=float, default=0.02, help="miss tolerance")
    p.add_argument("--reps", type=int, default=5000, help="replications")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED, help="master seed")
    p.add_argument("--fixed-a", type=float, help="use a fixed cutoff a instead of a(eps)=eps")
    p.add_argument("--threads", type=int, default=1, help="worker threads")
    p.add_argument("--out", help="output base path")
    p.set_defaults(func=cmd_secondorder)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ValueError, TypeError) as exc:
        print(f"epsmiss {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (OSError, RuntimeError) as exc:
        print(f"epsmiss {args.command}: failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
