"""Command-line interface.

Subcommands
-----------
simulate    generate a series from a model config and write it as CSV
theta       extremal-index estimates (analytic, spectral MC, runs, blocks)
triple      the limit jump-measure triple for a model config
verify-flt  full partial-sum-vs-limit verification experiment with report
tailproc    dependence-cluster statistics (acceptance rate, tail constants)
diagnose    anticlustering / small-step / mixing diagnostics with figures
metric      self-test of the step-path metric implementation

The config file is flat ``key = value`` text; ``#`` starts a comment.  The
``STABLESUMS_SEED`` environment variable overrides the master seed from any
source and is echoed in reports.  Exit codes: 0 success, 2 a verification or
self-test criterion failed, 1 usage or runtime error.
"""

from __future__ import annotations

import argparse
import ast
import json
import os
import sys

import numpy as np

from ._util import substream
from .estimators import (BlockingScheme, anticlustering_diagnostic,
                         blocks_estimator, mixing_diagnostic, runs_estimator,
                         small_step_diagnostic, write_series_csv)
from .harness import ExperimentConfig, emit_report, run_flt_experiment
from .models import (model_from_config, normalizing_sequence, simulate_series)
from .tailproc import (LevyTriple, cluster_acceptance_rate, cluster_tail_mass,
                       extremal_index_spectral_mc, extremal_index_theoretical,
                       garch_tail_constant, spectral_tail_constants,
                       tail_window_sampler, theoretical_triple)

ENV_SEED = "STABLESUMS_SEED"

_MODEL_KEYS = {"model", "alpha", "p", "scale", "coefficients", "alpha0",
               "alpha1", "beta1", "phi", "logvol_scale", "burn_in"}
_EXPERIMENT_KEYS = {"n", "replicates", "seed", "comparison_times",
                    "limit_draws", "u_trunc", "scheme_exponent",
                    "theta_quantile", "small_step_u", "small_step_delta",
                    "small_step_replicates", "audit_replicates", "audit_u",
                    "centering_reps", "label", "c_plus", "c_minus", "b",
                    "triple_alpha"}


def load_config(path: str) -> dict:
    """Parse a flat key=value config file."""
    cfg: dict = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, val = (part.strip() for part in line.split("=", 1))
            if key in cfg:
                raise ValueError(f"{path}:{lineno}: duplicate key '{key}'")
            cfg[key] = _parse_value(val)
    unknown = set(cfg) - _MODEL_KEYS - _EXPERIMENT_KEYS
    if unknown:
        raise ValueError(f"{path}: unknown config keys {sorted(unknown)}")
    return cfg


def _parse_value(text: str):
    if "," in text:
        return tuple(_parse_value(part.strip()) for part in text.split(","))
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        return text


def _resolve_seed(args, cfg: dict) -> tuple[int, str]:
    env = os.environ.get(ENV_SEED)
    if env is not None:
        return int(env), "env"
    if getattr(args, "seed", None) is not None:
        return int(args.seed), "cli"
    if "seed" in cfg:
        return int(cfg["seed"]), "config"
    return 0, "default"


def _model_from(cfg: dict):
    model_cfg = {k: v for k, v in cfg.items() if k in _MODEL_KEYS}
    return model_from_config(model_cfg)


def _experiment_from(cfg: dict, seed: int) -> ExperimentConfig:
    spec = _model_from(cfg)
    triple = None
    if any(k in cfg for k in ("c_plus", "c_minus", "b")):
        for k in ("c_plus", "c_minus", "b"):
            if k not in cfg:
                raise ValueError("a triple override needs c_plus, c_minus and b")
        t_alpha = float(cfg.get("triple_alpha", cfg.get("alpha", 0.0)))
        if t_alpha <= 0:
            raise ValueError("a triple override needs alpha or triple_alpha")
        triple = LevyTriple(t_alpha, float(cfg["c_plus"]),
                            float(cfg["c_minus"]), float(cfg["b"]))
    kwargs = {}
    for key in ("comparison_times", "limit_draws", "u_trunc", "scheme_exponent",
                "theta_quantile", "small_step_u", "small_step_delta",
                "small_step_replicates", "audit_replicates", "audit_u",
                "centering_reps", "label"):
        if key in cfg:
            val = cfg[key]
            if key in ("comparison_times", "small_step_u") and np.isscalar(val):
                val = (val,)
            kwargs[key] = val
    if "n" not in cfg or "replicates" not in cfg:
        raise ValueError("experiment config needs 'n' and 'replicates'")
    return ExperimentConfig(model=spec, n=int(cfg["n"]),
                            replicates=int(cfg["replicates"]), seed=seed,
                            triple=triple, **kwargs)


def _print(*parts) -> None:
    print(*parts, flush=True)


def _cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    seed, source = _resolve_seed(args, cfg)
    spec = _model_from(cfg)
    n = args.n if args.n is not None else int(cfg.get("n", 10_000))
    x = simulate_series(spec, n, seed=seed)
    out = args.out or "series.csv"
    write_series_csv(x, out)
    _print(f"wrote {n} values to {out} (seed {seed} from {source})")
    return 0


def _cmd_theta(args) -> int:
    cfg = load_config(args.config)
    seed, source = _resolve_seed(args, cfg)
    spec = _model_from(cfg)
    n = args.n if args.n is not None else int(cfg.get("n", 200_000))
    result = {"n": n, "seed": seed, "seed_source": source,
              "quantile": args.quantile, "exponent": args.exponent}
    try:
        result["theoretical"] = extremal_index_theoretical(spec)
    except (TypeError, NotImplementedError):
        result["theoretical"] = None
    try:
        sampler = tail_window_sampler(spec)
        est = extremal_index_spectral_mc(sampler, reps=args.reps,
                                         seed=[seed, 41])
        result["spectral_mc"] = {"value": est.value, "se": est.se}
    except TypeError:
        result["spectral_mc"] = None
    x = simulate_series(spec, n, seed=[seed, 42])
    u_abs = float(np.quantile(np.abs(x), args.quantile))
    scheme = BlockingScheme.from_exponent(n, args.exponent)
    result["threshold_abs"] = u_abs
    result["r_n"] = scheme.r_n
    for name, fn in (("runs", runs_estimator), ("blocks", blocks_estimator)):
        try:
            est = fn(x, u_abs, scheme)
            result[name] = {"value": est.value, "se": est.se,
                            "interval": [float(v) for v in est.interval]}
        except ValueError as exc:
            result[name] = {"error": str(exc)}
    _emit_json(result, args.out)
    for key in ("theoretical", "spectral_mc", "runs", "blocks"):
        _print(f"{key}: {result[key]}")
    return 0


def _cmd_triple(args) -> int:
    cfg = load_config(args.config)
    seed, _source = _resolve_seed(args, cfg)
    spec = _model_from(cfg)
    try:
        tr = theoretical_triple(spec)
        result = {"alpha": tr.alpha, "c_plus": tr.c_plus, "c_minus": tr.c_minus,
                  "b": tr.b, "source": "analytic"}
    except TypeError:
        # Stochastic-recurrence model: Monte Carlo tail constant.
        if cfg.get("model") != "garch11_squared":
            raise
        if args.alpha is None:
            raise ValueError("GARCH triple needs --alpha (the tail index of "
                             "the squared process)")
        est = garch_tail_constant(float(cfg["alpha0"]), float(cfg["alpha1"]),
                                  float(cfg["beta1"]), args.alpha,
                                  reps=args.reps, seed=[seed, 43])
        a = args.alpha
        result = {"alpha": a, "c_plus": est.value, "c_plus_se": est.se,
                  "c_minus": 0.0, "source": "monte-carlo"}
        if a != 1.0:
            result["b"] = (a / (1 - a)) * (est.value - 1.0)
            result["b_se"] = abs(a / (1 - a)) * est.se
        else:
            result["b"] = None
            result["note"] = "no closed-form drift at alpha=1"
    _emit_json(result, args.out)
    _print(json.dumps(result, sort_keys=True))
    return 0


def _cmd_tailproc(args) -> int:
    cfg = load_config(args.config)
    seed, source = _resolve_seed(args, cfg)
    spec = _model_from(cfg)
    sampler = tail_window_sampler(spec)
    acc = cluster_acceptance_rate(sampler, attempts=args.reps, seed=[seed, 44])
    cp, cm = spectral_tail_constants(sampler, reps=args.reps, seed=[seed, 45])
    result = {"seed": seed, "seed_source": source,
              "acceptance_rate": {"value": acc.value, "se": acc.se},
              "c_plus": {"value": cp.value, "se": cp.se},
              "c_minus": {"value": cm.value, "se": cm.se}}
    try:
        result["theta_theoretical"] = extremal_index_theoretical(spec)
    except (TypeError, NotImplementedError):
        result["theta_theoretical"] = None
    if args.u is not None and args.x is not None:
        est = cluster_tail_mass(args.u, args.x, sampler, reps=args.reps,
                                seed=[seed, 46])
        result["cluster_tail_mass"] = {"u": args.u, "x": args.x,
                                       "value": est.value, "se": est.se}
    _emit_json(result, args.out)
    _print(json.dumps(result, sort_keys=True))
    return 0


def _cmd_verify_flt(args) -> int:
    cfg = load_config(args.config)
    seed, source = _resolve_seed(args, cfg)
    config = _experiment_from(cfg, seed)
    report = run_flt_experiment(config, workers=args.workers, seed_source=source)
    out_dir = args.out or "."
    formats = tuple(args.formats.split("+"))
    paths = emit_report(report, out_dir, formats=formats)
    _print(f"experiment {report.experiment_id} (seed {seed} from {source}, "
           f"{report.runtime_seconds:.1f}s)")
    ok = True
    for entry in report.ks:
        flag = "PASS" if entry["p_value"] > 0.01 else "FAIL"
        ok &= entry["p_value"] > 0.01
        _print(f"  t={entry['time']}: KS={entry['statistic']:.4f} "
               f"p={entry['p_value']:.4f} {flag}")
    for name in ("conservation", "decomposition"):
        passed = report.audits[f"{name}_pass"]
        ok &= passed
        _print(f"  audit {name}: max|resid|={report.audits[f'{name}_max_abs']:.3e} "
               f"{'PASS' if passed else 'FAIL'}")
    _print(f"report: {paths[0]}")
    return 0 if ok else 2


def _cmd_diagnose(args) -> int:
    cfg = load_config(args.config)
    seed, source = _resolve_seed(args, cfg)
    spec = _model_from(cfg)
    n = args.n if args.n is not None else int(cfg.get("n", 100_000))
    out_dir = args.out or "."
    os.makedirs(out_dir, exist_ok=True)
    from . import plotting
    scheme = BlockingScheme.from_exponent(n, args.exponent)
    results = {"seed": seed, "seed_source": source, "n": n, "r_n": scheme.r_n}
    which = args.which
    if which in ("anticluster", "all"):
        x = simulate_series(spec, n, seed=[seed, 51])
        u_abs = float(np.quantile(np.abs(x), args.quantile))
        rep = anticlustering_diagnostic(x, u_abs, scheme, pair_sum=True)
        results["anticluster"] = rep.as_dict()
        path = os.path.join(out_dir, f"diagnose-anticluster-seed{seed}.svg")
        plotting.curve_with_band(rep.m_grid, rep.estimates,
                                 [iv[0] for iv in rep.intervals],
                                 [iv[1] for iv in rep.intervals],
                                 out_path=path, xlabel="separation m",
                                 ylabel="P(other exceedance | exceedance)",
                                 title="anticlustering")
        results["anticluster"]["figure"] = os.path.basename(path)
    if which in ("smallstep", "all"):
        reps = max(200, args.reps)
        a_n = normalizing_sequence(spec, n)
        mat = np.empty((reps, n))
        for r in range(reps):
            mat[r] = simulate_series(spec, n, seed=[seed, 52, r])
        rep = small_step_diagnostic(mat, a_n, args.u_grid, args.delta)
        results["smallstep"] = rep.as_dict()
        path = os.path.join(out_dir, f"diagnose-smallstep-seed{seed}.svg")
        plotting.curve_with_band(rep.u_grid, rep.frequencies,
                                 [iv[0] for iv in rep.intervals],
                                 [iv[1] for iv in rep.intervals],
                                 out_path=path, xlabel="truncation u",
                                 ylabel=f"P(max small-jump sum > {args.delta})",
                                 title="small-step condition", logx=True)
        results["smallstep"]["figure"] = os.path.basename(path)
    if which in ("mixing", "all"):
        rep = mixing_diagnostic(spec, min(n, 10_000),
                                BlockingScheme.from_exponent(min(n, 10_000),
                                                             args.exponent),
                                reps=args.reps, seed=[seed, 53])
        results["mixing"] = rep.as_dict()
    json_path = os.path.join(out_dir, f"diagnose-seed{seed}.json")
    with open(json_path, "w") as fh:
        json.dump(results, fh, sort_keys=True, indent=2)
        fh.write("\n")
    _print(f"wrote {json_path}")
    return 0


def _cmd_metric(args) -> int:
    from .cadlag import CadlagPath, m1_distance, uniform_distance
    rng = substream(args.seed if args.seed is not None else 0, 61)
    tol = args.tol
    worst_dom = worst_sym = worst_tri = 0.0

    def random_path():
        k = int(rng.integers(0, 7))
        times = np.sort(rng.random(k))
        times = np.unique(times[times > 0])
        vals = rng.uniform(-1, 1, times.size)
        return CadlagPath.from_jumps(float(rng.uniform(-1, 1)), times, vals)

    for _ in range(args.cases):
        a, b, c = random_path(), random_path(), random_path()
        dab = m1_distance(a, b, tol=tol)
        worst_dom = max(worst_dom, dab - uniform_distance(a, b))
        worst_sym = max(worst_sym, abs(dab - m1_distance(b, a, tol=tol)))
        dac = m1_distance(a, c, tol=tol)
        dcb = m1_distance(c, b, tol=tol)
        worst_tri = max(worst_tri, dab - (dac + dcb))
    # a short intermediate shelf converges in this metric but not uniformly
    n = 8
    shelf = CadlagPath(0.0, [0.5 - 1.0 / n, 0.5], [0.5, 1.0])
    jump = CadlagPath(0.0, [0.5], [1.0])
    d_m1 = m1_distance(shelf, jump, tol=1e-9)
    d_uni = uniform_distance(shelf, jump)
    _print(f"cases={args.cases} tol={tol}")
    _print(f"  max(d_m1 - d_uniform) = {worst_dom:.2e} (must be <= {tol:.1e})")
    _print(f"  max symmetry gap      = {worst_sym:.2e}")
    _print(f"  max triangle excess   = {worst_tri:.2e} (must be <= {3*tol:.1e})")
    _print(f"  shelf(1/8) vs jump: d_m1={d_m1:.6f} (~ {1/n}), "
           f"d_uniform={d_uni:.6f} (= 0.5)")
    ok = (worst_dom <= tol and worst_sym <= tol and worst_tri <= 3 * tol
          and abs(d_m1 - 1 / n) <= 1e-6 and d_uni == 0.5)
    _print("metric self-test:", "PASS" if ok else "FAIL")
    return 0 if ok else 2


def _emit_json(obj: dict, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            json.dump(obj, fh, sort_keys=True, indent=2)
            fh.write("\n")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stablesums",
        description="Simulation laboratory for heavy-tailed partial-sum limits")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required,
                       help="flat key=value config file")
        p.add_argument("--seed", type=int, default=None,
                       help=f"master seed (env {ENV_SEED} overrides)")
        p.add_argument("--out", default=None, help="output file or directory")
        p.add_argument("--workers", type=int, default=1,
                       help="worker process count (does not affect results)")

    p = sub.add_parser("simulate", help="write a simulated series as CSV")
    common(p)
    p.add_argument("-n", type=int, default=None, help="series length")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("theta", help="extremal-index estimates")
    common(p)
    p.add_argument("-n", type=int, default=None)
    p.add_argument("--quantile", type=float, default=0.995,
                   help="threshold quantile of |X|")
    p.add_argument("--exponent", type=float, default=0.4,
                   help="block-length exponent")
    p.add_argument("--reps", type=int, default=100_000,
                   help="spectral Monte Carlo replicates")
    p.set_defaults(func=_cmd_theta)

    p = sub.add_parser("triple", help="limit jump-measure triple")
    common(p)
    p.add_argument("--alpha", type=float, default=None,
                   help="tail index (required for GARCH)")
    p.add_argument("--reps", type=int, default=100_000)
    p.set_defaults(func=_cmd_triple)

    p = sub.add_parser("verify-flt", help="partial sums vs limit experiment")
    common(p)
    p.add_argument("--formats", default="json+csv+svg",
                   help="artifact formats joined by '+'")
    p.set_defaults(func=_cmd_verify_flt)

    p = sub.add_parser("tailproc", help="dependence-cluster statistics")
    common(p)
    p.add_argument("--reps", type=int, default=100_000)
    p.add_argument("--u", type=float, default=None,
                   help="truncation level for cluster tail mass")
    p.add_argument("--x", type=float, default=None,
                   help="tail point for cluster tail mass")
    p.set_defaults(func=_cmd_tailproc)

    p = sub.add_parser("diagnose", help="condition diagnostics with figures")
    common(p)
    p.add_argument("--which", default="all",
                   choices=("anticluster", "smallstep", "mixing", "all"))
    p.add_argument("-n", type=int, default=None)
    p.add_argument("--quantile", type=float, default=0.999)
    p.add_argument("--exponent", type=float, default=0.4)
    p.add_argument("--reps", type=int, default=200)
    p.add_argument("--u-grid", type=float, nargs="+",
                   default=(0.02, 0.05, 0.1), dest="u_grid")
    p.add_argument("--delta", type=float, default=0.1)
    p.set_defaults(func=_cmd_diagnose)

    p = sub.add_parser("metric", help="step-path metric self-test")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--cases", type=int, default=200)
    p.add_argument("--tol", type=float, default=1e-6)
    p.set_defaults(func=_cmd_metric)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, TypeError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
