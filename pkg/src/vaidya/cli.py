"""Experiment runner CLI.

Subcommands:
  run          execute a JSON-configured experiment, write trace CSVs + summary
  plan         print N, r, delta and total oracle calls for given problem data
  selftest     fast invariant checks (exit 1 on any failure)
  dataset-info canonical benchmark-table download pointer

Exit codes: 0 ok, 1 selftest failure, 2 config error, 3 data error,
4 solver failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import geometry, problems
from .baseline import SgdConfig, run_sgd
from .cutting_plane import VaidyaConfig, iterations_needed, run_vaidya
from .errors import (
    CenteringFailed,
    ConfigError,
    EmptyFile,
    InvalidArgument,
    NoFeasibleIterate,
    ParseError,
    VaidyaError,
)
from .stochastic import batch_size, delta_of_batch

TRACE_COLUMNS = ["iter", "solver", "action", "m", "min_sigma", "value_estimate",
                 "test_loss", "cum_samples", "wall_time_s"]

_PROBLEM_KEYS = {
    "noisy_quadratic": {"kind", "n", "sigma", "radius", "seed", "target"},
    "noisy_max_affine": {"kind", "n", "sigma", "radius", "seed", "pieces"},
    "logistic": {"kind", "csv", "label_column", "binarize_class", "header",
                 "test_frac", "radius", "subsample", "seed", "sigma_estimate"},
    "logistic_synthetic": {"kind", "rows", "features", "test_frac", "radius",
                           "seed", "sigma_estimate"},
}
_VAIDYA_KEYS = {"preset", "eta", "gamma", "max_iters", "newton_tol", "newton_max",
                "batch", "value_batch"}
_SGD_KEYS = {"step_size", "batch", "iterations", "value_batch"}
_TOP_KEYS = {"problem", "solver", "vaidya", "sgd", "eps", "beta", "b_estimate",
             "out_dir", "seed", "threads", "max_samples"}


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def _check_keys(section: dict, allowed: set, where: str):
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown key {sorted(unknown)[0]!r} in {where}")


def load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a JSON object")
    _check_keys(cfg, _TOP_KEYS, "config")
    if "problem" not in cfg:
        raise ConfigError("missing required field 'problem'")
    prob = cfg["problem"]
    kind = prob.get("kind")
    if kind not in _PROBLEM_KEYS:
        raise ConfigError(f"problem.kind must be one of {sorted(_PROBLEM_KEYS)}, got {kind!r}")
    _check_keys(prob, _PROBLEM_KEYS[kind], f"problem ({kind})")
    solver = cfg.get("solver", "both")
    if solver not in ("vaidya", "sgd", "both"):
        raise ConfigError(f"solver must be vaidya|sgd|both, got {solver!r}")
    _check_keys(cfg.get("vaidya", {}), _VAIDYA_KEYS, "vaidya")
    _check_keys(cfg.get("sgd", {}), _SGD_KEYS, "sgd")
    for field in ("eps", "beta"):
        if field in cfg and cfg[field] <= 0:
            raise ConfigError(f"field '{field}' must be positive")
    if "beta" in cfg and not 0 < cfg["beta"] < 1:
        raise ConfigError("field 'beta' must lie in (0, 1)")
    return cfg


class _Problem:
    """Everything a solver run needs, from either problem family."""

    def __init__(self, oracle, ball, test_loss, exact_f=None, f_star=None, B=None,
                 meta=None):
        self.oracle = oracle
        self.ball = ball
        self.test_loss = test_loss  # callable x -> recorded per-iteration metric
        self.exact_f = exact_f
        self.f_star = f_star
        self.B = B
        self.meta = meta or {}


def build_problem(cfg: dict) -> _Problem:
    prob = cfg["problem"]
    kind = prob["kind"]
    if kind in ("noisy_quadratic", "noisy_max_affine"):
        spec = problems.SyntheticSpec(
            kind=kind, n=prob["n"], sigma=prob.get("sigma", 0.0),
            seed=prob.get("seed", cfg.get("seed", 0)),
            radius=prob.get("radius", 1.0), pieces=prob.get("pieces"),
            target=np.asarray(prob["target"], dtype=float) if prob.get("target") else None)
        sp = problems.make_synthetic(spec)
        return _Problem(oracle=sp.oracle, ball=sp.ball, test_loss=sp.exact_f,
                        exact_f=sp.exact_f, f_star=sp.f_star, B=sp.B,
                        meta={"n": spec.n, "sigma": spec.sigma})
    seed = prob.get("seed", cfg.get("seed", 0))
    if kind == "logistic":
        ds = problems.load_csv(prob["csv"], label_column=prob.get("label_column", -1),
                               positive_class=prob.get("binarize_class", 2),
                               header=prob.get("header", False), standardize=False)
    else:
        ds = problems.make_logistic_synthetic(prob.get("rows", 20000),
                                              prob.get("features", 54), seed=seed)
    if prob.get("subsample"):
        ds = problems.subsample(ds, prob["subsample"], seed=seed)
    train, test = problems.train_test_split(ds, prob.get("test_frac", 0.2), seed=seed)
    radius = prob.get("radius", 10.0)
    oracle = problems.LogisticOracle(train, sigma=prob.get("sigma_estimate", 1.0),
                                     radius=radius)
    return _Problem(oracle=oracle, ball=problems.BallSet(radius),
                    test_loss=lambda w: problems.mean_logistic_loss(w, test),
                    meta={"n": train.dim, "train_rows": train.n_samples,
                          "test_rows": test.n_samples, "sigma": oracle.sigma})


def _plan_vaidya(cfg: dict, prob: _Problem, vcfg: dict) -> tuple[int, int, dict]:
    """Resolve (max_iters, batch) from explicit settings or the planning formulas."""
    n = prob.oracle.dim
    R = prob.ball.radius
    planned = {}
    max_iters = vcfg.get("max_iters")
    if max_iters is None:
        B = cfg.get("b_estimate", prob.B)
        if B is None or "eps" not in cfg:
            raise ConfigError("vaidya.max_iters missing and planning inputs "
                              "(eps and b_estimate/known B) unavailable")
        gamma = vcfg.get("gamma", VaidyaConfig.practical().gamma)
        max_iters = iterations_needed(n, gamma, B, R, prob.ball.rho, cfg["eps"])
        planned["planned_iters"] = max_iters
    batch = vcfg.get("batch")
    if batch is None:
        sigma = prob.meta.get("sigma", 0.0)
        if sigma == 0.0:
            batch = 1  # deterministic oracle needs no batching
        else:
            if "eps" not in cfg or "beta" not in cfg:
                raise ConfigError("vaidya.batch missing and eps/beta not given")
            batch = batch_size(cfg["eps"], cfg["beta"], sigma, R, max_iters)
            planned["planned_batch"] = batch
            planned["delta"] = delta_of_batch(batch, cfg["beta"], sigma, R,
                                              max_iters).delta
    return max_iters, batch, planned


def _write_trace(path: Path, solver: str, trace, test_losses):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_COLUMNS)
        for rec, tl in zip(trace, test_losses):
            w.writerow([rec.k, solver, rec.action_label, _fmt(rec.m),
                        _fmt(rec.min_sigma), _fmt(rec.value_estimate), _fmt(tl),
                        rec.cum_samples, _fmt(rec.wall_time_s)])


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    threads = args.threads if args.threads is not None else cfg.get("threads", 1)
    out_dir = Path(args.out if args.out is not None else cfg.get("out_dir", "out"))
    if getattr(args, "header", None) and cfg["problem"].get("kind") == "logistic":
        cfg["problem"]["header"] = True
    max_samples = args.max_samples if args.max_samples is not None else cfg.get("max_samples")
    try:
        prob = build_problem(cfg)
    except (ParseError, EmptyFile, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    out_dir.mkdir(parents=True, exist_ok=True)
    solver = cfg.get("solver", "both")
    seed = cfg.get("seed", 0)
    summary = {"config": cfg, "problem": prob.meta, "solvers": {}}

    vaidya_iters = None
    if solver in ("vaidya", "both"):
        vcfg = dict(cfg.get("vaidya", {}))
        max_iters, batch, planned = _plan_vaidya(cfg, prob, vcfg)
        preset = vcfg.get("preset", "practical")
        base = (VaidyaConfig.theory(max_iters=max_iters, seed=seed)
                if preset == "theory" else
                VaidyaConfig.practical(max_iters=max_iters, seed=seed))
        run_cfg = VaidyaConfig(
            eta=vcfg.get("eta", base.eta), gamma=vcfg.get("gamma", base.gamma),
            newton_tol=vcfg.get("newton_tol", base.newton_tol),
            newton_max=vcfg.get("newton_max", base.newton_max),
            max_iters=max_iters, seed=seed, preset=preset)
        oracle = problems.StochasticCutOracle(
            prob.oracle, prob.ball, grad_batch=batch,
            value_batch=vcfg.get("value_batch"), master_seed=seed, threads=threads)
        t0 = time.perf_counter()
        res = run_vaidya(oracle, problems.make_initial_box(prob.oracle.dim, prob.ball),
                         run_cfg, max_samples=max_samples)
        wall = time.perf_counter() - t0
        losses = [prob.test_loss(r.x) for r in res.trace]
        _write_trace(out_dir / "trace_vaidya.csv", "vaidya", res.trace, losses)
        vaidya_iters = max_iters
        info = {"iterations": len(res.trace), "max_iters": max_iters, "batch": batch,
                "best_value_estimate": res.best_value_estimate,
                "final_test_loss": losses[-1],
                "total_oracle_calls": res.total_oracle_calls, "wall_time_s": wall,
                **planned}
        if prob.exact_f is not None and prob.f_star is not None:
            info["gap_best"] = prob.exact_f(res.best_point) - prob.f_star
            info["gap_final"] = prob.exact_f(res.final_point) - prob.f_star
        summary["solvers"]["vaidya"] = info

    if solver in ("sgd", "both"):
        scfg = dict(cfg.get("sgd", {}))
        iterations = scfg.get("iterations", vaidya_iters)
        if iterations is None:
            raise ConfigError("sgd.iterations missing and no vaidya run to match")
        sgd_cfg = SgdConfig(step_size=scfg.get("step_size", 0.1),
                            batch=scfg.get("batch", 128), iterations=iterations,
                            radius=prob.ball.radius, seed=seed,
                            value_batch=scfg.get("value_batch"))
        t0 = time.perf_counter()
        res = run_sgd(prob.oracle, sgd_cfg, threads=threads, max_samples=max_samples)
        wall = time.perf_counter() - t0
        losses = [prob.test_loss(r.x) for r in res.trace]
        _write_trace(out_dir / "trace_sgd.csv", "sgd", res.trace, losses)
        info = {"iterations": len(res.trace), "batch": sgd_cfg.batch,
                "step_size": sgd_cfg.step_size,
                "best_value_estimate": res.best_value_estimate,
                "final_test_loss": losses[-1],
                "total_oracle_calls": res.total_oracle_calls, "wall_time_s": wall}
        if prob.exact_f is not None and prob.f_star is not None:
            info["gap_best"] = prob.exact_f(res.best_point) - prob.f_star
            info["gap_final"] = prob.exact_f(res.final_point) - prob.f_star
        summary["solvers"]["sgd"] = info

    with open(out_dir / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, default=float)
        fh.write("\n")
    print(f"wrote {out_dir}/summary.json")
    return 0


def cmd_plan(args) -> int:
    try:
        if args.N is not None:
            N = args.N  # manual override, mirroring the runner
        else:
            N = iterations_needed(args.n, args.gamma, args.B, args.R, args.rho, args.eps)
        if args.sigma > 0:
            r = batch_size(args.eps, args.beta, args.sigma, args.R, N)
            delta = delta_of_batch(r, args.beta, args.sigma, args.R, N).delta
        else:
            r, delta = 1, 0.0
    except InvalidArgument as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    print(f"N = {N}")
    print(f"r = {r}")
    print(f"delta = {delta:.6g}")
    print(f"total_samples = {N * r}")
    return 0


def _selftest_checks():
    rng = np.random.default_rng(0)

    def trace_identity():
        for _ in range(20):
            n = int(rng.integers(2, 7))
            m = int(rng.integers(n + 1, 3 * n + 1))
            P, x = _random_instance(n, m, rng)
            sig = geometry.leverage_scores(P, x)
            if abs(sig.sum() - n) > 1e-8 * n:
                return f"leverage sum {sig.sum()} != {n}"
        return None

    def gradient_check():
        for _ in range(10):
            n = int(rng.integers(2, 6))
            P, x = _random_instance(n, int(rng.integers(n + 1, 3 * n + 1)), rng)
            g = geometry.volumetric_gradient(P, x)
            h = 1e-6
            fd = np.zeros(n)
            for j in range(n):
                e = np.zeros(n)
                e[j] = h
                fd[j] = (geometry.volumetric_value(P, x + e)
                         - geometry.volumetric_value(P, x - e)) / (2 * h)
            if np.linalg.norm(g - fd) > 1e-5 * max(np.linalg.norm(g), 1e-3):
                return f"gradient mismatch {np.linalg.norm(g - fd):.2e}"
        return None

    def box_centering():
        P = geometry.box_polytope(3, 1.0)
        st = geometry.volumetric_center(P, np.array([0.4, -0.3, 0.2]), tol=1e-9)
        if np.linalg.norm(st.x) > 1e-7:
            return f"box center off midpoint by {np.linalg.norm(st.x):.2e}"
        return None

    def planning_values():
        if iterations_needed(1, 1.0, 1.0, 1.0, 1.0, 1.0) != 2:
            return "iterations_needed hand value"
        if batch_size(0.1, 0.01, 1.0, 1.0, 100) != 31316:
            return "batch_size hand value"
        return None

    return [("leverage trace identity", trace_identity),
            ("volumetric gradient vs finite differences", gradient_check),
            ("box centering", box_centering),
            ("planning formulas", planning_values)]


def _random_instance(n, m, rng):
    A = np.vstack([np.eye(n), -np.ones((1, n))])
    b = -np.ones(n + 1)
    for _ in range(m - (n + 1)):
        a = rng.normal(size=n)
        a /= np.linalg.norm(a)
        A = np.vstack([A, a[None, :]])
        b = np.append(b, -rng.uniform(0.4, 1.2))
    P = geometry.Polytope(A, b)
    d = rng.normal(size=n)
    d /= np.linalg.norm(d)
    s0 = geometry.slacks(P, np.zeros(n))
    rates = P.A @ d
    shrink = rates < 0
    t_max = np.min(s0[shrink] / -rates[shrink]) if np.any(shrink) else 1.0
    return P, rng.uniform(0.1, 0.5) * t_max * d


def cmd_selftest(_args) -> int:
    failed = False
    for name, check in _selftest_checks():
        try:
            problem = check()
        except VaidyaError as exc:
            problem = f"{type(exc).__name__}: {exc}"
        if problem is None:
            print(f"ok    {name}")
        else:
            print(f"FAIL  {name}: {problem}")
            failed = True
    return 1 if failed else 0


def cmd_dataset_info(_args) -> int:
    print(f"url: {problems.COVERTYPE_URL}")
    print(f"rows: {problems.COVERTYPE_ROWS}")
    print(f"raw_features: {problems.COVERTYPE_RAW_FEATURES} (+1 label column; "
          "+1 constant feature appended on load => 55 model dimensions)")
    print("default_binarization: label 1 iff raw class == 2")
    print("note: download manually; the loader only reads local files")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vaidya",
                                description="cutting-plane vs SGD experiment runner")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment from a JSON config")
    run.add_argument("--config", required=True)
    run.add_argument("--threads", type=int, default=None,
                     help="batch-internal parallelism (identical outputs for any value)")
    run.add_argument("--out", default=None, help="output directory override")
    run.add_argument("--header", action="store_true", default=None,
                     help="input CSV has a header row (overrides problem.header)")
    run.add_argument("--max-samples", type=int, default=None, dest="max_samples",
                     help="stop each solver once this many oracle samples were drawn")
    run.set_defaults(func=cmd_run)

    plan = sub.add_parser("plan", help="print N, r, delta for the planning formulas")
    for name, required, default in [("n", True, None), ("eps", True, None),
                                    ("beta", False, 0.1), ("sigma", False, 0.0),
                                    ("R", True, None), ("rho", True, None),
                                    ("B", True, None), ("gamma", False, 0.04)]:
        kind = int if name == "n" else float
        plan.add_argument(f"--{name}", type=kind, required=required, default=default)
    plan.add_argument("--N", type=int, default=None,
                      help="iteration count override (skips the N formula)")
    plan.set_defaults(func=cmd_plan)

    st = sub.add_parser("selftest", help="fast invariant checks")
    st.set_defaults(func=cmd_selftest)

    di = sub.add_parser("dataset-info", help="benchmark dataset pointer")
    di.set_defaults(func=cmd_dataset_info)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ParseError, EmptyFile) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except (CenteringFailed, NoFeasibleIterate, InvalidArgument) as exc:
        print(f"solver failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
