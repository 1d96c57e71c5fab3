"""Command-line front-end.

Subcommands: grad-est, solve, sdp, lp, zsg, sweep, regimes.
Exit codes: 0 success, 2 configuration error, 3 numeric failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from typing import Dict, Optional

import numpy as np

from .errors import ConfigError, DomainError, NumericError, ResourceError
from .gradients import GradientEstimator
from .harness import (
    build_experiment,
    build_objective,
    derive_seed,
    emit_zsg_regimes,
    load_config,
    run_experiment,
    run_sweep,
    write_trace_csv,
)
from .oracles import NormSpec, NoisyOracle
from .problems import GAMES, make_game
from .whitebox import check_dual_feasibility, load_sdp, load_zsg, solve_zsg

__all__ = ["main", "build_parser"]

_BACKENDS = ("statevector", "surrogate", "exact", "fd")


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="section.key = value config file")
    p.add_argument("--seed", type=int, help="base seed (oracle.seed)")
    p.add_argument("--theta", type=float, help="oracle noise amplitude")
    p.add_argument("--backend", choices=_BACKENDS, help="gradient estimation backend")
    p.add_argument("--eps", type=float, help="target accuracy (solver.epsilon)")
    p.add_argument("--reps", type=int, help="repetitions (run.repetitions)")
    p.add_argument("--out", help="output directory (run.out)")


def _table(args) -> Dict[str, str]:
    table = load_config(args.config) if args.config else {}
    overrides = {
        "oracle.seed": None if args.seed is None else str(args.seed),
        "oracle.theta": None if args.theta is None else repr(args.theta),
        "run.backend": args.backend,
        "solver.epsilon": None if args.eps is None else repr(args.eps),
        "run.repetitions": None if args.reps is None else str(args.reps),
        "run.out": args.out,
    }
    table.update({k: v for k, v in overrides.items() if v is not None})
    return table


def cmd_solve(args) -> int:
    cfg = build_experiment(_table(args))
    art = run_experiment(cfg)
    gaps = [t.records[-1].gap for t in art.traces]
    print(f"runs {len(art.traces)}")
    print(f"final_gap_median {np.median(gaps):.6g}")
    print(f"charged_queries_total {sum(t.charged_queries for t in art.traces)}")
    for p in art.csv_paths + art.extra_paths + [art.summary_path]:
        print(f"wrote {p}")
    if art.plot_path:
        print(f"wrote {art.plot_path}")
    return 0


def cmd_grad_est(args) -> int:
    table = _table(args)
    problem_tbl = {k.split(".", 1)[1]: v for k, v in table.items() if k.startswith("problem.")}
    if not problem_tbl:
        problem_tbl = {"name": "quadratic", "d": "5"}
    problem = build_objective(problem_tbl)
    backend = table.get("run.backend", "surrogate")
    sigma = float(table.get("grad.sigma", table.get("solver.epsilon", "0.1")))
    trials = int(table.get("grad.trials", table.get("run.repetitions", "2000")))
    theta = float(table.get("oracle.theta", "0"))
    seed = int(table.get("oracle.seed", "0"))
    oracle = NoisyOracle(problem, theta, noise_mode=table.get("oracle.mode", "hash"), seed=seed)
    rng = np.random.default_rng(seed)
    est = GradientEstimator(problem, oracle, backend, NormSpec(2.0, problem.d), rng)
    x = problem.domain.start()
    if problem.exact_gradient is None:
        raise ConfigError("grad-est needs a problem with an exact gradient for reference")
    g = np.asarray(problem.exact_gradient(x), dtype=float)
    diffs = np.empty((trials, problem.d))
    charges = np.empty(trials)
    before = oracle.charged_queries
    for i in range(trials):
        e = est.estimate(x, sigma)
        diffs[i] = e.k - g
        charges[i] = e.charged_queries
    bias = diffs.mean(axis=0)
    sup2 = np.max(diffs * diffs, axis=1)
    print(f"backend {est.backend}")
    print(f"sigma {sigma:.6g}  theta {theta:.6g}  trials {trials}  d {problem.d}")
    print(f"bias_linf {np.max(np.abs(bias)):.6g}")
    print(f"second_moment_linf {sup2.mean():.6g}  (se {sup2.std(ddof=1) / math.sqrt(trials):.3g})")
    print(f"mean_charge {charges.mean():.6g}  charged_total {oracle.charged_queries - before}")
    out = table.get("run.out")
    if out:
        os.makedirs(out, exist_ok=True)
        path = os.path.join(out, "grad_est.tsv")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("coord\tbias\n")
            for j, b in enumerate(bias):
                fh.write(f"{j}\t{b:.10g}\n")
        print(f"wrote {path}")
    return 0


def _instance_cmd(args, ext: str) -> int:
    table = _table(args)
    path = args.instance or table.get("problem.file")
    if path is None:
        raise ConfigError("an instance file is required (positional or problem.file)")
    table["problem.file"] = path
    table.pop("problem.name", None)
    table.setdefault("solver.epsilon", "0.05")
    cfg = build_experiment(table)
    art = run_experiment(cfg)
    cert = art.extras[0]
    print(f"objective {cert.objective:.10g}")
    print(f"y0 {cert.y0:.10g}")
    print(f"min_slack_eig {cert.min_slack_eig:.3e}")
    print(f"charged_queries {art.traces[0].charged_queries}")
    if ext == ".sdp":
        report = check_dual_feasibility(load_sdp(path), cert)
        for name, (ok, value) in report.conditions.items():
            print(f"check {name} {'ok' if ok else 'FAIL'} ({value:.3e})")
    for p in art.csv_paths + art.extra_paths + [art.summary_path]:
        print(f"wrote {p}")
    return 0


def cmd_sdp(args) -> int:
    return _instance_cmd(args, ".sdp")


def cmd_lp(args) -> int:
    return _instance_cmd(args, ".lp")


def cmd_zsg(args) -> int:
    table = _table(args)
    name = args.instance or table.get("problem.file") or table.get("problem.name")
    if name is None:
        raise ConfigError("zsg needs a game name or payoff CSV path")
    if name in GAMES:
        inst, stem = make_game(name), name
    else:
        inst, stem = load_zsg(name), os.path.splitext(os.path.basename(name))[0]
    eps = float(table.get("solver.epsilon", "0.01"))
    theta = float(table.get("oracle.theta", "0"))
    base_seed = int(table.get("oracle.seed", "0"))
    reps = int(table.get("run.repetitions", "1"))
    out = table.get("run.out", "out")
    os.makedirs(out, exist_ok=True)
    for rep in range(reps):
        seed = derive_seed(base_seed, rep)
        value, x, y, trace = solve_zsg(inst, eps, oracle_theta=theta, seed=seed)
        csv_path = os.path.join(out, f"{stem}_rep{rep}.csv")
        write_trace_csv(csv_path, trace.records)
        strat_path = os.path.join(out, f"{stem}_rep{rep}.strat")
        with open(strat_path, "w", encoding="utf-8") as fh:
            fh.write(f"value {value:.17g}\n")
            fh.write("x " + " ".join(f"{v:.17g}" for v in x) + "\n")
            fh.write("y " + " ".join(f"{v:.17g}" for v in y) + "\n")
        print(f"rep {rep}: value {value:.6g}  width {trace.records[-1].gap:.3e}  "
              f"certified {trace.meta['certified']}  iters {trace.meta['T_run']}")
        print(f"  x {np.array2string(x, precision=4)}")
        print(f"  y {np.array2string(y, precision=4)}")
        print(f"wrote {csv_path}")
        print(f"wrote {strat_path}")
    return 0


def cmd_sweep(args) -> int:
    if not args.config:
        raise ConfigError("sweep requires --config with a sweep section")
    cfg = build_experiment(_table(args))
    res = run_sweep(cfg)
    if res.report is not None:
        print(f"slope {res.report.slope:.4f}")
        print(f"intercept {res.report.intercept:.4f}")
        print(f"r_squared {res.report.r_squared:.6f}")
    for p in (res.tsv_path, res.fit_path, res.plot_path):
        if p:
            print(f"wrote {p}")
    return 0


def cmd_regimes(args) -> int:
    table = _table(args)
    m_text = table.get("regimes.m_values", "")
    e_text = table.get("regimes.eps_values", "")
    m_vals = [float(t) for t in m_text.replace(",", " ").split()] if m_text else list(
        np.geomspace(1.0, 1e7, 15)
    )
    e_vals = [float(t) for t in e_text.replace(",", " ").split()] if e_text else list(
        np.geomspace(1e-4, 0.5, 15)
    )
    out = table.get("run.out", "out")
    os.makedirs(out, exist_ok=True)
    tsv_path = os.path.join(out, "regimes.tsv")
    text = emit_zsg_regimes(m_vals, e_vals, path=tsv_path)
    print(f"wrote {tsv_path}")
    try:
        from .plots import render_regimes_plot

        png_path = os.path.join(out, "regimes.png")
        render_regimes_plot(text, png_path)
        print(f"wrote {png_path}")
    except ImportError:
        pass
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qzero",
        description="Noisy-oracle gradient estimation, first-order methods, and "
        "eigenvalue-reduction solvers for SDP/LP/zero-sum games.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("grad-est", help="run an estimation backend, report bias/variance")
    _add_common(p)
    p.set_defaults(func=cmd_grad_est)

    p = sub.add_parser("solve", help="run a first-order method on a black-box problem")
    _add_common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sdp", help="solve an SDP instance file (dual certificate)")
    p.add_argument("instance", nargs="?", help="path to a .sdp file")
    _add_common(p)
    p.set_defaults(func=cmd_sdp)

    p = sub.add_parser("lp", help="solve an LP instance file (dual certificate)")
    p.add_argument("instance", nargs="?", help="path to a .lp file")
    _add_common(p)
    p.set_defaults(func=cmd_lp)

    p = sub.add_parser("zsg", help="solve a zero-sum game (built-in name or payoff CSV)")
    p.add_argument("instance", nargs="?", help="game name or CSV path")
    _add_common(p)
    p.set_defaults(func=cmd_zsg)

    p = sub.add_parser("sweep", help="T or theta sweep with a rate fit")
    _add_common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("regimes", help="emit zero-sum-game cost-regime data")
    _add_common(p)
    p.set_defaults(func=cmd_regimes)

    return parser


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DomainError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (NumericError, ResourceError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
