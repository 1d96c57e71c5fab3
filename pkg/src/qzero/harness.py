"""Experiment plumbing: config files, trace emission, rate fitting, regime data.

Config files are line-oriented ``section.key = value`` text (``#`` starts a
comment).  Recognized sections: ``problem`` (name= builtin or file= instance
path plus factory parameters), ``solver`` (method, epsilon, R, T, eta, r1,
rho, sigma_schedule, x0, c_qmp), ``oracle`` (theta, mode, seed), ``run``
(backend, repetitions, out), ``sweep`` (kind, values), ``regimes``
(m_values, eps_values).

Each repetition runs with an independently derived seed and its own oracle;
traces are written one CSV per repetition plus a recomputable summary.
Wallclock is measured but excluded from determinism comparisons.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigError
from .geometry import (
    MirrorGeometry,
    euclidean_geometry,
    simplex_geometry,
    spectraplex_geometry,
)
from .oracles import NoisyOracle, ObjectiveSpec
from .problems import GAMES, make_objective
from .solvers import RunTrace, SolverConfig, TraceRecord, default_radius, solve, solver_theta_budget
from .whitebox import (
    load_lp,
    load_sdp,
    load_zsg,
    save_certificate,
    solve_lp,
    solve_sdp_dual,
    solve_zsg,
)

__all__ = [
    "ExperimentConfig",
    "SlopeReport",
    "SweepResult",
    "parse_config_text",
    "load_config",
    "build_experiment",
    "run_experiment",
    "fit_rate",
    "emit_zsg_regimes",
    "run_sweep",
    "write_trace_csv",
    "read_trace_csv",
    "strip_wallclock",
    "pick_geometry",
    "epsilon_for_iterations",
    "derive_seed",
]

TRACE_COLUMNS = ("iter", "f_value", "gap", "charged_queries", "actual_evals", "wallclock_ms")


# ---------------------------------------------------------------------------
# config parsing


def parse_config_text(text: str) -> Dict[str, str]:
    """``section.key = value`` lines to a flat dict; later keys win."""
    table: Dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'section.key = value', got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if "." not in key or not key.split(".", 1)[1]:
            raise ConfigError(f"line {lineno}: key {key!r} is not of the form section.key")
        table[key] = value.strip()
    return table


def load_config(path: str) -> Dict[str, str]:
    if not os.path.exists(path):
        raise ConfigError(f"config file does not exist: {path}")
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read())


def _section(table: Dict[str, str], name: str) -> Dict[str, str]:
    prefix = name + "."
    return {k[len(prefix):]: v for k, v in table.items() if k.startswith(prefix)}


def _as_float(section: str, key: str, value: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"{section}.{key} must be a number, got {value!r}") from None


def _as_int(section: str, key: str, value: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"{section}.{key} must be an integer, got {value!r}") from None


def _as_floats(section: str, key: str, value: str) -> List[float]:
    try:
        return [float(tok) for tok in value.replace(",", " ").split()]
    except ValueError:
        raise ConfigError(f"{section}.{key} must be a list of numbers, got {value!r}") from None


@dataclass
class ExperimentConfig:
    problem: Dict[str, str]
    solver: Dict[str, str]
    oracle: Dict[str, str]
    backend: str = "surrogate"
    repetitions: int = 1
    out_dir: str = "out"
    raw: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.repetitions < 1:
            raise ConfigError(f"repetitions must be >= 1, got {self.repetitions}")
        if "name" not in self.problem and "file" not in self.problem:
            raise ConfigError("problem needs either problem.name or problem.file")
        path = self.problem.get("file")
        if path is not None and not os.path.exists(path):
            raise ConfigError(f"instance file does not exist: {path}")


def build_experiment(table: Dict[str, str], overrides: Optional[Dict[str, str]] = None) -> ExperimentConfig:
    """Flat config table (plus CLI overrides) to a validated ExperimentConfig."""
    merged = dict(table)
    if overrides:
        merged.update({k: v for k, v in overrides.items() if v is not None})
    run = _section(merged, "run")
    return ExperimentConfig(
        problem=_section(merged, "problem"),
        solver=_section(merged, "solver"),
        oracle=_section(merged, "oracle"),
        backend=run.get("backend", "surrogate"),
        repetitions=_as_int("run", "repetitions", run.get("repetitions", "1")),
        out_dir=run.get("out", "out"),
        raw=merged,
    )


# ---------------------------------------------------------------------------
# building blocks


_OBJECTIVE_INT_KEYS = {"d"}


def build_objective(problem: Dict[str, str]) -> ObjectiveSpec:
    name = problem.get("name")
    if name is None:
        raise ConfigError("problem.name required for a built-in objective")
    if name in GAMES:
        raise ConfigError(f"{name!r} is a game; use the zsg path")
    kwargs = {}
    for key, value in problem.items():
        if key in ("name", "file"):
            continue
        if key in _OBJECTIVE_INT_KEYS:
            kwargs[key] = _as_int("problem", key, value)
        else:
            kwargs[key] = _as_float("problem", key, value)
    return make_objective(name, **kwargs)


def pick_geometry(problem: ObjectiveSpec, method: str) -> MirrorGeometry:
    """Mirror map matched to the domain for the entropy-capable methods."""
    dom = problem.domain
    if method in ("qmd", "qda", "qmp"):
        if dom.kind == "simplex":
            return simplex_geometry(problem.d, scale=dom.scale)
        if dom.kind == "spectraplex":
            return spectraplex_geometry(dom.n)
    return euclidean_geometry(problem.d)


def build_solver_config(solver: Dict[str, str], *, seed: int, backend: str) -> SolverConfig:
    if "method" not in solver:
        raise ConfigError("solver.method is required")
    if "epsilon" not in solver:
        raise ConfigError("solver.epsilon is required")
    kwargs = {}
    for key in ("R", "T", "eta", "r1", "rho", "c_qmp"):
        if key in solver:
            kwargs[key] = (
                _as_int("solver", key, solver[key])
                if key == "T"
                else _as_float("solver", key, solver[key])
            )
    if "sigma_schedule" in solver:
        kwargs["sigma_schedule"] = _as_floats("solver", "sigma_schedule", solver["sigma_schedule"])
    if "x0" in solver:
        kwargs["x0"] = np.array(_as_floats("solver", "x0", solver["x0"]))
    return SolverConfig(
        method=solver["method"],
        epsilon=_as_float("solver", "epsilon", solver["epsilon"]),
        seed=seed,
        backend=backend,
        **kwargs,
    )


def derive_seed(base: int, rep: int) -> int:
    """Stable per-repetition seed stream, independent across reps."""
    return int(np.random.SeedSequence([int(base), int(rep)]).generate_state(1)[0])


# ---------------------------------------------------------------------------
# trace files


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def write_trace_csv(path: str, records: Sequence[TraceRecord]):
    lines = [",".join(TRACE_COLUMNS)]
    for r in records:
        lines.append(
            f"{r.iter},{_fmt(r.f_value)},{_fmt(r.gap)},"
            f"{r.charged_queries},{r.actual_evals},{_fmt(r.wallclock_ms)}"
        )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_trace_csv(path: str) -> List[TraceRecord]:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln for ln in fh.read().splitlines() if ln]
    if not lines or lines[0] != ",".join(TRACE_COLUMNS):
        raise ConfigError(f"not a trace CSV (bad header): {path}")
    out = []
    for ln in lines[1:]:
        it, fv, gap, cq, ae, wc = ln.split(",")
        out.append(
            TraceRecord(
                iter=int(it),
                f_value=float(fv),
                gap=float(gap),
                charged_queries=int(cq),
                actual_evals=int(ae),
                wallclock_ms=float(wc),
            )
        )
    return out


def strip_wallclock(text: str) -> str:
    """Trace CSV text minus the wallclock column (determinism comparisons)."""
    kept = []
    for ln in text.splitlines():
        if not ln:
            continue
        kept.append(",".join(ln.split(",")[:-1]))
    return "\n".join(kept) + "\n"


def _summary_text(final_gaps: Sequence[float], charged: Sequence[int], actual: Sequence[int]) -> str:
    gaps = np.asarray(final_gaps, dtype=float)
    q1, med, q3 = np.quantile(gaps, [0.25, 0.5, 0.75])
    lines = [
        f"runs {len(gaps)}",
        f"final_gap_q1 {_fmt(q1)}",
        f"final_gap_median {_fmt(med)}",
        f"final_gap_q3 {_fmt(q3)}",
        "final_gap_values " + " ".join(_fmt(g) for g in gaps),
        f"charged_queries_total {int(sum(charged))}",
        "charged_queries_values " + " ".join(str(int(c)) for c in charged),
        f"actual_evals_total {int(sum(actual))}",
    ]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# experiment runner


@dataclass
class RunArtifacts:
    traces: List[RunTrace]
    csv_paths: List[str]
    summary_path: str
    extra_paths: List[str] = field(default_factory=list)
    extras: List[object] = field(default_factory=list)
    plot_path: Optional[str] = None


def _run_one_builtin(cfg: ExperimentConfig, rep: int) -> RunTrace:
    seed = derive_seed(int(cfg.oracle.get("seed", "0")), rep)
    problem = build_objective(cfg.problem)
    scfg = build_solver_config(cfg.solver, seed=seed, backend=cfg.backend)
    oracle = NoisyOracle(
        problem,
        theta=_as_float("oracle", "theta", cfg.oracle.get("theta", "0")),
        noise_mode=cfg.oracle.get("mode", "hash"),
        seed=seed,
    )
    geom = pick_geometry(problem, scfg.method)
    return solve(problem, oracle, scfg, geom)


def _run_one_file(cfg: ExperimentConfig, rep: int) -> Tuple[RunTrace, Optional[object]]:
    seed = derive_seed(int(cfg.oracle.get("seed", "0")), rep)
    path = cfg.problem["file"]
    eps = _as_float("solver", "epsilon", cfg.solver.get("epsilon", "0.05"))
    theta = _as_float("oracle", "theta", cfg.oracle.get("theta", "0"))
    T = _as_int("solver", "T", cfg.solver["T"]) if "T" in cfg.solver else None
    ext = os.path.splitext(path)[1].lower()
    if ext == ".sdp":
        cert, trace = solve_sdp_dual(load_sdp(path), eps, oracle_theta=theta, seed=seed, T=T)
        return trace, cert
    if ext == ".lp":
        cert, trace = solve_lp(load_lp(path), eps, oracle_theta=theta, seed=seed, T=T)
        return trace, cert
    if ext in (".zsg", ".csv"):
        value, x, y, trace = solve_zsg(load_zsg(path), eps, oracle_theta=theta, seed=seed)
        return trace, (value, x, y)
    raise ConfigError(f"unrecognized instance extension {ext!r} for {path}")


def run_experiment(cfg: ExperimentConfig, render: bool = True) -> RunArtifacts:
    """Execute cfg.repetitions seeded runs; one CSV per run plus a summary."""
    os.makedirs(cfg.out_dir, exist_ok=True)
    is_file = "file" in cfg.problem
    if is_file:
        stem = os.path.splitext(os.path.basename(cfg.problem["file"]))[0]
    else:
        stem = cfg.solver.get("method", "run")

    traces: List[Optional[RunTrace]] = [None] * cfg.repetitions
    extras: List[object] = [None] * cfg.repetitions

    def work(rep: int):
        if is_file:
            traces[rep], extras[rep] = _run_one_file(cfg, rep)
        else:
            traces[rep] = _run_one_builtin(cfg, rep)

    if cfg.repetitions == 1:
        work(0)
    else:
        with ThreadPoolExecutor(max_workers=min(cfg.repetitions, 8)) as pool:
            list(pool.map(work, range(cfg.repetitions)))

    csv_paths, extra_paths = [], []
    for rep, trace in enumerate(traces):
        p = os.path.join(cfg.out_dir, f"{stem}_rep{rep}.csv")
        write_trace_csv(p, trace.records)
        csv_paths.append(p)
        extra = extras[rep]
        if extra is None:
            continue
        if isinstance(extra, tuple):  # zsg: (value, x, y)
            value, x, y = extra
            sp = os.path.join(cfg.out_dir, f"{stem}_rep{rep}.strat")
            with open(sp, "w", encoding="utf-8") as fh:
                fh.write(f"value {_fmt(value)}\n")
                fh.write("x " + " ".join(_fmt(v) for v in x) + "\n")
                fh.write("y " + " ".join(_fmt(v) for v in y) + "\n")
            extra_paths.append(sp)
        else:
            cp = os.path.join(cfg.out_dir, f"{stem}_rep{rep}.cert")
            save_certificate(cp, extra)
            extra_paths.append(cp)

    final_gaps = [t.records[-1].gap for t in traces]
    summary_path = os.path.join(cfg.out_dir, "summary.txt")
    with open(summary_path, "w", encoding="utf-8") as fh:
        fh.write(
            _summary_text(
                final_gaps,
                [t.charged_queries for t in traces],
                [t.actual_evals for t in traces],
            )
        )

    plot_path = None
    if render:
        try:
            from .plots import render_trace_plot

            plot_path = os.path.join(cfg.out_dir, "trace.png")
            render_trace_plot([t.records for t in traces], plot_path, title=stem)
        except ImportError:
            plot_path = None
    return RunArtifacts(
        traces=traces,
        csv_paths=csv_paths,
        summary_path=summary_path,
        extra_paths=extra_paths,
        extras=list(extras),
        plot_path=plot_path,
    )


# ---------------------------------------------------------------------------
# rate fitting


@dataclass
class SlopeReport:
    points: List[Tuple[float, float]]
    slope: float
    intercept: float
    r_squared: float


def fit_rate(points: Sequence[Tuple[float, float]]) -> SlopeReport:
    """Least-squares fit of log(gap) against log(T)."""
    pts = [(float(t), float(g)) for t, g in points]
    if len(pts) < 4:
        raise ConfigError(f"fit_rate needs >= 4 points, got {len(pts)}")
    if any(g <= 0 for _, g in pts) or any(t <= 0 for t, _ in pts):
        raise ConfigError("fit_rate needs positive T and gap values")
    logt = np.log([t for t, _ in pts])
    logg = np.log([g for _, g in pts])
    slope, intercept = np.polyfit(logt, logg, 1)
    pred = slope * logt + intercept
    ss_res = float(np.sum((logg - pred) ** 2))
    ss_tot = float(np.sum((logg - logg.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 and ss_res < 1e-24 else (1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0)
    return SlopeReport(points=pts, slope=float(slope), intercept=float(intercept), r_squared=r2)


# ---------------------------------------------------------------------------
# regime data


_REGIME_NAMES = ("lp_quantum", "classical", "game_quantum")


def emit_zsg_regimes(
    m_range: Sequence[float], eps_range: Sequence[float], path: Optional[str] = None
) -> str:
    """Cost-formula table over a (m, eps) grid with n = m, plus argmin labels."""
    m_range = [float(m) for m in m_range]
    eps_range = [float(e) for e in eps_range]
    if not m_range or not eps_range:
        raise ConfigError("regime ranges must be nonempty")
    if any(m <= 0 for m in m_range) or any(e <= 0 for e in eps_range):
        raise ConfigError("regime ranges must be positive")
    lines = ["m\teps\tlp_quantum\tclassical\tgame_quantum\tbest"]
    for m in m_range:
        n = m
        for eps in eps_range:
            costs = (
                m * math.sqrt(n) / eps**2,
                (m + n) / eps**2,
                math.sqrt(m + n) / eps**2.5 + 1.0 / eps**3,
            )
            best = _REGIME_NAMES[int(np.argmin(costs))]
            lines.append(
                f"{m:.10g}\t{eps:.10g}\t"
                + "\t".join(f"{c:.10g}" for c in costs)
                + f"\t{best}"
            )
    text = "\n".join(lines) + "\n"
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text


# ---------------------------------------------------------------------------
# sweeps


def epsilon_for_iterations(
    method: str, T: int, *, G: float, R: float, L: Optional[float] = None,
    mu: float = 1.0, c_qmp: float = 4.0,
) -> float:
    """Invert each method's T(epsilon) so a T sweep tracks its own rate."""
    if method == "qpsm":
        return 3.0 * R * G / math.sqrt(T)
    if method in ("qmd", "qda"):
        return 6.0 * G * R / (math.sqrt(mu) * math.sqrt(T))
    if method == "qgd_convex":
        if L is None:
            raise ConfigError("qgd_convex inversion needs L")
        return 4.0 * L * R**2 / T
    if method == "qmp":
        if L is None:
            raise ConfigError("qmp inversion needs L")
        return c_qmp * L * R**2 / (mu * T)
    raise ConfigError(f"no T-sweep inversion for method {method!r}")


@dataclass
class SweepResult:
    kind: str
    points: List[Tuple[float, float]]  # (swept value, median final gap)
    report: Optional[SlopeReport]
    tsv_path: str
    fit_path: Optional[str]
    plot_path: Optional[str]


def _median_final_gap(cfg: ExperimentConfig) -> Tuple[float, float]:
    """(median final gap, median charged queries) over cfg.repetitions runs."""
    traces = [None] * cfg.repetitions

    def work(rep):
        traces[rep] = _run_one_builtin(cfg, rep)

    if cfg.repetitions == 1:
        work(0)
    else:
        with ThreadPoolExecutor(max_workers=min(cfg.repetitions, 8)) as pool:
            list(pool.map(work, range(cfg.repetitions)))
    gaps = [t.records[-1].gap for t in traces]
    charged = [t.charged_queries for t in traces]
    return float(np.median(gaps)), float(np.median(charged))


def run_sweep(cfg: ExperimentConfig, render: bool = True) -> SweepResult:
    """T or theta sweep with fit_rate over the collected medians."""
    sweep = _section(cfg.raw, "sweep")
    kind = sweep.get("kind", "T")
    if kind not in ("T", "theta"):
        raise ConfigError(f"sweep.kind must be T or theta, got {kind!r}")
    if "values" not in sweep:
        raise ConfigError("sweep.values is required")
    values = _as_floats("sweep", "values", sweep["values"])
    if len(values) < 4:
        raise ConfigError("sweep needs >= 4 values for a rate fit")
    if "name" not in cfg.problem:
        raise ConfigError("sweeps support built-in problems only")
    os.makedirs(cfg.out_dir, exist_ok=True)

    problem = build_objective(cfg.problem)
    method = cfg.solver.get("method")
    if method is None:
        raise ConfigError("solver.method is required")
    geom = pick_geometry(problem, method)
    probe = build_solver_config(
        {**cfg.solver, "epsilon": cfg.solver.get("epsilon", "0.1")},
        seed=0, backend=cfg.backend,
    )
    R = default_radius(problem, geom, probe)

    points, rows = [], []
    for v in values:
        solver = dict(cfg.solver)
        oracle = dict(cfg.oracle)
        if kind == "T":
            T = int(round(v))
            eps_v = epsilon_for_iterations(
                method, T, G=problem.G, R=R, L=problem.L, mu=geom.mu, c_qmp=probe.c_qmp
            )
            solver["T"] = str(T)
            solver["epsilon"] = _fmt(eps_v)
            if oracle.get("theta") == "budget":
                K = problem.domain.diameter(geom.norm.p)
                budget = solver_theta_budget(
                    method, epsilon=eps_v, G=problem.G, d=problem.d, R=R,
                    mu=geom.mu, L=problem.L, K=K, norms=geom.norm,
                    sigma=min(eps_v / (4.0 * R * math.sqrt(problem.d)), problem.G),
                )
                oracle["theta"] = _fmt(budget)
        else:
            if oracle.get("theta") == "budget":
                raise ConfigError("theta sweep values are absolute; drop oracle.theta=budget")
            oracle["theta"] = _fmt(v)
            eps_v = _as_float("solver", "epsilon", cfg.solver.get("epsilon", "0.1"))
        sub = ExperimentConfig(
            problem=cfg.problem, solver=solver, oracle=oracle,
            backend=cfg.backend, repetitions=cfg.repetitions,
            out_dir=cfg.out_dir, raw=cfg.raw,
        )
        gap, charged = _median_final_gap(sub)
        points.append((v, gap))
        rows.append((v, eps_v, float(oracle.get("theta", "0") or 0.0), gap, charged))

    tsv_path = os.path.join(cfg.out_dir, "sweep.tsv")
    with open(tsv_path, "w", encoding="utf-8") as fh:
        fh.write("value\tepsilon\ttheta\tgap_median\tcharged_median\n")
        for v, eps_v, th, gap, charged in rows:
            fh.write(f"{v:.10g}\t{eps_v:.10g}\t{th:.10g}\t{_fmt(gap)}\t{charged:.10g}\n")

    report, fit_path = None, None
    positive = all(g > 0 for _, g in points)
    if len(points) >= 4 and positive:
        report = fit_rate(points)
        fit_path = os.path.join(cfg.out_dir, "fit.txt")
        with open(fit_path, "w", encoding="utf-8") as fh:
            fh.write(
                f"slope {_fmt(report.slope)}\nintercept {_fmt(report.intercept)}\n"
                f"r_squared {_fmt(report.r_squared)}\n"
            )

    plot_path = None
    if render:
        try:
            from .plots import render_sweep_plot

            plot_path = os.path.join(cfg.out_dir, "sweep.png")
            render_sweep_plot(points, report, plot_path, xlabel=kind)
        except ImportError:
            plot_path = None
    return SweepResult(
        kind=kind, points=points, report=report,
        tsv_path=tsv_path, fit_path=fit_path, plot_path=plot_path,
    )
