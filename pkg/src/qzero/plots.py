"""Static figure rendering for traces, sweeps, and regime rasters.

Everything here is best-effort presentation on top of the delimited data
files, which remain the primary artifacts; nothing in the library depends
on this module.
"""

from __future__ import annotations

from typing import List, Sequence, Tuple

import numpy as np

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

__all__ = ["render_trace_plot", "render_sweep_plot", "render_regimes_plot"]


def render_trace_plot(record_lists: Sequence[Sequence], path: str, title: str = "trace"):
    """Gap (or f value when no gap is known) against iteration, one line per run."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0), dpi=120)
    for rep, records in enumerate(record_lists):
        its = [r.iter for r in records]
        gaps = np.array([r.gap for r in records], dtype=float)
        if np.all(np.isnan(gaps)):
            gaps = np.array([r.f_value for r in records], dtype=float)
            ax.set_ylabel("f value")
        else:
            ax.set_ylabel("optimality gap")
        ax.plot(its, gaps, lw=1.0, alpha=0.8, label=f"rep {rep}")
    finite = np.concatenate(
        [[r.gap for r in records] for records in record_lists]
    ) if record_lists else np.array([])
    finite = finite[np.isfinite(finite)]
    if finite.size and np.all(finite > 0):
        ax.set_yscale("log")
    ax.set_xlabel("iteration")
    ax.set_title(title)
    if len(record_lists) > 1:
        ax.legend(fontsize=7)
    ax.grid(True, which="both", lw=0.3, alpha=0.5)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def render_sweep_plot(
    points: Sequence[Tuple[float, float]],
    report,
    path: str,
    xlabel: str = "T",
):
    """Log-log medians with the fitted power law overlaid when available."""
    xs = np.array([p[0] for p in points], dtype=float)
    ys = np.array([p[1] for p in points], dtype=float)
    fig, ax = plt.subplots(figsize=(6.0, 4.0), dpi=120)
    ax.loglog(xs, ys, "o", ms=5, label="median final gap")
    if report is not None:
        grid = np.geomspace(xs.min(), xs.max(), 64)
        fit = np.exp(report.intercept) * grid**report.slope
        ax.loglog(
            grid, fit, "-", lw=1.2,
            label=f"slope {report.slope:.3f} (R$^2$={report.r_squared:.4f})",
        )
    ax.set_xlabel(xlabel)
    ax.set_ylabel("gap")
    ax.legend(fontsize=8)
    ax.grid(True, which="both", lw=0.3, alpha=0.5)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def render_regimes_plot(tsv_text: str, path: str):
    """Raster of the argmin cost label over the (m, 1/eps) grid."""
    lines = [ln for ln in tsv_text.splitlines() if ln]
    header = lines[0].split("\t")
    names: List[str] = header[2:-1]
    ms, epss, labels = [], [], {}
    for ln in lines[1:]:
        parts = ln.split("\t")
        m, eps = float(parts[0]), float(parts[1])
        ms.append(m)
        epss.append(eps)
        labels[(m, eps)] = names.index(parts[-1])
    m_vals = sorted(set(ms))
    e_vals = sorted(set(epss), reverse=True)  # rows indexed by 1/eps ascending
    grid = np.zeros((len(e_vals), len(m_vals)))
    for i, e in enumerate(e_vals):
        for j, m in enumerate(m_vals):
            grid[i, j] = labels.get((m, e), np.nan)
    fig, ax = plt.subplots(figsize=(6.0, 4.5), dpi=120)
    im = ax.imshow(grid, origin="lower", aspect="auto", cmap="viridis",
                   vmin=0, vmax=max(len(names) - 1, 1))
    ax.set_xticks(range(len(m_vals)))
    ax.set_xticklabels([f"{m:.0e}" for m in m_vals], rotation=45, fontsize=6)
    ax.set_yticks(range(len(e_vals)))
    ax.set_yticklabels([f"{1.0 / e:.0e}" for e in e_vals], fontsize=6)
    ax.set_xlabel("m (= n)")
    ax.set_ylabel("1/eps")
    cbar = fig.colorbar(im, ax=ax, ticks=range(len(names)))
    cbar.ax.set_yticklabels(names, fontsize=7)
    ax.set_title("cheapest cost formula by regime")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
