"""File-backed figure rendering for reports and gridded output.

Everything draws through the Agg backend; functions return the path they
wrote.  Reports get a per-kind chart where one is meaningful and a metric
bar chart otherwise.
"""

from __future__ import annotations

import re
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402


def render_curve(out_path, x, y, xlabel: str, ylabel: str, title: str = "",
                 loglog: bool = False, ref_slope: float | None = None):
    """Single curve to PNG; optional reference power law through the first point."""
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    plot = ax.loglog if loglog else ax.plot
    plot(x, y, "o-", ms=3.5)
    if ref_slope is not None and loglog and len(x) and y[0] > 0:
        xx = np.asarray(x, dtype=float)
        ax.loglog(xx, y[0] * (xx / xx[0]) ** ref_slope, "--", lw=1,
                  label="slope %.3g" % ref_slope)
        ax.legend(fontsize=8)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title, fontsize=10)
    fig.tight_layout()
    fig.savefig(out_path, dpi=130)
    plt.close(fig)
    return Path(out_path)


def _series(report, pattern):
    """Metrics matching a regex with one integer group, as (key, metric) pairs."""
    rex = re.compile(pattern)
    out = []
    for m in report.metrics:
        hit = rex.fullmatch(m.name)
        if hit:
            out.append((int(hit.group(1)), m))
    return sorted(out, key=lambda kv: kv[0])


def _bars(report, ax):
    names = [m.name for m in report.metrics]
    vals = [0.0 if m.value is None else float(m.value)
            for m in report.metrics]
    pos = np.arange(len(names))
    colors = ["#777777" if m.passed is None
              else ("#2b8a3e" if m.passed else "#c92a2a")
              for m in report.metrics]
    ax.barh(pos, vals, color=colors)
    for i, m in enumerate(report.metrics):
        if m.tolerance is not None:
            ax.plot([m.tolerance], [i], "k|", ms=12)
    ax.set_yticks(pos, names, fontsize=7)
    ax.invert_yaxis()
    ax.set_xlabel("value (ticks: tolerance)")


def render_report(report, out_dir) -> Path | None:
    out = Path(out_dir) / (report.experiment + ".png")
    kind = report.kind
    if kind == "marginal_convergence":
        seeds = sorted({int(m.name.split("_s")[-1]) for m in report.metrics
                        if re.fullmatch(r"ks_n\d+_s\d+", m.name)})
        if not seeds:
            return None
        fig, ax = plt.subplots(figsize=(5.0, 3.4))
        for j in seeds:
            pts = _series(report, r"ks_n(\d+)_s%d" % j)
            ax.loglog([n for n, _ in pts], [m.value for _, m in pts], "o-",
                      label="seed %d" % j, ms=4)
        tol = next((m.tolerance for m in report.metrics
                    if m.name.startswith("ks_final")), None)
        if tol:
            ax.axhline(tol, color="k", ls="--", lw=1)
        ax.set_xlabel("n")
        ax.set_ylabel("KS distance")
        ax.legend(fontsize=8)
        fig.tight_layout()
        fig.savefig(out, dpi=130)
        plt.close(fig)
        return out
    if kind == "exit_scaling":
        pts = _series(report, r"mean_ratio_r(\d+)")
        if pts:
            fig, ax = plt.subplots(figsize=(5.0, 3.4))
            rr = [r for r, _ in pts]
            ax.errorbar(rr, [m.value for _, m in pts],
                        yerr=[3 * (m.stderr or 0) for _, m in pts],
                        fmt="o-", capsize=3)
            ax.set_xscale("log")
            ax.set_xlabel("r")
            ax.set_ylabel("mean exit time / r^alpha")
            fig.tight_layout()
            fig.savefig(out, dpi=130)
            plt.close(fig)
            return out
    if kind == "oscillation_decay":
        pts = _series(report, r"osc_k(\d+)")
        if pts:
            return render_curve(out, [k for k, _ in pts],
                                [max(m.value, 1e-300) for _, m in pts],
                                "nesting level", "oscillation",
                                loglog=False)
    fig, ax = plt.subplots(figsize=(6.0, 0.6 + 0.28 * len(report.metrics)))
    _bars(report, ax)
    fig.tight_layout()
    fig.savefig(out, dpi=130)
    plt.close(fig)
    return out
