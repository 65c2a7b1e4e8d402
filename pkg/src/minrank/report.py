"""Figures written next to the CSV output of the CLI."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.titlesize": 10,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 150,
    "savefig.bbox": "tight",
}


def _save(fig, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_sizes(rows: list[dict], path) -> Path:
    """Grouped bars of public-key bits per parameter set and generator."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(6.4, 3.2))
        x = np.arange(len(rows))
        width = 0.27
        for i, variant in enumerate((1, 2, 3)):
            vals = [row[f"pk{variant}"] for row in rows]
            bars = ax.bar(x + (i - 1) * width, vals, width, label=f"KeyGen{variant}")
            ax.bar_label(bars, fontsize=6, padding=1)
        ax.set_xticks(x, [row["name"] for row in rows], rotation=20)
        ax.set_ylabel("public key (bits)")
        ax.legend(frameon=False)
        return _save(fig, path)


def plot_reports(reports, path) -> Path:
    """Estimates with 3-sigma bars against their bounds; chi-square rows show -log10 p."""
    bounded = [r for r in reports if r.direction != "chi2"]
    chi2 = [r for r in reports if r.direction == "chi2"]
    ncols = 1 + bool(chi2) if bounded else 1
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(1, ncols, figsize=(4.2 * ncols, 0.35 * max(len(bounded), len(chi2), 3) + 1.2),
                                 squeeze=False)
        axes = axes[0]
        if bounded:
            ax = axes[0]
            y = np.arange(len(bounded))
            est = [float(r.estimate) for r in bounded]
            err = [3 * r.sigma for r in bounded]
            colors = ["tab:green" if r.verdict else "tab:red" for r in bounded]
            ax.errorbar(est, y, xerr=err, fmt="none", ecolor="0.4", capsize=2)
            ax.scatter(est, y, c=colors, zorder=3, s=14)
            ax.scatter([float(r.bound) for r in bounded], y, marker="|", c="k", s=80, label="bound")
            ax.set_yticks(y, [r.kind for r in bounded])
            ax.set_xlim(0, 1)
            ax.set_xlabel("empirical frequency")
            ax.legend(frameon=False, loc="lower center", bbox_to_anchor=(0.5, 1.0), ncol=1)
        if chi2:
            ax = axes[-1]
            y = np.arange(len(chi2))
            vals = [-np.log10(max(r.pvalue, 1e-300)) for r in chi2]
            ax.barh(y, vals, color=["tab:green" if r.verdict else "tab:red" for r in chi2])
            ax.axvline(3, color="k", lw=0.8, ls="--")
            ax.set_yticks(y, [r.kind for r in chi2])
            ax.set_xlabel("-log10 p (reject right of 3)")
        fig.tight_layout()
        return _save(fig, path)


def plot_bench(rows: list[dict], path) -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5.0, 0.3 * len(rows) + 1.0))
        y = np.arange(len(rows))
        ax.barh(y, [row["median_ms"] for row in rows], color="tab:blue", label="median")
        ax.scatter([row["p95_ms"] for row in rows], y, marker="|", c="k", s=60, label="p95", zorder=3)
        ax.set_yticks(y, [f"{row['set']} {row['op']}" for row in rows])
        ax.set_xlabel("ms")
        ax.legend(frameon=False)
        fig.tight_layout()
        return _save(fig, path)
