"""Static figures for CLT experiments (written to files, never shown)."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

FIGSIZE = (5.0, 4.0)
DPI = 120


def scaling_plot(fit, reference_slope: float, path, title: str = "") -> Path:
    """Log-log plot of mean |log_p mean_n| against n with the fitted line and a
    reference line of slope ``reference_slope`` through the last point."""
    n = np.asarray(fit.sizes, dtype=float)
    m = np.asarray(fit.mean_norms)
    err = np.asarray(fit.norm_stderrs)
    fig, ax = plt.subplots(figsize=FIGSIZE)
    ax.errorbar(n, m, yerr=2 * err, fmt="o", color="k", capsize=3, label="mean norm (2 s.e.)")
    used = np.asarray(fit.used_sizes, dtype=float)
    grid = np.geomspace(used.min(), used.max(), 50)
    ax.plot(grid, np.exp(fit.intercept) * grid**fit.slope, color="C0",
            label=f"fit slope {fit.slope:.3f} $\\pm$ {fit.stderr:.3f}")
    ref = m[-1] * (n / n[-1]) ** reference_slope
    ax.plot(n, ref, "--", color="C3", label=f"reference slope {reference_slope:.3f}")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("sample size n")
    ax.set_ylabel(r"mean $\|\log_p \hat\mu_n\|$")
    if title:
        ax.set_title(title)
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return path


def rescaled_scatter(rescaled, limit_draws, path, title: str = "", max_limit_points: int = 2000) -> Path:
    """First two tangent coordinates of the rescaled means against draws of H_# N."""
    rescaled = np.asarray(rescaled, dtype=float)
    limit_draws = np.asarray(limit_draws, dtype=float)[:max_limit_points]
    fig, ax = plt.subplots(figsize=FIGSIZE)
    ax.scatter(limit_draws[:, 0], limit_draws[:, 1], s=4, color="0.7", label="limit law draws")
    ax.scatter(rescaled[:, 0], rescaled[:, 1], s=10, color="C0", label="rescaled sample means")
    ax.set_xlabel("tangent coordinate 1")
    ax.set_ylabel("tangent coordinate 2")
    ax.set_aspect("equal", adjustable="datalim")
    if title:
        ax.set_title(title)
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return path
