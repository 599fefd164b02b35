"""Figure rendering for experiment reports.

Renders the two standard views of a results sweep next to the CSV: mean
recovery error against sample size (one panel per coupling intensity) and
against coupling intensity at the largest sample size.
"""

from __future__ import annotations

from collections import defaultdict

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["plot_error_vs_n", "plot_error_vs_beta", "render_experiment_figures"]

_STYLES = {"rise": dict(color="tab:blue", marker="o"), "rple": dict(color="tab:orange", marker="s")}


def _mean_errors(rows: list[dict], key_fields: tuple[str, ...]) -> dict:
    """Mean max_abs_error over seeds, grouped by the given fields."""
    groups: dict[tuple, list[float]] = defaultdict(list)
    for row in rows:
        if row.get("error"):
            continue
        key = tuple(float(row[f]) if f != "method" else row[f] for f in key_fields)
        groups[key].append(float(row["max_abs_error"]))
    return {key: float(np.mean(vals)) for key, vals in groups.items()}


def plot_error_vs_n(rows: list[dict], out_path: str) -> None:
    """Log-log mean error vs n, one panel per beta, one line per method."""
    means = _mean_errors(rows, ("beta", "method", "n"))
    betas = sorted({key[0] for key in means})
    methods = sorted({key[1] for key in means})
    ncols = min(2, len(betas))
    nrows_fig = (len(betas) + ncols - 1) // ncols
    fig, axes = plt.subplots(
        nrows_fig, ncols, figsize=(5.0 * ncols, 3.6 * nrows_fig), squeeze=False
    )
    for ax, beta in zip(axes.flat, betas):
        for method in methods:
            pts = sorted(
                (key[2], val) for key, val in means.items()
                if key[0] == beta and key[1] == method
            )
            if pts:
                ns, errs = zip(*pts)
                ax.loglog(ns, errs, label=method.upper(), **_STYLES.get(method, {}))
        ax.set_title(f"beta = {beta:g}")
        ax.set_xlabel("sample size n")
        ax.set_ylabel("mean max abs error")
        ax.grid(True, which="both", alpha=0.3)
        ax.legend()
    for ax in axes.flat[len(betas):]:
        ax.set_visible(False)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def plot_error_vs_beta(rows: list[dict], out_path: str) -> None:
    """Semilog mean error vs beta at the largest sampled n."""
    all_n = {int(float(row["n"])) for row in rows if not row.get("error")}
    if not all_n:
        return
    n_star = max(all_n)
    means = _mean_errors(
        [row for row in rows if int(float(row["n"])) == n_star], ("beta", "method")
    )
    methods = sorted({key[1] for key in means})
    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    for method in methods:
        pts = sorted((key[0], val) for key, val in means.items() if key[1] == method)
        if pts:
            betas, errs = zip(*pts)
            ax.semilogy(betas, errs, label=method.upper(), **_STYLES.get(method, {}))
    ax.set_xlabel("coupling intensity beta")
    ax.set_ylabel("mean max abs error")
    ax.set_title(f"n = {n_star}")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def render_experiment_figures(rows: list[dict], csv_path: str) -> list[str]:
    """Render both views next to the results CSV; returns the paths."""
    stem = csv_path[:-4] if csv_path.endswith(".csv") else csv_path
    out = []
    usable = [row for row in rows if not row.get("error")]
    if not usable:
        return out
    path_n = f"{stem}_error_vs_n.png"
    plot_error_vs_n(usable, path_n)
    out.append(path_n)
    path_b = f"{stem}_error_vs_beta.png"
    plot_error_vs_beta(usable, path_b)
    out.append(path_b)
    return out
