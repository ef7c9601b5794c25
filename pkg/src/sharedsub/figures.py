"""Matplotlib renderings written next to the delimited report files."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_METHOD_COLORS = {
    "ag": "tab:blue", "mch": "tab:orange", "lp": "tab:green", "sspd": "tab:red",
    "fg": "tab:purple", "see": "tab:brown", "zahm": "tab:gray",
}


def _sum_by_rep(records):
    """(method, j) -> list over repetitions of the objective-summed RMSE."""
    sums = {}
    for r in records:
        sums.setdefault((r.method, r.j, r.repetition), 0.0)
        sums[(r.method, r.j, r.repetition)] += r.rmse
    grouped = {}
    for (method, j, _rep), value in sorted(sums.items()):
        grouped.setdefault((method, j), []).append(value)
    return grouped


def render_rmse_boxplot(records, path, title="sum of reconstruction RMSEs"):
    """Boxplots of the objective-summed RMSE against subspace dimension."""
    grouped = _sum_by_rep(records)
    methods = sorted({m for m, _ in grouped}, key=lambda m: list(_METHOD_COLORS).index(m)
                     if m in _METHOD_COLORS else len(_METHOD_COLORS))
    ranks = sorted({j for _, j in grouped})
    fig, ax = plt.subplots(figsize=(1.8 + 1.6 * len(ranks), 4.0))
    width = 0.8 / max(len(methods), 1)
    for mi, method in enumerate(methods):
        positions = [j + (mi - (len(methods) - 1) / 2.0) * width for j in ranks]
        data = [grouped.get((method, j), [np.nan]) for j in ranks]
        color = _METHOD_COLORS.get(method, "black")
        bp = ax.boxplot(data, positions=positions, widths=width * 0.9, patch_artist=True,
                        manage_ticks=False)
        for box in bp["boxes"]:
            box.set_facecolor(color)
            box.set_alpha(0.6)
        for med in bp["medians"]:
            med.set_color("black")
        ax.plot([], [], color=color, label=method)
    ax.set_xticks(ranks)
    ax.set_xlabel("subspace dimension j")
    ax.set_ylabel("sum of RMSEs")
    ax.set_title(title)
    ax.legend(fontsize=8, ncol=2)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_summary_plot(table, path, method=""):
    """Scatter panels: each objective against the leading active coordinate
    (original and rank-1 reconstruction), then the output-space pairing with
    rank-1 and rank-2 reconstructions."""
    c = table.original.shape[1]
    n_panels = c + (1 if c >= 2 else 0)
    fig, axes = plt.subplots(1, n_panels, figsize=(4.0 * n_panels, 3.6))
    axes = np.atleast_1d(axes)
    for k in range(c):
        ax = axes[k]
        ax.scatter(table.as1, table.original[:, k], s=6, c="black", label="original")
        ax.scatter(table.as1, table.rank1[:, k], s=6, c="red", label="rank 1")
        ax.set_xlabel("AS1")
        ax.set_ylabel(f"f_{k + 1}")
        if k == 0:
            ax.legend(fontsize=8)
    if c >= 2:
        ax = axes[-1]
        ax.scatter(table.original[:, 0], table.original[:, 1], s=6, c="black", label="original")
        ax.scatter(table.rank1[:, 0], table.rank1[:, 1], s=6, c="red", label="rank 1")
        ax.scatter(table.rank2[:, 0], table.rank2[:, 1], s=6, c="green", label="rank 2")
        ax.set_xlabel("f_1")
        ax.set_ylabel("f_2")
        ax.legend(fontsize=8)
    fig.suptitle(method)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_normalization_compare(rows, path):
    """Mean summed RMSE per method and rank, normalized vs original gradients."""
    methods = sorted({r["method"] for r in rows})
    ranks = sorted({r["j"] for r in rows})
    fig, ax = plt.subplots(figsize=(2.0 + 1.6 * len(ranks), 4.0))
    for method in methods:
        color = _METHOD_COLORS.get(method, "black")
        norm = [next(r["mean_sum_rmse_normalized"] for r in rows
                     if r["method"] == method and r["j"] == j) for j in ranks]
        orig = [next(r["mean_sum_rmse_original"] for r in rows
                     if r["method"] == method and r["j"] == j) for j in ranks]
        ax.plot(ranks, norm, color=color, marker="o", label=f"{method} normalized")
        ax.plot(ranks, orig, color=color, marker="x", linestyle="--",
                label=f"{method} original")
    ax.set_xticks(ranks)
    ax.set_xlabel("subspace dimension j")
    ax.set_ylabel("mean sum of RMSEs")
    ax.set_title("normalization impact")
    ax.legend(fontsize=7, ncol=2)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
