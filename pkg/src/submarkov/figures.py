"""Figure rendering for CLI reports.

Each report command can drop a PNG next to its delimited output.
matplotlib is imported lazily so plain report runs never pay for it.
"""

from __future__ import annotations

import math
from typing import Mapping, Optional, Sequence


def _plt():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def components_figure(sizes: Sequence[int], path) -> None:
    """Component size profile, largest first."""
    plt = _plt()
    ordered = sorted(sizes, reverse=True)
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.bar(range(len(ordered)), ordered, color="#4878d0")
    ax.set_xlabel("component (by size rank)")
    ax.set_ylabel("sentences")
    ax.set_title(f"{len(ordered)} components, {sum(ordered)} sentences")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def energy_figure(labels: Sequence[str], energies: Sequence[Sequence[float]], path) -> None:
    """Heatmap of per-sentence energies, one column per free pair."""
    plt = _plt()
    import numpy as np

    data = np.asarray(energies, dtype=float)
    if data.size == 0:
        data = np.zeros((len(energies) or 1, 1))
    fig_h = max(3.0, 0.22 * data.shape[0] + 1.5)
    fig, ax = plt.subplots(figsize=(6, min(fig_h, 12)))
    im = ax.imshow(data, aspect="auto", cmap="viridis")
    ax.set_xlabel("free pair")
    ax.set_ylabel("sentence (canonical order)")
    if data.shape[0] <= 40:
        ax.set_yticks(range(len(labels)))
        ax.set_yticklabels(labels, fontsize=6)
    fig.colorbar(im, ax=ax, label="energy")
    ax.set_title("free-pair energies")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def mcmc_figure(
    state_labels: Sequence[str],
    visited_index: Sequence[int],
    empirical: Sequence[float],
    exact: Optional[Sequence[float]],
    path,
) -> None:
    """Trace of state indices plus empirical vs exact occupancy."""
    plt = _plt()
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    stride = max(1, len(visited_index) // 5000)
    ax1.plot(range(0, len(visited_index), stride), visited_index[::stride], lw=0.4)
    ax1.set_xlabel("step")
    ax1.set_ylabel("state index")
    ax1.set_title("trace")
    xs = range(len(state_labels))
    width = 0.4
    ax2.bar([x - width / 2 for x in xs], empirical, width=width, label="empirical")
    if exact is not None:
        ax2.bar([x + width / 2 for x in xs], exact, width=width, label="exact")
    ax2.set_xticks(list(xs))
    ax2.set_xticklabels(state_labels, rotation=90, fontsize=6)
    ax2.set_ylabel("probability")
    ax2.set_title("occupancy")
    ax2.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def fit_figure(history: Sequence[float], path) -> None:
    """Mean log-likelihood against iteration."""
    plt = _plt()
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(history, marker="o", ms=2.5)
    ax.set_xlabel("iteration")
    ax.set_ylabel("mean log-likelihood")
    ax.set_title("likelihood ascent")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def sample_length_figure(lengths: Sequence[int], r: float, path) -> None:
    """Sampled length histogram against the geometric law."""
    plt = _plt()
    from collections import Counter

    counts = Counter(lengths)
    n = len(lengths)
    max_l = max(counts)
    xs = list(range(1, max_l + 1))
    emp = [counts.get(l, 0) / n for l in xs]
    law = [r * (1 - r) ** (l - 1) for l in xs]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(xs, emp, width=0.6, label="empirical")
    ax.plot(xs, law, "o-", color="#d65f5f", label="geometric law")
    ax.set_xlabel("length")
    ax.set_ylabel("probability")
    ax.set_title(f"{n} draws")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def verify_figure(
    pair_labels: Sequence[str],
    exponents: Sequence[Optional[float]],
    spreads: Sequence[float],
    path,
) -> None:
    """Per-pair verified exponents with context spread as error bars."""
    plt = _plt()
    xs, ys, errs, labels = [], [], [], []
    for k, (label, e, sp) in enumerate(zip(pair_labels, exponents, spreads)):
        if e is None:
            continue
        xs.append(k)
        ys.append(e)
        errs.append(sp)
        labels.append(label)
    fig, ax = plt.subplots(figsize=(7, 4))
    if xs:
        ax.errorbar(range(len(xs)), ys, yerr=errs, fmt="o", capsize=3)
        ax.set_xticks(range(len(xs)))
        ax.set_xticklabels(labels, rotation=45, ha="right", fontsize=7)
    ax.axhline(0.0, color="gray", lw=0.5)
    ax.set_ylabel("substitute exponent")
    ax.set_title("verified exponents (bars: context spread)")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
