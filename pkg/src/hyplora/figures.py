"""Matplotlib renderers for the CLI report path.

Figures are saved next to the delimited outputs; the TSVs remain the
authoritative full-precision record.  The Agg backend keeps rendering
headless-safe.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def fig_delta_histogram(delta_rels, path):
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.hist(np.asarray(delta_rels, dtype=float), bins=24, color="#2b6cb0", edgecolor="white")
    ax.set_xlabel(r"relative hyperbolicity $\delta_{rel}$")
    ax.set_ylabel("prompts")
    ax.set_xlim(0, 1)
    _save(fig, path)


def fig_frequency_ccdf(counts, fit, path):
    counts = np.sort(np.asarray(counts, dtype=float))
    ccdf = 1.0 - np.arange(counts.size) / counts.size
    fig, ax = plt.subplots(figsize=(5, 3.6))
    ax.loglog(counts, ccdf, ".", ms=3, color="#2b6cb0", label="empirical")
    if fit is not None:
        xs = np.geomspace(fit.x_min, counts.max(), 64)
        tail_frac = (counts >= fit.x_min).mean()
        model = tail_frac * ((xs - 0.5) / (fit.x_min - 0.5)) ** (1.0 - fit.gamma)
        ax.loglog(xs, model, "-", color="#c53030",
                  label=rf"fit $\gamma$={fit.gamma:.3g}, $x_{{min}}$={fit.x_min:g}")
        ax.legend(fontsize=8)
    ax.set_xlabel("token frequency")
    ax.set_ylabel("P(F >= f)")
    _save(fig, path)


def fig_norm_bins(bins, path):
    mids = [(b.lo + b.hi) / 2 for b in bins if b.count > 0]
    means = [b.mean_frequency for b in bins if b.count > 0]
    fig, ax = plt.subplots(figsize=(5, 3.6))
    ax.semilogy(mids, means, "o-", color="#2b6cb0", ms=4)
    ax.set_xlabel("embedding norm (bin midpoint)")
    ax.set_ylabel("mean token frequency")
    _save(fig, path)


def fig_deviation_bars(ks, tangent_devs, hyp_devs, path):
    idx = np.arange(len(ks))
    fig, ax = plt.subplots(figsize=(5, 3.6))
    ax.bar(idx - 0.2, tangent_devs, width=0.4, label="tangent rule", color="#2b6cb0")
    ax.bar(idx + 0.2, hyp_devs, width=0.4, label="hyperbolic rule", color="#c53030")
    ax.set_yscale("log")
    ax.set_xticks(idx, [f"K={k:g}" for k in ks])
    ax.set_ylabel("relative deviation from additive rule")
    ax.legend(fontsize=8)
    _save(fig, path)


def fig_loss_curves(reports: dict[str, list[float]], path):
    fig, ax = plt.subplots(figsize=(5, 3.6))
    for label, losses in reports.items():
        ax.plot(np.arange(len(losses)), losses, label=label)
    ax.set_xlabel("epoch")
    ax.set_ylabel("mean training loss")
    if reports:
        ax.legend(fontsize=8)
    _save(fig, path)
