"""Matplotlib SVG rendering for main-effect step plots and importance bars."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

_SVG_KWARGS = {"format": "svg", "metadata": {"Date": None}}


def _step_edges(edges, values):
    # extend the unbounded end bins by one typical bin width for display
    if not edges:
        return [0.0, 1.0]
    if len(edges) == 1:
        pad = max(abs(edges[0]), 1.0)
    else:
        pad = (edges[-1] - edges[0]) / (len(edges) - 1)
    return [edges[0] - pad, *edges, edges[-1] + pad]


def save_main_effect(effect, path) -> None:
    fig, ax = plt.subplots(figsize=(5, 3.2), constrained_layout=True)
    xs = _step_edges(list(effect.edges), effect.values)
    ax.stairs(effect.values, xs, baseline=None, color="#3B5BA5", linewidth=1.8)
    ax.axhline(0.0, color="#999999", linewidth=0.8, linestyle=":")
    ax.set_xlabel(effect.feature)
    ax.set_ylabel("centered effect (logit)")
    ax.set_title(f"Main effect: {effect.feature}")
    fig.savefig(path, **_SVG_KWARGS)
    plt.close(fig)


def save_importance(importance, path) -> None:
    fig, ax = plt.subplots(figsize=(5, 3.2), constrained_layout=True)
    order = sorted(range(len(importance.names)), key=lambda k: importance.share[k])
    ax.barh(
        [importance.names[k] for k in order],
        [importance.share[k] for k in order],
        color="#3B5BA5",
    )
    ax.set_xlabel("importance share")
    ax.set_title("Feature importance")
    fig.savefig(path, **_SVG_KWARGS)
    plt.close(fig)
