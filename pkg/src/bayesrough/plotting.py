"""Figure rendering for report bundles.

Figures are written with the Agg backend so reports render headless.
"""

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

# PNG metadata carries no timestamp, keeping reruns byte-identical.
_PNG_METADATA = {"Software": None}


def publication_axes(width=6.0, height=None):
    golden_ratio = (math.sqrt(5) - 1.0) / 2.0
    if not height:
        height = width * golden_ratio
    fig, ax = plt.subplots(figsize=(width, height), facecolor="w")
    ax.tick_params(labelsize=10)
    return fig, ax


def histogram_figure(hist, path, xlabel, title, ylabel="Frequency", vline=None, vline_label=None):
    """Draw a precomputed :class:`~bayesrough.sampler.Histogram` as bars."""
    fig, ax = publication_axes()
    edges = hist.edges
    if len(hist.counts):
        widths = edges[1:] - edges[:-1]
        # zero-width bins (all values equal) still need a visible bar
        widths = [w if w > 0 else 0.01 for w in widths]
        ax.bar(edges[:-1], hist.counts, width=widths, align="edge", color="0.55", edgecolor="k", linewidth=0.6)
    if vline is not None:
        ax.axvline(vline, color="C3", linestyle="--", linewidth=1.2, label=vline_label)
        if vline_label:
            ax.legend(frameon=False, fontsize=9)
    ax.set_xlabel(xlabel, fontsize=12)
    ax.set_ylabel(ylabel, fontsize=12)
    ax.set_title(title, fontsize=12)
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata=_PNG_METADATA)
    plt.close(fig)


def trace_figure(chain, path):
    """Accuracy and rule count of the retained models against chain step."""
    fig, (top, bottom) = plt.subplots(2, 1, figsize=(6.0, 4.5), sharex=True, facecolor="w")
    steps = list(chain.retained_steps)
    top.plot(steps, chain.accuracies, color="k", linewidth=0.7)
    top.set_ylabel("Accuracy", fontsize=11)
    bottom.plot(steps, chain.rule_counts, color="C0", linewidth=0.7)
    bottom.set_ylabel("Number of rules", fontsize=11)
    bottom.set_xlabel("Chain step", fontsize=11)
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata=_PNG_METADATA)
    plt.close(fig)
