"""Figure rendering for sweep reports and mixed-state clouds.

Figures are drawn with matplotlib's Agg backend and written as SVG next to
the delimited output.  Creation timestamps are stripped so artifact
directories stay comparable across reruns.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .mixed_state import TRIANGLE_VERTICES, embed_points

matplotlib.rcParams["svg.hashsalt"] = "qmsp"


def save_figure(fig, path) -> None:
    """Write an SVG (or other inferred format) without volatile metadata."""
    metadata = {"Date": None} if str(path).endswith(".svg") else None
    fig.savefig(path, metadata=metadata, bbox_inches="tight")
    plt.close(fig)


def entropy_curve_figure(thetas, rates, reference_rate=None):
    """Entropy rate of the measured process as a function of the polar angle."""
    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    ax.plot(thetas, rates, color="tab:blue", lw=1.2,
            label="measured entropy rate")
    if reference_rate is not None:
        ax.axhline(reference_rate, color="tab:red", lw=1.0, ls="--",
                   label="source entropy rate")
    ax.set_xlabel(r"measurement angle $\theta$ (rad)")
    ax.set_ylabel("entropy rate (bits/symbol)")
    ax.set_xlim(min(thetas), max(thetas))
    ax.legend(frameon=False, fontsize=9)
    ax.spines["top"].set_visible(False)
    ax.spines["right"].set_visible(False)
    fig.tight_layout()
    return fig


def cloud_figure(points, title=None, max_points=300_000):
    """Scatter of mixed states in the planar simplex embedding.

    The scatter layer is rasterized so SVG files stay small for large clouds.
    """
    pts = embed_points(np.asarray(points))
    if pts.shape[0] > max_points:
        pts = pts[:: pts.shape[0] // max_points + 1]
    fig, ax = plt.subplots(figsize=(4.5, 4.2))
    if pts.shape[1] == 1:
        ax.plot(pts[:, 0], np.zeros_like(pts[:, 0]), ".", ms=1.0, alpha=0.4,
                color="tab:purple", rasterized=True)
    else:
        ax.plot(pts[:, 0], pts[:, 1], ".", ms=0.6, alpha=0.35,
                color="tab:purple", rasterized=True)
        triangle = np.vstack([TRIANGLE_VERTICES, TRIANGLE_VERTICES[0]])
        ax.plot(triangle[:, 0], triangle[:, 1], color="0.4", lw=0.8)
        for label, (x, y), dy in zip("ABC", TRIANGLE_VERTICES, (-0.03, -0.03, 0.03)):
            ax.text(x, y + dy, label, ha="center", fontsize=9, color="0.3")
    ax.set_aspect("equal")
    ax.axis("off")
    if title:
        ax.set_title(title, fontsize=10)
    fig.tight_layout()
    return fig
