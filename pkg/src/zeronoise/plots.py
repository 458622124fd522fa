"""Figure rendering for the CLI report path.

Figures are rasterized in memory with the Agg backend and returned as PNG
bytes so they flow through the same write-once artifact path as the CSV
tables. Rendering is deterministic for fixed inputs (no timestamps in the
PNG chunks), so plots participate in the byte-identity reproducibility
guarantee.
"""

from __future__ import annotations

import io

import matplotlib

matplotlib.use("Agg", force=True)

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_DPI = 120


def _render(fig) -> bytes:
    buf = io.BytesIO()
    fig.savefig(buf, format="png", dpi=_DPI)
    plt.close(fig)
    return buf.getvalue()


def density_plot(x: np.ndarray, curves: dict[str, np.ndarray], ylabel: str = "density") -> bytes:
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for label, vals in curves.items():
        ax.plot(x, vals, label=label)
    ax.set_xlabel("x")
    ax.set_ylabel(ylabel)
    ax.legend(loc="best", fontsize="small")
    fig.tight_layout()
    return _render(fig)


def convergence_plot(
    eps: np.ndarray,
    metrics: dict[str, np.ndarray],
    bounds: dict[str, np.ndarray] | None = None,
) -> bytes:
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    series = list(metrics.values()) + (list(bounds.values()) if bounds else [])
    # an exact family is identically zero; log axes would have no data
    log_scale = any(np.any(np.asarray(v) > 0) for v in series)
    plot = ax.loglog if log_scale else ax.plot
    for label, vals in metrics.items():
        plot(eps, vals, marker="o", label=label)
    if bounds:
        for label, vals in bounds.items():
            plot(eps, vals, linestyle="--", label=label)
    ax.set_xlabel("eps")
    ax.set_ylabel("residual norm")
    ax.legend(loc="best", fontsize="small")
    fig.tight_layout()
    return _render(fig)


def histogram_plot(
    centers: np.ndarray,
    masses: np.ndarray,
    reference_x: np.ndarray | None = None,
    reference_density: np.ndarray | None = None,
) -> bytes:
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    width = centers[1] - centers[0] if centers.size > 1 else 1.0
    ax.bar(centers, masses / width, width=width, alpha=0.6, label="occupation")
    if reference_x is not None and reference_density is not None:
        ax.plot(reference_x, reference_density, color="C3", label="reference")
    ax.set_xlabel("x")
    ax.set_ylabel("density")
    ax.legend(loc="best", fontsize="small")
    fig.tight_layout()
    return _render(fig)


def concentration_plot(eps: np.ndarray, outside_mass: np.ndarray) -> bytes:
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.semilogy(1.0 / np.asarray(eps), outside_mass, marker="o")
    ax.set_xlabel("1/eps")
    ax.set_ylabel("mass outside the ball")
    fig.tight_layout()
    return _render(fig)


def heatmap_plot(samples: np.ndarray, title: str = "") -> bytes:
    fig, ax = plt.subplots(figsize=(5.4, 4.6))
    im = ax.imshow(
        samples.T, origin="lower", extent=(0.0, 1.0, 0.0, 1.0), cmap="viridis"
    )
    fig.colorbar(im, ax=ax)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    return _render(fig)
