"""Static SVG figures for the CLI reports."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

plt.rcParams.update({
    "svg.hashsalt": "viabkernel",
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "figure.figsize": (6.0, 4.2),
})

_SVG_META = {"Date": None}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_SVG_META)
    plt.close(fig)


def plot_kernel(path, grid=None, boundary=None, thresholds=None, trajectory=None, title=None):
    """Kernel raster (grey cells), closed-form kernel outline and an optional trajectory."""
    fig, ax = plt.subplots()
    if grid is not None:
        spec = grid.spec
        ax.imshow(
            grid.member.T.astype(float),
            origin="lower",
            extent=(spec.y_lo, spec.y_hi, spec.z_lo, spec.z_hi),
            aspect="auto",
            cmap="Greys",
            vmin=0.0,
            vmax=2.0,
            interpolation="nearest",
        )
    if boundary:
        by, bz = np.array(boundary).T
        floor = thresholds.z_min if thresholds is not None else bz.min()
        ax.fill_between(by, floor, bz, color="0.55", alpha=0.35, lw=0, label="closed-form kernel")
        ax.plot(by, bz, color="k", lw=1.0)
    if thresholds is not None:
        ax.axvline(thresholds.y_min, color="tab:red", ls="--", lw=0.8)
        ax.axhline(thresholds.z_min, color="tab:red", ls="--", lw=0.8, label="biomass floors")
    if trajectory is not None:
        ty = [s.y for s in trajectory.states]
        tz = [s.z for s in trajectory.states]
        ax.plot(ty, tz, "-o", color="tab:blue", ms=2.5, lw=0.8, label="trajectory")
        ax.plot(ty[:1], tz[:1], "s", color="tab:blue", ms=5)
    if grid is not None:
        ax.set_xlim(grid.spec.y_lo, grid.spec.y_hi)
        ax.set_ylim(grid.spec.z_lo, grid.spec.z_hi)
    ax.set_xlabel("prey biomass y (t)")
    ax.set_ylabel("predator biomass z (t)")
    if title:
        ax.set_title(title)
    if ax.get_legend_handles_labels()[0]:
        ax.legend(loc="upper right")
    _save(fig, path)


def plot_fit(path, obs, predicted_y, predicted_z):
    """Observed biomasses against one-step-ahead predictions of the fitted model."""
    fig, axes = plt.subplots(1, 2, figsize=(8.0, 3.4))
    for ax, observed, pred, label in (
        (axes[0], obs.y_obs, predicted_y, "prey"),
        (axes[1], obs.z_obs, predicted_z, "predator"),
    ):
        ax.plot(obs.years, observed, "o", color="k", ms=3.5, label="observed")
        ax.plot(obs.years[1:], pred, "-", color="tab:blue", lw=1.0, label="fitted")
        ax.set_xlabel("year")
        ax.set_ylabel(f"{label} biomass (t)")
        ax.legend()
    _save(fig, path)


def plot_objective(path, history):
    fig, ax = plt.subplots(figsize=(5.0, 3.2))
    ax.semilogy(np.arange(len(history)), np.maximum(history, 1e-300), color="k", lw=1.0)
    ax.set_xlabel("iteration")
    ax.set_ylabel("weighted SSR")
    _save(fig, path)
