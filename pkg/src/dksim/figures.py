"""Figure rendering for the report path: every CSV an experiment emits gets a
companion PNG next to it. Rendering is file-only (Agg backend, batch use)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .records import TrajectoryRecord

__all__ = [
    "trajectory_figure",
    "field_figure",
    "series_figure",
    "ladder_figure",
    "compare_figure",
    "kernel_spectrum_figure",
    "entropy_figure",
]

_DPI = 150


def _save(fig, path) -> Path:
    path = Path(path)
    fig.savefig(path, dpi=_DPI, bbox_inches="tight")
    plt.close(fig)
    return path


def trajectory_figure(rec: TrajectoryRecord, path) -> Path:
    fig, axes = plt.subplots(2, 2, figsize=(9, 6), sharex=True)
    panels = [
        ("mass", rec.mass, "mass"),
        ("entropy", rec.entropy, "entropy"),
        ("dissipation", rec.dissipation, r"$\int |\nabla\sqrt{\rho}|^2$"),
        ("min_rho", rec.min_rho, r"$\min \rho$"),
    ]
    for ax, (name, series, label) in zip(axes.ravel(), panels):
        ax.plot(rec.times, series, lw=1.0)
        ax.set_ylabel(label)
        ax.grid(alpha=0.3)
    for ax in axes[-1]:
        ax.set_xlabel("t")
    fig.suptitle(f"run diagnostics (seed {rec.seed})")
    return _save(fig, path)


def field_figure(field_values: np.ndarray, path, title: str = "") -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    if field_values.ndim == 1:
        x = np.arange(len(field_values)) / len(field_values)
        ax.plot(x, field_values, lw=1.2)
        ax.set_xlabel("x")
    else:
        im = ax.imshow(field_values.T, origin="lower", extent=(0, 1, 0, 1), cmap="viridis")
        fig.colorbar(im, ax=ax)
    if title:
        ax.set_title(title)
    return _save(fig, path)


def series_figure(times, series_map: dict[str, np.ndarray], path, ylabel: str = "", logy: bool = False) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, series in series_map.items():
        ax.plot(times, series, lw=1.2, label=label)
    ax.set_xlabel("t")
    if ylabel:
        ax.set_ylabel(ylabel)
    if logy:
        ax.set_yscale("log")
    if len(series_map) > 1:
        ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    return _save(fig, path)


def ladder_figure(rows: list[dict], path) -> Path:
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
    for ladder in sorted({r["ladder"] for r in rows}):
        pts = [r for r in rows if r["ladder"] == ladder]
        levels = [r["level"] for r in pts]
        diffs = [r["l1_diff_prev"] for r in pts if not np.isnan(r["l1_diff_prev"])]
        ax1.plot(levels[1:], diffs, "o-", label=ladder)
        ax2.plot(levels, [r["budget"] for r in pts], "s-", label=ladder)
    ax1.set_yscale("log")
    ax1.set_xlabel("level")
    ax1.set_ylabel(r"$L^1(T)$ Cauchy difference")
    ax2.set_xlabel("level")
    ax2.set_ylabel("entropy-dissipation budget")
    for ax in (ax1, ax2):
        ax.grid(alpha=0.3)
        ax.legend(fontsize=8)
    return _save(fig, path)


def compare_figure(counts, mean_distances, path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.loglog(counts, mean_distances, "o-")
    ax.set_xlabel("N")
    ax.set_ylabel(r"replica-mean $L^1$ distance")
    ax.grid(alpha=0.3, which="both")
    return _save(fig, path)


def kernel_spectrum_figure(kernel, path) -> Path:
    mags = np.sqrt(sum(np.abs(c) ** 2 for c in kernel.fourier_coefficients))
    shifted = np.fft.fftshift(mags)
    fig, ax = plt.subplots(figsize=(5, 4))
    n = kernel.grid.points
    if kernel.grid.dimension == 1:
        ks = np.arange(-n // 2, n // 2)
        ax.semilogy(ks, np.maximum(shifted, 1e-300), ".")
        ax.set_xlabel("k")
        ax.set_ylabel("|V^(k)|")
    else:
        im = ax.imshow(
            shifted.T, origin="lower", extent=(-n // 2, n // 2, -n // 2, n // 2), cmap="magma"
        )
        fig.colorbar(im, ax=ax)
        ax.set_xlabel("k1")
        ax.set_ylabel("k2")
    ax.set_title("kernel spectrum magnitude")
    return _save(fig, path)


def entropy_figure(report, path) -> Path:
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
    ax1.plot(report.times, report.entropy_series, label=r"$\int \Psi(\rho)$")
    ax1.plot(report.times, report.rho_log_rho_series, "--", label=r"$\int \rho \log \rho$")
    ax1.set_xlabel("t")
    ax1.legend(fontsize=8)
    ax1.grid(alpha=0.3)
    ax2.plot(report.times, report.dissipation_series)
    ax2.set_xlabel("t")
    ax2.set_ylabel(r"$\int |\nabla\sqrt{\rho}|^2$")
    ax2.grid(alpha=0.3)
    return _save(fig, path)
