"""Figure rendering for CLI runs: each delimited output gets a companion PNG."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .geometry import Geometry2


def _style(ax, xlabel: str, ylabel: str, title: str) -> None:
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(True, alpha=0.3)


def save_mask_figure(path: Path, xs, ys, outside, inside_domain, geom: Geometry2 | None) -> None:
    fig, ax = plt.subplots(figsize=(6, 5.5))
    img = np.where(inside_domain, np.where(outside, 0.0, 1.0), np.nan)
    extent = (xs[0], xs[-1], ys[0], ys[-1])
    pc = ax.imshow(img, origin="lower", extent=extent, cmap="RdBu_r", vmin=0, vmax=1)
    if geom is not None:
        for c in geom.cavities:
            poly = c.polygon(256)
            ax.plot(
                np.append(poly[:, 0], poly[0, 0]),
                np.append(poly[:, 1], poly[0, 1]),
                "k--", lw=1.2, label="true cavity",
            )
        poly = geom.outer.polygon(256)
        ax.plot(np.append(poly[:, 0], poly[0, 0]), np.append(poly[:, 1], poly[0, 1]), "k-", lw=0.8)
    ax.set_aspect("equal")
    _style(ax, "x", "y", "probe-scan verdict mask (red = inside/boundary)")
    fig.colorbar(pc, ax=ax, shrink=0.8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_trace_figure(path: Path, traces: np.ndarray, labels: list[str]) -> None:
    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    n = traces.shape[-1]
    for row, lab in zip(traces, labels):
        ax.semilogy(np.arange(1, n + 1), np.abs(row), marker="o", ms=3, label=lab)
    _style(ax, "n", "|I_n|", "indicator traces")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_sweep_figure(path: Path, s, closed, quad, title: str) -> None:
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6.5, 6), sharex=True)
    ax1.plot(s, closed, "-", lw=1.5, label="closed form")
    ax1.plot(s, quad, "o", ms=3, alpha=0.6, label="quadrature")
    _style(ax1, "", "value", title)
    ax1.legend()
    ax2.semilogy(s, np.abs(np.asarray(closed) - np.asarray(quad)) + 1e-300, ".-", lw=0.8)
    _style(ax2, "s (position along the axis)", "|difference|", "")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_oracle_figure(path: Path, n, numeric, oracle) -> None:
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6.5, 6), sharex=True)
    ax1.plot(n, oracle, "k-", lw=1.5, label="separation of variables")
    ax1.plot(n, numeric, "o", ms=4, alpha=0.7, label="boundary-integral solver")
    _style(ax1, "", "DtN eigenvalue", "concentric-disk Dirichlet-to-Neumann spectrum")
    ax1.legend()
    err = np.abs(np.asarray(numeric) - np.asarray(oracle))
    ax2.semilogy(n, err + 1e-300, ".-", lw=0.8)
    _style(ax2, "mode n", "absolute error", "")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_field_figure(path: Path, xs, ys, values: np.ndarray, title: str) -> None:
    fig, ax = plt.subplots(figsize=(6, 5.5))
    pc = ax.imshow(
        values, origin="lower", extent=(xs[0], xs[-1], ys[0], ys[-1]), cmap="viridis"
    )
    ax.set_aspect("equal")
    _style(ax, "x", "y", title)
    fig.colorbar(pc, ax=ax, shrink=0.8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
