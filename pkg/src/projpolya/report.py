"""Delimited-table, manifest, and figure output for the command line tools.

Tables are comma-separated with a header row and shortest-roundtrip float
formatting, so identical runs produce byte-identical files. Figures are
rendered with matplotlib to whatever format the file extension selects
(the CLI uses SVG).
"""

from __future__ import annotations

import csv
import json
import platform
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "projpolya"  # deterministic SVG ids

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "fmt",
    "write_table",
    "write_manifest",
    "density_figure",
    "paths_figure",
    "angles_figure",
    "lpml_grid_figure",
]


def _save(fig, path):
    # strip the creation date so identical runs give identical bytes
    meta = {"Date": None} if str(path).endswith(".svg") else None
    fig.savefig(path, metadata=meta)
    plt.close(fig)


def fmt(value) -> str:
    """Deterministic cell formatting: shortest roundtrip for floats."""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_table(path, header, rows) -> Path:
    """Write a comma-separated table with a header row."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])
    return path


def versions() -> dict:
    import numpy
    import scipy

    from . import __version__

    return {
        "version.projpolya": __version__,
        "version.numpy": numpy.__version__,
        "version.scipy": scipy.__version__,
        "version.python": platform.python_version(),
    }


def write_manifest(path, entries: dict) -> Path:
    """Write a flat key-value manifest as sorted JSON."""
    flat = {}
    for key, value in entries.items():
        if isinstance(value, (np.integer,)):
            value = int(value)
        elif isinstance(value, (np.floating,)):
            value = float(value)
        elif isinstance(value, Path):
            value = str(value)
        elif isinstance(value, tuple):
            value = list(value)
        flat[key] = value
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        json.dump(flat, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _close_curve(theta, values):
    # prepend the wrap point so the plotted curve joins at 0/2*pi
    return np.concatenate([[0.0], theta]), np.concatenate([[values[-1]], values])


def density_figure(path, grid, mean, lower=None, upper=None, data_angles=None, title=None) -> Path:
    """Density estimate with optional credible band and data histogram."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    if data_angles is not None:
        ax.hist(data_angles, bins=24, range=(0.0, 2 * np.pi), density=True,
                color="0.85", edgecolor="0.6", label="data")
    th, f = _close_curve(grid, mean)
    ax.plot(th, f, color="C0", lw=1.8, label="posterior mean")
    if lower is not None and upper is not None:
        ax.plot(*_close_curve(grid, lower), color="C0", lw=1.0, ls=":", label="95% CI")
        ax.plot(*_close_curve(grid, upper), color="C0", lw=1.0, ls=":")
    ax.set_xlim(0.0, 2 * np.pi)
    ax.set_xlabel(r"$\theta$ (radians)")
    ax.set_ylabel("density")
    if title:
        ax.set_title(title)
    ax.legend(loc="best", fontsize=9)
    fig.tight_layout()
    _save(fig, path)
    return Path(path)


def paths_figure(path, grid, paths, title=None) -> Path:
    """One line per simulated prior density path."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for row in paths:
        ax.plot(*_close_curve(grid, row), lw=0.9, alpha=0.8)
    ax.set_xlim(0.0, 2 * np.pi)
    ax.set_xlabel(r"$\theta$ (radians)")
    ax.set_ylabel("density")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    _save(fig, path)
    return Path(path)


def angles_figure(path, angles, title=None) -> Path:
    """Histogram of a sample of angles."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.hist(angles, bins=30, range=(0.0, 2 * np.pi), density=True, color="0.75", edgecolor="0.4")
    ax.set_xlim(0.0, 2 * np.pi)
    ax.set_xlabel(r"$\theta$ (radians)")
    ax.set_ylabel("frequency density")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    _save(fig, path)
    return Path(path)


def lpml_grid_figure(path, rows, title=None) -> Path:
    """Score-per-cell lines, one per centering location.

    rows: iterables of (mu_label, alpha, lpml).
    """
    by_mu: dict = {}
    for mu_label, alpha, score in rows:
        by_mu.setdefault(mu_label, []).append((alpha, score))
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for mu_label, cells in by_mu.items():
        cells.sort()
        ax.plot([a for a, _ in cells], [s for _, s in cells], marker="o", label=f"mu={mu_label}")
    ax.set_xlabel(r"$\alpha$")
    ax.set_ylabel("LPML")
    if title:
        ax.set_title(title)
    ax.legend(loc="best", fontsize=9)
    fig.tight_layout()
    _save(fig, path)
    return Path(path)
