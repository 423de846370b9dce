"""Histogram and feature-scatter figures written straight to files."""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from qspeckle.report import normalized  # noqa: E402

STYLE = {
    "font.size": 10,
    "axes.labelsize": 10,
    "axes.linewidth": 0.8,
    "legend.fontsize": 8,
    "legend.frameon": False,
    "xtick.direction": "in",
    "ytick.direction": "in",
    "figure.dpi": 120,
    # stable ids and no timestamp, so identical inputs give identical files
    "svg.hashsalt": "qspeckle",
}

_METADATA = {".svg": {"Date": None}, ".pdf": {"CreationDate": None}, ".png": {"Software": None}}

_HIST_COLOR = "#9bb7d4"
_CURVE_COLOR = "#b2182b"

_XLABELS = {
    "I/mean": r"$I/\bar{I}$",
    "C/mean": r"$C/\bar{C}$",
    "(C-R)/mean": r"$(C-R)/\overline{(C-R)}$",
    "R/mean": r"$R/\bar{R}$",
    "g2": r"$g^{(2)}$",
    "g2-1": r"$g^{(2)}-1$",
}


def _overlay(ax, pdf, x):
    hi = np.percentile(x, 99.5) if pdf.on_half_line else pdf.support[1]
    grid = np.linspace(1e-6 * hi, hi, 400)
    y = np.asarray(pdf.pdf(grid), dtype=float)
    y[~np.isfinite(y)] = np.nan
    label = pdf.family.value + (f", d={pdf.d:g}" if pdf.on_half_line else "")
    ax.plot(grid, y, color=_CURVE_COLOR, lw=1.4, label=label)
    ax.legend(loc="upper right")


def histogram(x, path, xlabel, bins=50, pdf=None):
    x = np.asarray(x, dtype=float)
    x = x[np.isfinite(x)]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.2, 3.0))
        if x.size:
            hi = np.percentile(x, 99.5) if pdf is None or pdf.on_half_line else pdf.support[1]
            lo = min(0.0, x.min())
            ax.hist(x, bins=bins, range=(lo, max(hi, lo + 1e-12)), density=True,
                    color=_HIST_COLOR, edgecolor="white", linewidth=0.3)
            if pdf is not None:
                _overlay(ax, pdf, x)
        ax.set_xlabel(xlabel)
        ax.set_ylabel("probability density")
        fig.tight_layout()
        fig.savefig(path, metadata=_METADATA.get(Path(path).suffix.lower()))
        plt.close(fig)
    return Path(path)


def record_histograms(rs, refs, outdir, bins=50, fmt="svg") -> list:
    """``I/mean``, ``C/mean`` and ``g2`` histograms, overlaid where a reference exists.

    References for a shifted or corrected variable (``g2-1``, ``(C-R)/mean``)
    get their own figure.
    """
    outdir = Path(outdir)
    by_quantity = {r.quantity: r.pdf for r in refs}
    written = []
    for quantity, stem in (("I/mean", "hist_intensity"), ("C/mean", "hist_coincidence"), ("g2", "hist_g2")):
        x = normalized(rs, quantity)
        written.append(histogram(x, outdir / f"{stem}.{fmt}", _XLABELS[quantity], bins, by_quantity.get(quantity)))
    for quantity, stem in (("(C-R)/mean", "hist_coincidence_corrected"), ("g2-1", "hist_g2_quantum"),
                           ("R/mean", "hist_accidental")):
        if quantity in by_quantity:
            x = normalized(rs, quantity)
            written.append(histogram(x, outdir / f"{stem}.{fmt}", _XLABELS[quantity], bins, by_quantity[quantity]))
    return written


def _as_float(v):
    try:
        return float(v)
    except (TypeError, ValueError):
        return math.nan


def scatter(rows, path):
    """Log-log ``V_I`` vs ``V_g2`` plane, one color per label."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.6, 3.6))
        labels = sorted({r["label"] for r in rows})
        cmap = plt.get_cmap("tab10")
        for k, label in enumerate(labels):
            pts = [(_as_float(r["V_I"]), _as_float(r["V_g2"])) for r in rows if r["label"] == label]
            pts = np.array([p for p in pts if all(math.isfinite(v) and v > 0 for v in p)])
            if len(pts):
                ax.scatter(pts[:, 0], pts[:, 1], s=14, color=cmap(k % 10), label=label, alpha=0.8)
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel(r"$V_I$")
        ax.set_ylabel(r"$V_{g^{(2)}}$")
        if ax.collections:
            ax.legend(loc="best", fontsize=7)
        fig.tight_layout()
        fig.savefig(path, metadata=_METADATA.get(Path(path).suffix.lower()))
        plt.close(fig)
    return Path(path)
