"""SVG figure rendering for experiment reports.

All figures are written as SVG with a fixed hash salt and no embedded date,
so re-rendering the same data produces stable output.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = ["survival_overlay", "curve_with_band", "theta_vs_n"]

_SVG_META = {"Date": None}


def _save(fig, out_path: str, salt: str) -> None:
    with plt.rc_context({"svg.hashsalt": salt}):
        fig.savefig(out_path, format="svg", metadata=_SVG_META)
    plt.close(fig)


def _survival(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    xs = np.sort(values)
    n = xs.size
    return xs, 1.0 - np.arange(1, n + 1) / n + 1.0 / n  # P(X >= x_(k))


def survival_overlay(samples: dict, out_path: str, title: str = "",
                     salt: str = "stablesums") -> None:
    """Log-log overlay of empirical survival functions.

    Positive parts are drawn solid; when a sample has negative values its
    absolute negative tail P(X < -x) is overlaid dashed in the same color.
    """
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    for i, (label, arr) in enumerate(samples.items()):
        arr = np.asarray(arr, dtype=float)
        color = f"C{i}"
        pos = arr[arr > 0]
        if pos.size:
            xs, sf = _survival(pos)
            ax.step(xs, sf * pos.size / arr.size, where="post", color=color,
                    label=f"{label} (+)")
        neg = -arr[arr < 0]
        if neg.size:
            xs, sf = _survival(neg)
            ax.step(xs, sf * neg.size / arr.size, where="post", color=color,
                    linestyle="--", label=f"{label} (-)")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("x")
    ax.set_ylabel("empirical tail probability")
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    _save(fig, out_path, salt)


def curve_with_band(x, y, lo=None, hi=None, out_path: str = "curve.svg",
                    title: str = "", xlabel: str = "", ylabel: str = "",
                    hline: float | None = None, logx: bool = False,
                    logy: bool = False, salt: str = "stablesums") -> None:
    """A single diagnostic curve with an optional confidence band."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    ax.plot(x, y, marker="o", color="C0")
    if lo is not None and hi is not None:
        ax.fill_between(x, np.asarray(lo, dtype=float),
                        np.asarray(hi, dtype=float), color="C0", alpha=0.25)
    if hline is not None:
        ax.axhline(hline, color="C3", linestyle=":", linewidth=1)
    if logx:
        ax.set_xscale("log")
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    ax.grid(True, alpha=0.3)
    _save(fig, out_path, salt)


def theta_vs_n(ns, estimates: dict, reference: float | None,
               out_path: str, title: str = "", salt: str = "stablesums") -> None:
    """Extremal-index estimates against series length, one line per method."""
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    for i, (label, vals) in enumerate(estimates.items()):
        ax.plot(ns, vals, marker="o", color=f"C{i}", label=label)
    if reference is not None:
        ax.axhline(reference, color="C3", linestyle=":", linewidth=1,
                   label="analytic")
    ax.set_xscale("log")
    ax.set_xlabel("n")
    ax.set_ylabel("extremal index estimate")
    ax.set_ylim(0, 1.1)
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    _save(fig, out_path, salt)
