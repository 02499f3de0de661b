"""Matplotlib figures written next to the CSV reports."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "savefig.dpi": 150,
}

LABELS = {
    "tpc": "TPC (predicted)",
    "reactive": "Reactive (stale)",
    "always_on": "Always on",
    "oracle": "Exhaustive oracle",
    "direct": "Direct link only",
}
MARKERS = {"tpc": "o", "reactive": "s", "always_on": "^", "oracle": "*", "direct": "x"}


def figsize(scale=1.0):
    golden = (np.sqrt(5.0) - 1.0) / 2.0
    w = 4.8 * scale
    return w, w * golden


def plot_sweep(result, path, xlabel=None):
    """Mean SINR (dB) per method against the swept parameter."""
    means = result.mean_db()
    if xlabel is None:
        xlabel = "Transmit power (W)" if result.kind == "power" else "RIS elements N"
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=figsize())
        for m, ys in means.items():
            ax.plot(result.params, ys, marker=MARKERS.get(m, "."), label=LABELS.get(m, m))
        ax.set_xlabel(xlabel)
        ax.set_ylabel("Mean SINR (dB)")
        ax.legend(loc="best")
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
    return path


def plot_trajectory(truth, pred, path, baseline=None):
    """Actual against predicted track, longitude on x."""
    truth = np.asarray(truth)
    pred = np.asarray(pred)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=figsize())
        ax.plot(truth[:, 1], truth[:, 0], "-", color="tab:blue", label="Actual")
        ax.plot(pred[:, 1], pred[:, 0], "--", color="tab:orange", label="Predicted (LSTM)")
        if baseline is not None:
            baseline = np.asarray(baseline)
            ax.plot(baseline[:, 1], baseline[:, 0], ":", color="tab:gray", label="Constant velocity")
        ax.set_xlabel("Longitude (deg)")
        ax.set_ylabel("Latitude (deg)")
        ax.ticklabel_format(useOffset=False)
        ax.legend(loc="best")
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
    return path


def plot_loss_curve(curve, path):
    curve = np.asarray(curve)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=figsize())
        ax.semilogy(curve[:, 0], curve[:, 1], label="train")
        ax.semilogy(curve[:, 0], curve[:, 2], label="validation")
        ax.set_xlabel("Epoch")
        ax.set_ylabel("MSE (normalised)")
        ax.legend(loc="best")
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
    return path
