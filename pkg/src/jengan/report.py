"""Figure rendering for the CLI report paths.

Every figure is written to a file next to the delimited output it
illustrates; nothing here needs a display.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .metrics import AliasReport, EquivarianceReport  # noqa: E402
from .sinc_filters import SincKernel  # noqa: E402


def save_filter_figure(kernel: SincKernel, response: np.ndarray, path) -> Path:
    """Stem plot of the taps plus the magnitude response in dB."""
    path = Path(path)
    fig, (ax_t, ax_f) = plt.subplots(2, 1, figsize=(7, 6))
    n = np.arange(-kernel.half_width, kernel.half_width + 1)
    ax_t.stem(n, kernel.taps)
    ax_t.set_xlabel("tap offset n")
    ax_t.set_ylabel("coefficient")
    ax_t.set_title(f"shifted sinc kernel, delta = {kernel.delta:g}")
    mag_db = 20.0 * np.log10(np.maximum(response[:, 1], 1e-12))
    ax_f.plot(response[:, 0] / np.pi, mag_db)
    ax_f.set_xlabel("frequency (fraction of pi rad/sample)")
    ax_f.set_ylabel("magnitude (dB)")
    ax_f.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def save_loss_figure(steps, columns: dict[str, list[float]], path) -> Path:
    """One panel per loss column over training steps."""
    path = Path(path)
    fig, axes = plt.subplots(len(columns), 1, figsize=(7, 2.2 * len(columns)),
                             sharex=True)
    if len(columns) == 1:
        axes = [axes]
    for ax, (name, values) in zip(axes, columns.items()):
        ax.plot(steps, values, linewidth=0.8)
        ax.set_ylabel(name)
        ax.grid(True, alpha=0.3)
    axes[-1].set_xlabel("step")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def save_spectrogram_figure(log_mel: np.ndarray, path, hop_seconds: float | None = None) -> Path:
    """Log-mel frames (frames, bins) as an image, time on the x axis."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(8, 4))
    extent = None
    if hop_seconds is not None:
        extent = (0.0, log_mel.shape[0] * hop_seconds, 0.0, log_mel.shape[1])
    im = ax.imshow(log_mel.T, origin="lower", aspect="auto", extent=extent,
                   cmap="magma")
    ax.set_xlabel("time (s)" if hop_seconds is not None else "frame")
    ax.set_ylabel("mel bin")
    fig.colorbar(im, ax=ax, label="log magnitude")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def save_equivariance_figure(report: EquivarianceReport, path) -> Path:
    path = Path(path)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar([str(d) for d in report.deltas], report.errors)
    ax.axhline(report.mean_error, color="k", linestyle="--", linewidth=0.8,
               label=f"mean = {report.mean_error:.3g}")
    ax.set_xlabel("input shift (samples)")
    ax.set_ylabel("relative L2 error (interior)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def save_alias_figure(freqs: np.ndarray, magnitude: np.ndarray,
                      report: AliasReport, nyquist: float, path) -> Path:
    """Output spectrum with the cutoff that separates the alias band."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(7, 4))
    mag_db = 20.0 * np.log10(np.maximum(magnitude, 1e-12))
    ax.plot(freqs, mag_db, linewidth=0.7)
    ax.axvline(report.cutoff * nyquist, color="r", linestyle="--",
               label=f"cutoff; alias ratio = {report.ratio:.3g}")
    ax.set_xlabel("frequency (Hz)")
    ax.set_ylabel("magnitude (dB)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
