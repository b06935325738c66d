#!/usr/bin/env python3
"""Conservation diagnostics over a run directory: total mass per band, total
x momentum, and band polarization versus time.  When the polarization decays
it also prints a fitted exponential rate.

Usage: plot_timeseries.py <run_dir> <out.png>
"""

from __future__ import annotations

import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from snapshots import SnapshotFormatError, load_run


def series(frames):
    t = np.array([f.t for f in frames])
    dx = frames[0].dx
    mass_p = np.array([f.n_plus.sum() * dx for f in frames])
    mass_m = np.array([f.n_minus.sum() * dx for f in frames])
    mom = np.array([
        [(f.n_plus * up + f.n_minus * um).sum() * dx
         for up, um in ((f.ux_plus, f.ux_minus), (f.uy_plus, f.uy_minus),
                        (f.uz_plus, f.uz_minus))]
        for f in frames])
    pol = mass_p - mass_m
    return t, mass_p, mass_m, mom, pol


def fitted_decay_rate(t, pol):
    """Least-squares slope of log|polarization|, or None if it is not a
    clean decay (sign changes or values at round-off level)."""
    ref = np.abs(pol[0])
    if ref == 0.0:
        return None
    keep = np.abs(pol) > 1e-12 * ref
    if keep.sum() < 2 or np.any(np.sign(pol[keep]) != np.sign(pol[0])):
        return None
    coeffs = np.polyfit(t[keep], np.log(np.abs(pol[keep])), 1)
    rate = -coeffs[0]
    return rate if rate > 0.0 else None


def plot_timeseries(run_dir: Path, out_image_path: Path) -> float | None:
    frames = load_run(run_dir)
    if len(frames) < 2:
        raise SnapshotFormatError(f"{run_dir}: need at least 2 snapshots")
    t, mass_p, mass_m, mom, pol = series(frames)

    fig, axes = plt.subplots(3, 1, figsize=(8.0, 9.0), sharex=True)
    axes[0].plot(t, mass_p, label="upper band", color="tab:blue")
    axes[0].plot(t, mass_m, label="lower band", color="tab:red")
    axes[0].plot(t, mass_p + mass_m, label="total", color="black", linestyle=":")
    axes[0].set_ylabel("mass")
    axes[0].legend(loc="best")

    for k, (label, color) in enumerate((("x", "tab:green"), ("y", "tab:olive"),
                                        ("z", "tab:cyan"))):
        axes[1].plot(t, mom[:, k], label=label, color=color)
    axes[1].set_ylabel("total momentum")
    axes[1].legend(loc="best")

    axes[2].plot(t, pol, color="tab:purple")
    axes[2].set_ylabel("band polarization")
    axes[2].set_xlabel("t")

    rate = fitted_decay_rate(t, pol)
    if rate is not None:
        axes[2].annotate(f"decay rate {rate:.6g}", xy=(0.98, 0.9),
                         xycoords="axes fraction", ha="right")
    fig.tight_layout()
    fig.savefig(out_image_path, dpi=110)
    plt.close(fig)
    return rate


def main(argv: list[str]) -> int:
    if len(argv) != 3:
        print("usage: plot_timeseries.py <run_dir> <out.png>", file=sys.stderr)
        return 2
    run_dir = Path(argv[1])
    try:
        frames_rate = plot_timeseries(run_dir, Path(argv[2]))
    except SnapshotFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        if "at least 2 snapshots" in str(exc):
            return 2
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if frames_rate is not None:
        print(f"polarization_decay_rate: {frames_rate:.12g}")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
