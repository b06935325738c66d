#!/usr/bin/env python3
"""Render one snapshot as a three-panel profile figure.

Usage: plot_profiles.py <snap.csv> <out.png>
"""

from __future__ import annotations

import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from snapshots import SnapshotFormatError, load_frame


def plot_profiles(snapshot_path: Path, out_image_path: Path) -> None:
    frame = load_frame(snapshot_path)
    fig, axes = plt.subplots(3, 1, figsize=(8.0, 9.0), sharex=True)

    axes[0].plot(frame.x, frame.n_plus, label="upper band", color="tab:blue")
    axes[0].plot(frame.x, frame.n_minus, label="lower band", color="tab:red")
    axes[0].set_ylabel("density")
    axes[0].legend(loc="best")

    axes[1].plot(frame.x, frame.ux_plus, label="upper band", color="tab:blue")
    axes[1].plot(frame.x, frame.ux_minus, label="lower band", color="tab:red")
    axes[1].set_ylabel("x velocity")
    axes[1].legend(loc="best")

    axes[2].plot(frame.x, frame.v_total, label="total", color="tab:green")
    axes[2].plot(frame.x, frame.v_int, label="internal", color="tab:purple",
                 linestyle="--")
    axes[2].set_ylabel("potential")
    axes[2].set_xlabel("x")
    axes[2].legend(loc="best")

    fig.suptitle(f"t = {frame.t:.6g}")
    fig.tight_layout()
    fig.savefig(out_image_path, dpi=110)
    plt.close(fig)


def main(argv: list[str]) -> int:
    if len(argv) != 3:
        print("usage: plot_profiles.py <snap.csv> <out.png>", file=sys.stderr)
        return 2
    try:
        plot_profiles(Path(argv[1]), Path(argv[2]))
    except SnapshotFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
