"""Geodesic polylines overlaid on a density heatmap."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .density import SAVEFIG_KW
from .fileio import grid_extent, read_csv_columns, read_grid

LINE_STYLES = ["-", "--", "-.", ":"]
LINE_COLORS = ["cyan", "lime", "white", "orange"]


def render_geodesics(grid_path, polyline_paths, out_path, log_scale=False,
                     title=None):
    if not polyline_paths:
        raise ValueError("at least one polyline csv is required")
    header, values = read_grid(grid_path)
    if int(header["m"]) != 2:
        raise ValueError("geodesic overlays need a 2D grid")
    if log_scale:
        if values.min() <= 0.0:
            raise ValueError("log intensity needs strictly positive values")
        values = np.log10(values)
    R = float(header["R"])
    fig, ax = plt.subplots(figsize=(6, 5))
    ax.imshow(values.T, origin="lower", extent=grid_extent(header),
              cmap="inferno", interpolation="nearest")
    for k, path in enumerate(polyline_paths):
        cols = read_csv_columns(path)
        x, y = cols["x"], cols["y"]
        if np.any(np.abs(x) > R) or np.any(np.abs(y) > R):
            print(f"render-geodesics: polyline {path} leaves the grid "
                  "bounds; clipping", file=sys.stderr)
            x = np.clip(x, -R, R)
            y = np.clip(y, -R, R)
        ax.plot(x, y, LINE_STYLES[k % len(LINE_STYLES)],
                color=LINE_COLORS[k % len(LINE_COLORS)], linewidth=1.6,
                label=Path(path).stem)
    ax.legend(loc="upper right", fontsize=8)
    ax.set_title(title or "transport geodesics over MRM density")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    fig.savefig(out_path, **SAVEFIG_KW)
    plt.close(fig)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--input", required=True, help=".grid density file")
    ap.add_argument("--polyline", action="append", default=[],
                    help="geodesic csv (repeatable)")
    ap.add_argument("--out", required=True)
    ap.add_argument("--log", action="store_true")
    ap.add_argument("--title", default=None)
    args = ap.parse_args(argv)
    try:
        render_geodesics(args.input, args.polyline, args.out,
                         log_scale=args.log, title=args.title)
    except (OSError, ValueError) as exc:
        print(f"render-geodesics: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
