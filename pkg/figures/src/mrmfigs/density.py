"""Density heatmaps from .grid files, with linear or logarithmic intensity."""

from __future__ import annotations

import argparse
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .fileio import grid_extent, read_grid

SAVEFIG_KW = dict(dpi=150, metadata={"Software": "mrm-figures"})


def render_density(input_path, out_path, log_scale=False, title=None):
    header, values = read_grid(input_path)
    if int(header["m"]) != 2:
        raise ValueError("density heatmaps need a 2D grid")
    if log_scale:
        if values.min() <= 0.0:
            raise ValueError("log intensity needs strictly positive values")
        values = np.log10(values)
    fig, ax = plt.subplots(figsize=(6, 5))
    im = ax.imshow(values.T, origin="lower", extent=grid_extent(header),
                   cmap="inferno", interpolation="nearest")
    label = "log10 cell mass" if log_scale else "cell mass"
    fig.colorbar(im, ax=ax, label=label)
    g2 = header.get("gamma2")
    ax.set_title(title or f"MRM density (gamma2={g2}, "
                          f"{'log' if log_scale else 'linear'} scale)")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    fig.savefig(out_path, **SAVEFIG_KW)
    plt.close(fig)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--input", required=True, help=".grid density file")
    ap.add_argument("--out", required=True, help="output image path")
    ap.add_argument("--log", action="store_true",
                    help="logarithmic intensity scale")
    ap.add_argument("--title", default=None)
    args = ap.parse_args(argv)
    try:
        render_density(args.input, args.out, log_scale=args.log,
                       title=args.title)
    except (OSError, ValueError) as exc:
        print(f"render-density: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
