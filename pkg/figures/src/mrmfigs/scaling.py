"""Scaling-exponent and KPZ report plots with the theoretical curves."""

from __future__ import annotations

import argparse
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .density import SAVEFIG_KW
from .fileio import read_csv_columns, read_jsonl_summary


def theoretical_zeta(m, gamma2, q):
    return m * q - 0.5 * gamma2 * q * (q - 1.0)


def render_scaling(input_path, out_path, m=None, gamma2=None, title=None):
    cols = read_csv_columns(input_path)
    if "q" not in cols or "zeta_hat" not in cols:
        raise ValueError("scaling csv needs q and zeta_hat columns")
    summary = read_jsonl_summary(str(input_path) + ".jsonl")
    if summary:
        m = m if m is not None else summary.get("m")
        gamma2 = gamma2 if gamma2 is not None else summary.get("gamma2")
    q = cols["q"]
    z = cols["zeta_hat"]
    err = cols.get("stderr")
    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.errorbar(q, z, yerr=err, fmt="o", capsize=3, label="estimated")
    if m is not None and gamma2 is not None:
        qq = np.linspace(min(0.0, q.min()), q.max() * 1.1, 200)
        ax.plot(qq, theoretical_zeta(float(m), float(gamma2), qq), "-",
                label=f"zeta(q) = {m}q - {gamma2}/2 q(q-1)")
    ax.set_xlabel("q")
    ax.set_ylabel("zeta(q)")
    ax.legend()
    ax.set_title(title or "structure exponent")
    fig.savefig(out_path, **SAVEFIG_KW)
    plt.close(fig)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--input", required=True, help="scaling report csv")
    ap.add_argument("--out", required=True)
    ap.add_argument("--m", type=int, default=None,
                    help="override the summary's spatial dimension")
    ap.add_argument("--gamma2", type=float, default=None,
                    help="override the summary's intermittency")
    ap.add_argument("--title", default=None)
    args = ap.parse_args(argv)
    try:
        render_scaling(args.input, args.out, m=args.m, gamma2=args.gamma2,
                       title=args.title)
    except (OSError, ValueError, KeyError) as exc:
        print(f"render-scaling: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
