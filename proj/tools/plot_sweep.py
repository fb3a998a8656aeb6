#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
"""Plot metric curves from a sweep_<param>.csv written by `cvaegen sweep`.

    python3 tools/plot_sweep.py runs/sweep_alpha.csv -o alpha.png
"""
import argparse
import csv
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("csv")
    ap.add_argument("-o", "--out", default=None, help="image path (default: <csv>.png)")
    ap.add_argument("--metrics", default="conditioning_accuracy,bleu_quality,bleu_diversity,originality")
    args = ap.parse_args()

    wanted = args.metrics.split(",")
    curves = defaultdict(list)
    param = None
    with open(args.csv, newline="") as f:
        for row in csv.DictReader(f):
            param = row["parameter"]
            if row["metric"] in wanted:
                curves[row["metric"]].append((float(row["value"]), float(row["mean"]), float(row["std"])))

    fig, axes = plt.subplots(1, len(wanted), figsize=(3.2 * len(wanted), 3), squeeze=False)
    for ax, metric in zip(axes[0], wanted):
        pts = sorted(curves.get(metric, []))
        if pts:
            xs, ys, es = zip(*pts)
            ax.errorbar(xs, ys, yerr=es, marker="o", capsize=3)
        ax.set_title(metric)
        ax.set_xlabel(param or "value")
        ax.grid(alpha=0.3)
    fig.tight_layout()
    out = args.out or args.csv.rsplit(".", 1)[0] + ".png"
    fig.savefig(out, dpi=120)
    print(out)


if __name__ == "__main__":
    main()
