"""Plot attacker training curves and per-index eigenvalue ratios from run directories.

    python scripts/plot_curves.py --run runs/<attack-run> [--compare runs/<spectral-run>] --out fig.png
"""
import argparse
import csv
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--run", required=True, help="output directory of an 'attack' run")
    ap.add_argument("--compare", help="output directory of a 'spectral-compare' run")
    ap.add_argument("--out", default="curves.png")
    args = ap.parse_args(argv)

    panels = 2 if args.compare else 1
    fig, axes = plt.subplots(1, panels, figsize=(5 * panels, 3.5), squeeze=False)
    curves = defaultdict(list)
    for r in read_rows(Path(args.run) / "attacker_curves.csv"):
        curves[(r["variant"], r["budget"])].append(float(r["train_success_rate"]))
    ax = axes[0, 0]
    for (variant, budget), ys in sorted(curves.items()):
        ax.plot(range(1, len(ys) + 1), ys, label=f"{variant} {budget}")
    ax.set_xlabel("epoch")
    ax.set_ylabel("training success rate")
    ax.legend(fontsize=8)

    if args.compare:
        rows = [r for r in read_rows(Path(args.compare) / "eigen_ratio.csv") if r["ratio"] != "nan"]
        ax = axes[0, 1]
        ax.bar([int(r["index"]) for r in rows], [float(r["ratio"]) for r in rows])
        ax.axhline(1.0, color="k", lw=0.8)
        ax.set_xlabel("eigenvalue index")
        ax.set_ylabel("add/delete over rewiring")
    fig.tight_layout()
    fig.savefig(args.out, dpi=120)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
