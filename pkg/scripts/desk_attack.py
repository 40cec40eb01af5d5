"""Run the desk attack comparison over several master seeds and average the rates.

    python scripts/desk_attack.py --config scripts/desk.cfg --seeds 0 1 2 --out desk_rates.csv
"""
import argparse
import csv
import sys
import time

import numpy as np

from rewire_attack.config import load_config
from rewire_attack.suite import run_attack_suite

ORDER_RATIO = 1.5
NOISE_Z = 2.0


def run(config_path, seeds, overrides=None):
    per_seed, accs, totals = [], [], {}
    for seed in seeds:
        cfg = load_config(config_path, {**(overrides or {}), "seed": str(seed)})
        t0 = time.perf_counter()
        res = run_attack_suite(cfg)
        rates = {(r.variant, r.budget): r.rate for r in res.report.rows}
        for r in res.report.rows:
            totals[(r.variant, r.budget)] = totals.get((r.variant, r.budget), 0) + r.total
        per_seed.append(rates)
        accs.append(res.test_accuracy)
        print(f"seed {seed}: {time.perf_counter() - t0:.0f}s  acc {res.test_accuracy:.3f}  "
              + "  ".join(f"{v}={x:.4f}" for (v, _), x in sorted(rates.items())), flush=True)
    keys = sorted(per_seed[0])
    means = {k: float(np.mean([r[k] for r in per_seed])) for k in keys}
    return per_seed, means, totals


def ordering(means, budget, episodes):
    """The three directional checks on seed-averaged rates.

    ReWatt-a vs ReWatt allows ties up to ``NOISE_Z`` binomial standard errors
    of the difference, ``episodes`` being the per-variant episode count.
    """
    rw = means[("rewatt", budget)]
    ra = means[("rewatt-a", budget)]
    se = np.sqrt((rw * (1 - rw) + ra * (1 - ra)) / episodes)
    return {
        "rewatt >= 1.5 x random-s": rw > 0 and rw >= ORDER_RATIO * means[("random-s", budget)],
        "rewatt >= random": rw >= means[("random", budget)],
        f"rewatt-a >= rewatt - {NOISE_Z:g} se ({NOISE_Z * se:.4f})": ra >= rw - NOISE_Z * se,
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default="scripts/desk.cfg")
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    ap.add_argument("--out", help="write per-seed and mean rates as CSV")
    args = ap.parse_args(argv)
    pairs = dict(kv.split("=", 1) for kv in args.set)
    per_seed, means, totals = run(args.config, args.seeds, pairs)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["seed", "variant", "budget", "success_rate"])
            for seed, rates in zip(args.seeds, per_seed):
                for (v, b), x in sorted(rates.items()):
                    w.writerow([seed, v, b, f"{x:.6f}"])
            for (v, b), x in sorted(means.items()):
                w.writerow(["mean", v, b, f"{x:.6f}"])
    for (v, b), x in sorted(means.items()):
        print(f"mean {v:9s} {b}: {x:.4f}")
    budgets = sorted({b for _, b in means})
    ok = True
    if all(("rewatt", b) in means and ("random-s", b) in means for b in budgets):
        for b in budgets:
            if ("random", b) in means and ("rewatt-a", b) in means:
                for name, passed in ordering(means, b, totals[("rewatt", b)]).items():
                    print(f"{b} {name}: {'yes' if passed else 'no'}")
                    ok &= passed
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
