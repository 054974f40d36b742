"""Relative error at each tone of the multi-tone signal as the balanced range grows."""

import argparse

import numpy as np

from spectral_tuner.config import parse_config
from spectral_tuner.experiments import run_variants


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--ends", default="2,6", help="comma-separated end values to compare with vanilla")
    ap.add_argument("--activation", default="relu", choices=["relu", "sine"])
    ap.add_argument("--iters", type=int, default=2000)
    ap.add_argument("--p", type=int, default=8)
    args = ap.parse_args()

    runs = {"vanilla": "adjustment = none"}
    for e in args.ends.split(","):
        runs[f"end={e}"] = f"adjustment = iga\nend = {e}\np = {args.p}"
    table = {}
    for seed in range(args.seeds):
        for label, extra in runs.items():
            cfg = parse_config(f"task = multisine\nseed = {seed}\nactivation = {args.activation}\n"
                               f"iterations = {args.iters}\n{extra}\n")
            res, = run_variants(cfg).values()
            table.setdefault(label, []).append(res.metrics)
            print(f"seed {seed} {label}: mse {res.metrics['final_mse']:.4f}", flush=True)

    keys = sorted((k for k in table["vanilla"][0] if k.startswith("delta_k_")), key=lambda k: int(k[8:]))
    print("median over seeds")
    print("run        " + " ".join(f"{k:>11}" for k in keys))
    for label, rows in table.items():
        print(f"{label:<10} " + " ".join(f"{np.median([r[k] for r in rows]):11.4f}" for k in keys))


if __name__ == "__main__":
    main()
