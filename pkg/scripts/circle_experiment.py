"""Vanilla vs analytic / empirical / inductive adjustment on the circle signal, over several seeds."""

import argparse

import numpy as np

from spectral_tuner.config import parse_config
from spectral_tuner.experiments import run_variants


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--width", type=int, default=1024)
    ap.add_argument("--iters", type=int, default=5000)
    args = ap.parse_args()

    table = {}
    for seed in range(args.seeds):
        cfg = parse_config(f"task = circle\nseed = {seed}\nwidth = {args.width}\niterations = {args.iters}\n")
        for name, res in run_variants(cfg).items():
            table.setdefault(name, []).append(res.metrics)
        print(f"seed {seed} done", flush=True)

    deltas = sorted((k for k in table["none"][0] if k.startswith("delta_k_")), key=lambda k: int(k[8:]))
    keys = ["final_mse", *deltas]
    print("variant    " + " ".join(f"{k:>12}" for k in keys))
    for name, rows in table.items():
        med = [np.median([r[k] for r in rows]) for k in keys]
        print(f"{name:<10} " + " ".join(f"{v:12.4f}" for v in med))


if __name__ == "__main__":
    main()
