"""Per-iteration cost of IGA relative to vanilla gradients for a few group sizes."""

import argparse

import numpy as np

from spectral_tuner.model import NetworkSpec
from spectral_tuner.optimizer import TrainConfig
from spectral_tuner.tasks import image_dataset, run_training


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--size", type=int, default=96, help="edge of a random test image")
    ap.add_argument("--width", type=int, default=64)
    ap.add_argument("--iters", type=int, default=300)
    ap.add_argument("--patches", default="4,8,16", help="patch edges to time")
    args = ap.parse_args()

    img = np.random.default_rng(0).random((args.size, args.size, 3))
    ds = image_dataset(img)
    spec = NetworkSpec(2, (args.width,) * 4, 3, "relu_pe")
    skip = min(100, args.iters // 3)

    def step_time(**kw):
        cfg = TrainConfig(iterations=args.iters, lr=1e-3, optimizer="adam", mode="adam", trace_every=args.iters, **kw)
        return run_training(cfg, ds, spec).mean_step_time(skip=skip)

    base = step_time(adjustment="none")
    print(f"vanilla        {1e3 * base:8.2f} ms/iter")
    for edge in map(int, args.patches.split(",")):
        n_groups = (args.size // edge) ** 2
        t = step_time(adjustment="iga", p=edge * edge, end=min(20, n_groups - 1))
        print(f"iga p={edge * edge:<5}   {1e3 * t:8.2f} ms/iter  ({t / base:.2f}x, {n_groups} representatives)")


if __name__ == "__main__":
    main()
