"""Desk-scale image fitting: vanilla vs IGA (and optionally every sampling strategy) through the CLI.

Without --image, a 96x96 crop of scikit-image's astronaut picture is used.
"""

import argparse
import csv
import json
from pathlib import Path

import numpy as np

from spectral_tuner.cli import main as cli_main
from spectral_tuner.tasks import write_pnm


def default_crop(path: Path) -> Path:
    from skimage import data

    write_pnm(path, data.astronaut()[100:196, 180:276] / 255.0)
    return path


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--image")
    ap.add_argument("--out", default="runs/image")
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--iters", type=int, default=2000)
    ap.add_argument("--activation", default="relu_pe", choices=["relu", "relu_pe", "sine"])
    ap.add_argument("--strategies", default="slr", help="comma-separated, e.g. slr,rsi,ri")
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    image = Path(args.image) if args.image else default_crop(out / "crop.ppm")
    runs = [("none", "slr")] + [("iga", s) for s in args.strategies.split(",")]
    psnr, step = {}, {}
    for seed in range(args.seeds):
        for adj, strategy in runs:
            name = f"{adj}-{strategy}-s{seed}"
            code = cli_main(["fit2d", "--image", str(image), "--activation", args.activation, "--patch", "8",
                             "--iters", str(args.iters), "--adjustment", adj, "--strategy", strategy,
                             "--seed", str(seed), "--name", name, "--out", str(out)])
            if code:
                raise SystemExit(code)
            with open(out / name / "metrics.csv", newline="") as fh:
                row, = csv.DictReader(fh)
            manifest = json.loads((out / name / "manifest.json").read_text())
            psnr.setdefault((adj, strategy), []).append(float(row["psnr"]))
            step.setdefault((adj, strategy), []).append(manifest["mean_step_seconds"][adj])

    print("run        median PSNR   median step (ms)")
    for key in runs:
        print(f"{'-'.join(key):<10} {np.median(psnr[key]):11.2f}   {1e3 * np.median(step[key]):14.2f}")


if __name__ == "__main__":
    main()
