"""Command-line entry point: ``spectral-tuner <command> [flags]``."""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import resource
import sys
import time
from importlib import metadata
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from .config import SCHEMA, ConfigError, RunConfig, dump_config, read_pairs, resolve
from .experiments import load_dataset, run_variants
from .tasks import write_pnm

COMMAND_TASKS = {"ntk-sim": "circle", "fit1d": "multisine", "fit2d": "image"}
FLAG_ALIASES = {"iterations": ["--iters"]}


def tool_version() -> str:
    try:
        return metadata.version("spectral-tuner")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def peak_memory_mb() -> float:
    # ru_maxrss is KiB on Linux
    return resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 1024.0


def write_atomic(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8", newline="\n")
    os.replace(tmp, path)


def metrics_csv(results) -> str:
    keys = sorted({k for res in results.values() for k in res.metrics})
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["variant", "lr", *keys])
    for name, res in results.items():
        w.writerow([name, f"{res.lr:.17g}", *(f"{res.metrics.get(k, float('nan')):.17g}" for k in keys)])
    return buf.getvalue()


def execute(command: str, cfg: RunConfig, out_root: Path, threads: int | None = None) -> Path:
    """Run one configured experiment and write its run directory."""
    run_dir = Path(out_root) / cfg.name
    run_dir.mkdir(parents=True, exist_ok=True)
    prepared = load_dataset(cfg)
    manifest = {
        "status": "pending",
        "command": command,
        "version": tool_version(),
        "seed": cfg.seed,
        "threads": threads,
        "config": {k: list(v) if isinstance(v, tuple) else v for k, v in cfg.as_dict().items()},
        "input_digests": {str(p): sha256_file(p) for p in prepared.input_files},
    }
    manifest_path = run_dir / "manifest.json"
    write_atomic(manifest_path, json.dumps(manifest, indent=2) + "\n")

    started = time.time()
    with threadpool_limits(limits=threads):
        results = run_variants(cfg, prepared)

    write_atomic(run_dir / "metrics.csv", metrics_csv(results))
    write_atomic(run_dir / "config.ini", dump_config(cfg))
    outputs = ["metrics.csv", "config.ini"]
    single = len(results) == 1
    for name, res in results.items():
        where = run_dir if single else run_dir / name
        where.mkdir(exist_ok=True)
        res.trace.write(where / "spectra.csv")
        outputs.append(str((where / "spectra.csv").relative_to(run_dir)))
        if cfg.task == "image":
            ext = "ppm" if prepared.dataset.channels == 3 else "pgm"
            recon = where / f"reconstruction.{ext}"
            write_pnm(recon, prepared.dataset.as_image(np.clip(res.predictions, 0.0, 1.0)))
            outputs.append(str(recon.relative_to(run_dir)))

    manifest.update(
        status="complete",
        wall_seconds=time.time() - started,
        mean_step_seconds={name: res.mean_step_time(skip=100) for name, res in results.items()},
        learning_rate={name: res.lr for name, res in results.items()},
        peak_memory_mb=peak_memory_mb(),
        outputs={p: sha256_file(run_dir / p) for p in outputs},
    )
    write_atomic(manifest_path, json.dumps(manifest, indent=2) + "\n")
    return run_dir


# --- report -----------------------------------------------------------------

def _read_metrics(path: Path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def band_means(row: dict, edges) -> dict:
    """Average final delta_k over bands (previous edge, edge]."""
    ks = sorted((int(k[len("delta_k_"):]), float(v)) for k, v in row.items() if k.startswith("delta_k_"))
    out, lo = {}, -1
    for hi in edges:
        vals = [v for k, v in ks if lo < k <= hi]
        if vals:
            out[f"band_{lo + 1}_{hi}"] = float(np.mean(vals))
        lo = hi
    return out


def report(run_dirs, edges=()) -> str:
    lines = []
    for d in map(Path, run_dirs):
        manifest = json.loads((d / "manifest.json").read_text(encoding="utf-8"))
        lines.append(f"# {d.name} ({manifest['command']}, seed {manifest['seed']}, {manifest['status']})")
        for row in _read_metrics(d / "metrics.csv"):
            name = row["variant"]
            shown = {k: v for k, v in row.items() if k not in ("variant", "lr")}
            if edges:
                shown.update(band_means(row, edges))
            step = manifest.get("mean_step_seconds", {}).get(name)
            parts = [f"{k}={float(v):.6g}" for k, v in shown.items()]
            if step is not None:
                parts.append(f"step_ms={1e3 * step:.3f}")
            lines.append(f"  {name:<10} " + " ".join(parts))
    return "\n".join(lines) + "\n"


# --- argument handling ------------------------------------------------------

def _add_config_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="key = value file or a run manifest.json")
    sub.add_argument("--out", default="runs", help="root directory for run outputs (default: runs)")
    sub.add_argument("--threads", type=int, default=None, help="BLAS thread limit")
    group = sub.add_argument_group("config keys (flags win over file values)")
    for key in SCHEMA:
        if key == "task":
            continue
        flags = [f"--{key}"] + FLAG_ALIASES.get(key, [])
        if "_" in key:
            flags.append(f"--{key.replace('_', '-')}")
        group.add_argument(*flags, dest=key, default=None, metavar=SCHEMA[key].__name__.upper())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spectral-tuner",
                                     description="Spectrally adjusted training of coordinate networks.")
    parser.add_argument("--version", action="version", version=tool_version())
    subs = parser.add_subparsers(dest="command", required=True, metavar="command")
    helps = {
        "ntk-sim": "two-layer net on circle data: vanilla vs analytic/empirical/inductive adjustment",
        "fit1d": "multi-tone 1-D regression",
        "fit2d": "image fitting from a PPM/PGM file",
    }
    for cmd, text in helps.items():
        sub = subs.add_parser(cmd, help=text, description=text)
        _add_config_flags(sub)
        if cmd == "fit2d":
            sub.add_argument("--patch", type=int, default=None, help="patch edge; sets p = patch^2")
    rep = subs.add_parser("report", help="summarize run directories")
    rep.add_argument("runs", nargs="+")
    rep.add_argument("--bands", default="", help="comma-separated upper band edges for delta_k")
    subs.add_parser("selftest", help="run the built-in numerical oracle checks")
    return parser


def config_from_args(command: str, args) -> RunConfig:
    task = COMMAND_TASKS[command]
    pairs = read_pairs(Path(args.config).read_text(encoding="utf-8")) if args.config else {}
    pairs.setdefault("task", task)
    if pairs["task"] != task:
        raise ConfigError(f"config task {pairs['task']!r} does not match command {command!r} (expects {task!r})")
    pairs.update({k: getattr(args, k) for k in SCHEMA if k != "task" and getattr(args, k, None) is not None})
    if getattr(args, "patch", None) is not None:
        pairs["p"] = str(args.patch * args.patch)
    return resolve(pairs)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "selftest":
            from .selftest import run_all

            return 0 if run_all(sys.stdout) else 1
        if args.command == "report":
            edges = [int(e) for e in args.bands.split(",") if e.strip()]
            sys.stdout.write(report(args.runs, edges))
            return 0
        cfg = config_from_args(args.command, args)
        run_dir = execute(args.command, cfg, Path(args.out), args.threads)
        print(run_dir)
        return 0
    except (ConfigError, ValueError, OSError, MemoryError, KeyError) as exc:
        msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        print(f"spectral-tuner: error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
