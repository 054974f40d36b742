"""Experiment recipes shared by the CLI, scripts and the acceptance suite."""

from __future__ import annotations

from dataclasses import dataclass

from .config import RunConfig
from .kernel import analytic_ntk_circle
from .model import init_network
from .numerics import sym_eig
from .tasks import (
    MULTISINE_PRESETS,
    Dataset,
    TrainResult,
    auto_lr,
    circle_tracked_bins,
    gen_circle_signal,
    gen_multisine,
    image_dataset,
    read_pnm,
    run_training,
)

VARIANT_SETTINGS = {
    "none": dict(adjustment="none"),
    "analytic": dict(adjustment="full_kernel", kernel_source="analytic"),
    "empirical": dict(adjustment="full_kernel", kernel_source="empirical"),
    "iga": dict(adjustment="iga"),
}


@dataclass
class Prepared:
    dataset: Dataset
    tracked_k: tuple[int, ...]
    input_files: tuple[str, ...] = ()


def load_dataset(cfg: RunConfig) -> Prepared:
    if cfg.task == "circle":
        return Prepared(gen_circle_signal(cfg.num_points), circle_tracked_bins(cfg.num_points))
    if cfg.task == "multisine":
        if cfg.preset not in MULTISINE_PRESETS:
            raise ValueError(f"preset: expected one of {tuple(MULTISINE_PRESETS)}, got {cfg.preset!r}")
        tones = MULTISINE_PRESETS[cfg.preset]
        return Prepared(gen_multisine(cfg.num_points, tones), tones)
    pixels = read_pnm(cfg.image)
    return Prepared(image_dataset(pixels), (), (cfg.image,))


def run_variants(cfg: RunConfig, prepared: Prepared | None = None) -> dict[str, TrainResult]:
    """Train every variant the config asks for, on one dataset and one initialization.

    Circle runs compare vanilla, analytic-S, empirical-S and IGA; other tasks
    run a single variant named after ``cfg.adjustment``.
    """
    prepared = prepared or load_dataset(cfg)
    ds = prepared.dataset
    spec = cfg.network(ds.coords.shape[1], ds.channels)
    params = init_network(spec, cfg.seed)
    lr = cfg.lr
    basis = None
    if cfg.task == "circle":
        if lr <= 0:
            # one rate for every variant, fixed by the initial eNTK
            lr = auto_lr(spec, params, ds.coords)
        if cfg.num_projections:
            basis = sym_eig(analytic_ntk_circle(ds.coords))
        variants = {v: VARIANT_SETTINGS[v] for v in cfg.variants}
    else:
        variants = {cfg.adjustment: {}}
    out = {}
    for name, settings in variants.items():
        train = cfg.train_config(**settings)
        out[name] = run_training(train, ds, spec, lr=lr, tracked_k=prepared.tracked_k,
                                 projection_basis=basis, params=params)
    return out
