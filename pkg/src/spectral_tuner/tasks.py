"""Target signals, image datasets and the training loop."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analysis import SpectralTrace, delta_k, psnr, spectral_projection, ssim
from .kernel import RankDeficiencyError, SpectralTransform, analytic_ntk_circle, build_transform
from .model import NetworkSpec, Parameters, _run, backward, encode, init_network, ntk_gram
from .numerics import Eigensystem, StructuralError, sym_eig
from .optimizer import (
    FULL_KERNEL_CAP,
    AdamState,
    TrainConfig,
    adam_step,
    full_kernel_gradient,
    iga_gradient,
    sgd_step,
)
from .sampler import GroupingPlan, make_groups, select_representatives

MULTISINE_PRESETS = {
    "full": (20, 40, 60, 80, 100, 120),
    "halved": (10, 20, 30, 40, 50, 60),
}
CIRCLE_COEFFS = (0.4, 0.8, 1.6, 3.2)


@dataclass
class Dataset:
    coords: np.ndarray
    targets: np.ndarray
    grid_shape: tuple[int, ...]
    kind: str = "line"
    value_range: tuple[float, float] = (-np.inf, np.inf)

    def __post_init__(self):
        if self.targets.ndim == 1:
            self.targets = self.targets[:, None]
        if self.coords.ndim == 1:
            self.coords = self.coords[:, None]
        if self.coords.shape[0] == 0 or self.coords.shape[0] != self.targets.shape[0]:
            raise StructuralError("coords and targets must have the same positive length")
        if int(np.prod(self.grid_shape)) != self.coords.shape[0]:
            raise StructuralError(f"grid shape {self.grid_shape} does not cover {self.coords.shape[0]} points")

    @property
    def size(self) -> int:
        return int(self.coords.shape[0])

    @property
    def channels(self) -> int:
        return int(self.targets.shape[1])

    def as_image(self, values=None) -> np.ndarray:
        v = self.targets if values is None else np.asarray(values)
        img = v.reshape(*self.grid_shape, self.channels)
        return img[..., 0] if self.channels == 1 else img


def circle_target(theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=np.float64)
    return sum(np.sin(a * np.pi * theta) for a in CIRCLE_COEFFS)


def gen_circle_signal(num_points: int) -> Dataset:
    """Sum of four sines of theta, sampled on the unit circle at theta = 2 pi k / N."""
    if num_points < 8:
        raise ValueError("need at least 8 points")
    theta = 2.0 * np.pi * np.arange(num_points) / num_points
    coords = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    return Dataset(coords, circle_target(theta), (num_points,), kind="circle")


def circle_tracked_bins(num_points: int) -> tuple[int, ...]:
    """DFT bins carrying the four tones: the spectral peak nearest a*pi cycles."""
    mag = np.abs(np.fft.rfft(gen_circle_signal(num_points).targets[:, 0]))
    bins = []
    for a in CIRCLE_COEFFS:
        centre = a * np.pi
        lo, hi = int(np.floor(centre)), int(np.ceil(centre))
        bins.append(lo if mag[lo] >= mag[hi] else hi)
    return tuple(bins)


def gen_multisine(num_points: int, frequencies) -> Dataset:
    """sum_k sin(k pi x) on x = -1 + 2 i / N."""
    freqs = tuple(int(k) for k in frequencies)
    if freqs and num_points < 2 * max(freqs):
        raise StructuralError(f"N={num_points} below Nyquist guard 2*{max(freqs)}")
    if num_points < 2:
        raise StructuralError("need at least 2 points")
    x = -1.0 + 2.0 * np.arange(num_points) / num_points
    y = np.zeros(num_points)
    for k in freqs:
        y += np.sin(k * np.pi * x)
    return Dataset(x[:, None], y, (num_points,), kind="line")


def centered_grid(height: int, width: int) -> np.ndarray:
    """Pixel-centre coordinates in [-1, 1]^2, row-major, columns (row, col)."""
    ys = (2.0 * np.arange(height) + 1.0) / height - 1.0
    xs = (2.0 * np.arange(width) + 1.0) / width - 1.0
    yy, xx = np.meshgrid(ys, xs, indexing="ij")
    return np.stack([yy.ravel(), xx.ravel()], axis=1)


def image_dataset(pixels) -> Dataset:
    img = np.asarray(pixels, dtype=np.float64)
    if img.ndim == 2:
        img = img[..., None]
    if img.ndim != 3:
        raise StructuralError(f"expected HxW or HxWxc pixels, got {img.shape}")
    h, w, c = img.shape
    return Dataset(centered_grid(h, w), img.reshape(h * w, c), (h, w), kind="image", value_range=(0.0, 1.0))


# --- portable pixmaps -------------------------------------------------------

def _pnm_tokens(data: bytes, count: int):
    tokens, pos = [], 0
    while len(tokens) < count:
        while data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            while data[pos : pos + 1] not in (b"\n", b""):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    return tokens, pos + 1


def read_pnm(path) -> np.ndarray:
    """Binary PGM (P5) or PPM (P6) -> float array in [0, 1]."""
    data = Path(path).read_bytes()
    (magic, w, h, maxval), pos = _pnm_tokens(data, 4)
    if magic not in (b"P5", b"P6"):
        raise StructuralError(f"{path}: unsupported PNM magic {magic!r}")
    w, h, maxval = int(w), int(h), int(maxval)
    c = 3 if magic == b"P6" else 1
    dtype = np.dtype(">u2") if maxval > 255 else np.uint8
    raw = np.frombuffer(data, dtype=dtype, count=w * h * c, offset=pos)
    img = raw.reshape(h, w, c).astype(np.float64) / maxval
    return img[..., 0] if c == 1 else img


def write_pnm(path, image) -> None:
    img = np.clip(np.asarray(image, dtype=np.float64), 0.0, 1.0)
    if img.ndim == 3 and img.shape[2] == 1:
        img = img[..., 0]
    magic = b"P5" if img.ndim == 2 else b"P6"
    h, w = img.shape[:2]
    body = np.round(img * 255.0).astype(np.uint8).tobytes()
    Path(path).write_bytes(magic + f"\n{w} {h}\n255\n".encode() + body)


# --- training ---------------------------------------------------------------

@dataclass
class TrainResult:
    params: Parameters
    trace: SpectralTrace
    losses: np.ndarray
    lr: float
    step_times: np.ndarray
    metrics: dict = field(default_factory=dict)
    predictions: np.ndarray | None = None

    def mean_step_time(self, skip: int = 100) -> float:
        t = self.step_times
        if t.size == 0:
            return 0.0
        return float(np.mean(t[skip:] if t.size > skip else t))


def auto_lr(spec: NetworkSpec, params: Parameters, coords) -> float:
    """0.5 / lambda_1 of the population eNTK at the given parameters."""
    if coords.shape[0] > FULL_KERNEL_CAP:
        raise MemoryError(f"auto learning rate needs the full eNTK; N={coords.shape[0]} > {FULL_KERNEL_CAP}")
    lam1 = sym_eig(ntk_gram(spec, params, coords)).values[0]
    return 0.5 / lam1


def run_training(config: TrainConfig, dataset: Dataset, spec: NetworkSpec, *, lr: float | None = None,
                 tracked_k=(), projection_basis: Eigensystem | None = None,
                 params: Parameters | None = None) -> TrainResult:
    """Full-batch training with optional spectral gradient adjustment.

    ``lr=None`` uses ``config.lr``; a non-positive ``config.lr`` selects the
    automatic 0.5 / lambda_1 rate.
    """
    coords, y = dataset.coords, dataset.targets
    if spec.input_dim != coords.shape[1] or spec.output_dim != y.shape[1]:
        raise StructuralError(f"network ({spec.input_dim}->{spec.output_dim}) does not fit data "
                              f"({coords.shape[1]}->{y.shape[1]})")
    if params is None:
        params = init_network(spec, config.seed)
    base_lr = lr if lr is not None else config.lr
    if base_lr is None or base_lr <= 0:
        base_lr = auto_lr(spec, params, coords)
    rng = np.random.default_rng([config.seed, 1])
    nproj = 0 if projection_basis is None else min(config.num_projections, projection_basis.size)
    trace = SpectralTrace(tuple(int(k) for k in tracked_k), nproj)
    state = AdamState.zeros(params.size, config.beta1, config.beta2, config.eps) if config.optimizer == "adam" else None

    plan: GroupingPlan | None = None
    transform: SpectralTransform | None = None
    if config.adjustment == "iga":
        plan = make_groups(dataset.grid_shape, config.p)
    elif config.adjustment == "full_kernel":
        if dataset.size > FULL_KERNEL_CAP:
            raise MemoryError(f"full-kernel adjustment refused: N={dataset.size} exceeds cap {FULL_KERNEL_CAP}")
        if config.kernel_source == "analytic":
            transform = build_transform(sym_eig(analytic_ntk_circle(coords)), config.start, config.end, config.mode)

    def record(it: int, out: np.ndarray, r: np.ndarray) -> None:
        loss = float(np.mean(r * r))
        delta = delta_k(y, out, trace.tracked_k) if trace.tracked_k else ()
        proj = ()
        if nproj:
            proj = spectral_projection(projection_basis, r.mean(axis=1))[:nproj]
        trace.append(it, loss, delta, proj)

    feats = encode(spec, coords)
    losses = np.empty(config.iterations + 1)
    step_times = np.empty(config.iterations)
    for it in range(config.iterations):
        t0 = time.perf_counter()
        tape = _run(spec, params, coords, feats)
        r = tape.out - y
        losses[it] = float(np.mean(r * r))
        if it % config.trace_every == 0:
            # diagnostics are kept out of the step timing
            t_rec = time.perf_counter()
            record(it, tape.out, r)
            t0 += time.perf_counter() - t_rec
        try:
            if config.adjustment == "none":
                grad = backward(spec, params, coords, r, tape=tape)
            elif config.adjustment == "full_kernel":
                if config.kernel_source == "empirical" and (transform is None or it % config.refresh_interval == 0):
                    eigs = sym_eig(ntk_gram(spec, params, coords))
                    transform = build_transform(eigs, config.start, config.end, config.mode)
                grad = full_kernel_gradient(spec, params, coords, transform, r, tape=tape)
            else:
                if transform is None or it % config.refresh_interval == 0:
                    select_representatives(plan, r, config.strategy, rng)
                    k_e = ntk_gram(spec, params, coords[plan.representatives])
                    transform = build_transform(sym_eig(k_e), config.start, config.end, config.mode)
                grad = iga_gradient(spec, params, coords, plan, transform, r, tape=tape)
        except RankDeficiencyError as exc:
            raise RankDeficiencyError(exc.index, exc.value, f"iteration {it}: {exc}") from exc
        step_lr = base_lr * config.lr_factor(it)
        if state is None:
            params = sgd_step(params, grad, step_lr)
        else:
            state, params = adam_step(state, params, grad, step_lr)
        step_times[it] = time.perf_counter() - t0

    out = _run(spec, params, coords, feats).out
    r = out - y
    losses[config.iterations] = float(np.mean(r * r))
    if not trace.records or trace.records[-1].iteration < config.iterations:
        record(config.iterations, out, r)

    metrics = {"final_mse": losses[-1]}
    if dataset.kind == "image":
        pred_img = dataset.as_image(np.clip(out, 0.0, 1.0))
        ref_img = dataset.as_image()
        metrics["psnr"] = psnr(pred_img, ref_img)
        if min(dataset.grid_shape) >= 11:
            metrics["ssim"] = ssim(pred_img, ref_img)
    if trace.tracked_k:
        for k, d in zip(trace.tracked_k, trace.records[-1].delta):
            metrics[f"delta_k_{k}"] = float(d)
    return TrainResult(params, trace, losses, float(base_lr), step_times, metrics, out)
