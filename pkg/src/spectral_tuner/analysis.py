"""Spectral-bias diagnostics, image metrics and trace CSV I/O."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .numerics import Eigensystem, StructuralError, as_matrix, dft

PSNR_CAP = 100.0


class UnsupportedFrequencyError(ValueError):
    pass


def _channel_mean(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return x.mean(axis=1) if x.ndim == 2 else x.ravel()


def delta_k(target, prediction, tracked_k) -> np.ndarray:
    """|F[target](k) - F[prediction](k)| / |F[target](k)| per tracked bin.

    Multi-channel inputs of shape (N, c) are reduced to their channel mean.
    """
    t = _channel_mean(target)
    p = _channel_mean(prediction)
    if t.shape != p.shape:
        raise StructuralError(f"target {t.shape} and prediction {p.shape} differ in length")
    ks = np.asarray(list(tracked_k), dtype=int)
    if ks.size == 0:
        return np.zeros(0)
    ft, fp = dft(t), dft(p)
    if np.any(ks < 0) or np.any(ks >= ft.shape[0]):
        raise UnsupportedFrequencyError(f"tracked bins {ks.tolist()} outside 0..{ft.shape[0] - 1}")
    denom = np.abs(ft[ks])
    bad = ks[denom <= 1e-9]
    if bad.size:
        raise UnsupportedFrequencyError(f"target has no energy at tracked frequencies {bad.tolist()}")
    return np.abs(ft[ks] - fp[ks]) / denom


def psnr(prediction, target, peak: float = 1.0) -> float:
    p = np.asarray(prediction, dtype=np.float64)
    t = np.asarray(target, dtype=np.float64)
    if p.shape != t.shape:
        raise StructuralError(f"shapes differ: {p.shape} vs {t.shape}")
    mse = float(np.mean((p - t) ** 2))
    if mse == 0.0:
        return PSNR_CAP
    return min(PSNR_CAP, 10.0 * np.log10(peak * peak / mse))


def _gaussian_window(size: int = 11, sigma: float = 1.5) -> np.ndarray:
    x = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return g / g.sum()


def _filter_valid(img: np.ndarray, g: np.ndarray) -> np.ndarray:
    w = g.shape[0]
    rows = np.lib.stride_tricks.sliding_window_view(img, w, axis=0) @ g
    return np.lib.stride_tricks.sliding_window_view(rows, w, axis=1) @ g


def _ssim_single(x: np.ndarray, y: np.ndarray, data_range: float) -> float:
    g = _gaussian_window()
    c1 = (0.01 * data_range) ** 2
    c2 = (0.03 * data_range) ** 2
    mx, my = _filter_valid(x, g), _filter_valid(y, g)
    sxx = _filter_valid(x * x, g) - mx * mx
    syy = _filter_valid(y * y, g) - my * my
    sxy = _filter_valid(x * y, g) - mx * my
    num = (2 * mx * my + c1) * (2 * sxy + c2)
    den = (mx * mx + my * my + c1) * (sxx + syy + c2)
    return float(np.mean(num / den))


def ssim(prediction, target, data_range: float = 1.0) -> float:
    """Single-scale SSIM, 11x11 Gaussian window (sigma 1.5), valid region only.

    (H, W, c) inputs are scored per channel and averaged.
    """
    p = np.asarray(prediction, dtype=np.float64)
    t = np.asarray(target, dtype=np.float64)
    if p.shape != t.shape:
        raise StructuralError(f"shapes differ: {p.shape} vs {t.shape}")
    if p.ndim not in (2, 3) or min(p.shape[:2]) < 11:
        raise StructuralError(f"ssim needs images of at least 11x11, got {p.shape}")
    if p.ndim == 2:
        return _ssim_single(p, t, data_range)
    return float(np.mean([_ssim_single(p[..., c], t[..., c], data_range) for c in range(p.shape[2])]))


def frobenius_distance(a, b) -> float:
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape != b.shape:
        raise StructuralError(f"shapes differ: {a.shape} vs {b.shape}")
    return float(np.linalg.norm(a - b))


def spectral_projection(eigs: Eigensystem, r) -> np.ndarray:
    r = np.asarray(r, dtype=np.float64)
    if r.shape[0] != eigs.vectors.shape[0]:
        raise StructuralError(f"residual length {r.shape[0]} != eigenvector length {eigs.vectors.shape[0]}")
    return eigs.vectors.T @ r


@dataclass
class TraceRecord:
    iteration: int
    loss: float
    delta: np.ndarray
    projections: np.ndarray = field(default_factory=lambda: np.zeros(0))


@dataclass
class SpectralTrace:
    tracked_k: tuple[int, ...] = ()
    num_projections: int = 0
    records: list[TraceRecord] = field(default_factory=list)

    def append(self, iteration: int, loss: float, delta=(), projections=()) -> None:
        if self.records and iteration <= self.records[-1].iteration:
            raise ValueError("trace iterations must be strictly increasing")
        delta = np.asarray(delta, dtype=np.float64).reshape(-1)
        proj = np.asarray(projections, dtype=np.float64).reshape(-1)
        if delta.shape[0] != len(self.tracked_k) or proj.shape[0] != self.num_projections:
            raise StructuralError("record width does not match the trace header")
        self.records.append(TraceRecord(int(iteration), float(loss), delta, proj))

    def header(self) -> list[str]:
        return (
            ["iteration", "loss"]
            + [f"delta_k_{k}" for k in self.tracked_k]
            + [f"proj_{i + 1}" for i in range(self.num_projections)]
        )

    def iterations(self) -> np.ndarray:
        return np.array([r.iteration for r in self.records], dtype=int)

    def losses(self) -> np.ndarray:
        return np.array([r.loss for r in self.records])

    def deltas(self) -> np.ndarray:
        return np.array([r.delta for r in self.records]).reshape(len(self.records), len(self.tracked_k))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header())
        for r in self.records:
            w.writerow([r.iteration, _fmt(r.loss), *map(_fmt, r.delta), *map(_fmt, r.projections)])
        return buf.getvalue()

    def write(self, path) -> None:
        Path(path).write_text(self.to_csv(), encoding="utf-8", newline="\n")

    @classmethod
    def from_csv(cls, text: str) -> "SpectralTrace":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or rows[0][:2] != ["iteration", "loss"]:
            raise StructuralError("not a spectral trace CSV")
        head = rows[0]
        tracked = tuple(int(h[len("delta_k_"):]) for h in head if h.startswith("delta_k_"))
        nproj = sum(1 for h in head if h.startswith("proj_"))
        trace = cls(tracked, nproj)
        nd = len(tracked)
        for row in rows[1:]:
            vals = [float(v) for v in row[1:]]
            trace.append(int(row[0]), vals[0], vals[1 : 1 + nd], vals[1 + nd :])
        return trace

    @classmethod
    def read(cls, path) -> "SpectralTrace":
        return cls.from_csv(Path(path).read_text(encoding="utf-8"))


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"
