"""Empirical/analytic NTK matrices and eigenvalue-balancing transforms."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import Eigensystem, StructuralError, as_matrix

RANK_FLOOR = 1e-12
MODES = ("sgd", "adam")


class RankDeficiencyError(ValueError):
    """An eigenvalue inside the balanced range is (numerically) non-positive."""

    def __init__(self, index: int, value: float, message: str | None = None):
        self.index = index
        self.value = value
        super().__init__(
            message
            or f"eigenvalue #{index} = {value:.3e} is below the rank floor; shrink `end` or add jitter"
        )


@dataclass(frozen=True)
class SpectralTransform:
    """S = sum_i scales[i] * basis[:, i] basis[:, i]^T, stored factorized."""

    basis: np.ndarray
    scales: np.ndarray
    start: int
    end: int
    mode: str

    @property
    def size(self) -> int:
        return int(self.basis.shape[0])

    def matrix(self) -> np.ndarray:
        return (self.basis * self.scales) @ self.basis.T

    @classmethod
    def identity(cls, n: int) -> "SpectralTransform":
        return cls(np.eye(n), np.ones(n), 1, 1, "sgd")


def entk(jac) -> np.ndarray:
    j = as_matrix(jac, "jacobian")
    k = j.T @ j
    return 0.5 * (k + k.T)


def analytic_ntk_circle(points) -> np.ndarray:
    """Infinite-width NTK of the two-layer fixed-head ReLU net on unit vectors."""
    x = as_matrix(points, "points")
    norms = np.linalg.norm(x, axis=1)
    if np.any(np.abs(norms - 1.0) > 1e-9):
        raise StructuralError("analytic_ntk_circle needs unit-norm points")
    c = np.clip(x @ x.T, -1.0, 1.0)
    k = (c + 1.0) * (np.pi - np.arccos(c)) / (4.0 * np.pi)
    return 0.5 * (k + k.T)


def build_transform(eigs: Eigensystem, start: int, end: int, mode: str = "sgd") -> SpectralTransform:
    """Balance eigenvalues start..end (1-based, inclusive).

    sgd: scale_i = lambda_start / lambda_i, so the range collapses onto lambda_start.
    adam: scale_i = lambda_{end+1} / lambda_i, so end-start+2 directions share lambda_{end+1}.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    n = eigs.size
    if not 1 <= start <= end <= n:
        raise ValueError(f"need 1 <= start <= end <= n, got start={start}, end={end}, n={n}")
    if mode == "adam" and end >= n:
        raise ValueError(f"adam mode needs end < n (uses eigenvalue end+1), got end={end}, n={n}")
    lam = eigs.values
    floor = RANK_FLOOR * max(lam[0], 0.0)
    last = end + 1 if mode == "adam" else end
    for i in range(start, last + 1):
        if not lam[i - 1] > floor:
            raise RankDeficiencyError(i, float(lam[i - 1]))
    target = lam[start - 1] if mode == "sgd" else lam[end]
    scales = np.ones(n)
    scales[start - 1 : end] = target / lam[start - 1 : end]
    return SpectralTransform(eigs.vectors, scales, start, end, mode)


def apply_transform(t: SpectralTransform, r) -> np.ndarray:
    """S r for r of shape (n,) or (n, c), without forming S."""
    r = np.asarray(r, dtype=np.float64)
    if r.shape[0] != t.size:
        raise StructuralError(f"residual length {r.shape[0]} does not match transform size {t.size}")
    coef = t.basis.T @ r
    if coef.ndim == 1:
        coef = coef * t.scales
    else:
        coef = coef * t.scales.reshape(-1, *([1] * (coef.ndim - 1)))
    return t.basis @ coef
