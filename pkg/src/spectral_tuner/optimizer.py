"""Descent steps, adjusted gradients and the linear-dynamics oracle."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from .kernel import SpectralTransform, apply_transform
from .model import NetworkSpec, Parameters, backward
from .numerics import Eigensystem, StructuralError
from .sampler import GroupingPlan

FULL_KERNEL_CAP = 4096
ADJUSTMENTS = ("none", "full_kernel", "iga")


@dataclass(frozen=True)
class TrainConfig:
    iterations: int = 2000
    lr: float = 1e-3  # <= 0 selects 0.5 / lambda_1 of the initial eNTK
    lr_decay_at: float = 0.0  # fraction of iterations; 0 disables decay
    lr_decay_factor: float = 0.1
    optimizer: str = "adam"
    adjustment: str = "none"
    kernel_source: str = "empirical"
    start: int = 1
    end: int = 1
    mode: str = "adam"
    p: int = 8
    strategy: str = "slr"
    refresh_interval: int = 1
    seed: int = 0
    trace_every: int = 50
    num_projections: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if self.start < 1:
            raise ValueError("start must be >= 1")
        if self.end < self.start:
            raise ValueError(f"end ({self.end}) must be >= start ({self.start})")
        if self.p < 1:
            raise ValueError("p must be >= 1")
        if self.adjustment not in ADJUSTMENTS:
            raise ValueError(f"adjustment must be one of {ADJUSTMENTS}")
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError("optimizer must be sgd or adam")
        if self.kernel_source not in ("analytic", "empirical"):
            raise ValueError("kernel_source must be analytic or empirical")
        if self.refresh_interval < 1:
            raise ValueError("refresh_interval must be >= 1")

    def lr_factor(self, iteration: int) -> float:
        """Step schedule: 1 until lr_decay_at * iterations, then lr_decay_factor."""
        if self.lr_decay_at > 0 and iteration >= int(round(self.lr_decay_at * self.iterations)):
            return self.lr_decay_factor
        return 1.0


@dataclass(frozen=True)
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros(cls, q: int, beta1=0.9, beta2=0.999, eps=1e-8) -> "AdamState":
        return cls(np.zeros(q), np.zeros(q), 0, beta1, beta2, eps)


def sgd_step(params: Parameters, grad, lr: float) -> Parameters:
    return params.with_flat(params.flat - lr * np.asarray(grad))


def adam_step(state: AdamState, params: Parameters, grad, lr: float) -> tuple[AdamState, Parameters]:
    """One Adam update with bias correction; ``grad`` is used as given."""
    g = np.asarray(grad, dtype=np.float64)
    t = state.t + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * g
    v = state.beta2 * state.v + (1.0 - state.beta2) * g * g
    m_hat = m / (1.0 - state.beta1**t)
    v_hat = v / (1.0 - state.beta2**t)
    new = params.flat - lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return replace(state, m=m, v=v, t=t), params.with_flat(new)


def _as_2d(r) -> np.ndarray:
    r = np.asarray(r, dtype=np.float64)
    return r[:, None] if r.ndim == 1 else r


def iga_residuals(plan: GroupingPlan, transform: SpectralTransform, r) -> np.ndarray:
    """Population-ordered residuals with S applied to every group-aligned slice.

    Element j of slice i is the residual of ``slots[j, i]``; after the
    transform it is scattered back to that population index. Padded slots
    enter as zero and receive nothing.
    """
    r = _as_2d(r)
    if transform.size != plan.n:
        raise StructuralError(f"transform size {transform.size} != group count {plan.n}")
    if r.shape[0] != plan.population:
        raise StructuralError(f"got {r.shape[0]} residuals for a population of {plan.population}")
    mask = plan.valid[:, :, None]
    sliced = r[plan.slots] * mask  # (n, p, c)
    n, p, c = sliced.shape
    adjusted = apply_transform(transform, sliced.reshape(n, p * c)).reshape(n, p, c) * mask
    out = np.zeros_like(r)
    np.add.at(out, plan.slots[plan.valid], adjusted[plan.valid])
    return out


def iga_gradient(spec: NetworkSpec, params: Parameters, coords, plan: GroupingPlan,
                 transform: SpectralTransform, r, tape=None) -> np.ndarray:
    """sum_i J(X_i) S r^i, computed as one backward pass over the scattered residuals."""
    adjusted = iga_residuals(plan, transform, r)
    return backward(spec, params, coords, adjusted, tape=tape)


def full_kernel_gradient(spec: NetworkSpec, params: Parameters, coords, transform: SpectralTransform, r,
                         cap: int = FULL_KERNEL_CAP, tape=None) -> np.ndarray:
    """J(X) S r with S built over the whole population."""
    r = _as_2d(r)
    if r.shape[0] > cap:
        raise MemoryError(f"full-kernel adjustment refused: N={r.shape[0]} exceeds cap {cap}")
    if transform.size != r.shape[0]:
        raise StructuralError(f"transform size {transform.size} != N={r.shape[0]}")
    return backward(spec, params, coords, apply_transform(transform, r), tape=tape)


class LinearPrediction(NamedTuple):
    norm: np.ndarray | float
    unstable: bool


def linear_dynamics_predict(eigs: Eigensystem, y, lr: float, t) -> LinearPrediction:
    """||r_t|| = sqrt(sum_i (1 - lr lambda_i)^{2t} (v_i.y)^2), starting from r_0 = -y."""
    y = np.asarray(y, dtype=np.float64)
    if y.shape[0] != eigs.size:
        raise StructuralError(f"target length {y.shape[0]} != kernel size {eigs.size}")
    unstable = bool(lr * eigs.values[0] >= 2.0)
    if unstable:
        warnings.warn(f"lr * lambda_1 = {lr * eigs.values[0]:.3g} >= 2; dynamics diverge", RuntimeWarning)
    proj2 = (eigs.vectors.T @ y) ** 2
    factor = 1.0 - lr * eigs.values
    t_arr = np.asarray(t, dtype=np.float64)
    norm = np.sqrt(np.sum(factor[None, :] ** (2 * t_arr.reshape(-1, 1)) * proj2[None, :], axis=1))
    if t_arr.ndim == 0:
        norm = float(norm[0])
    return LinearPrediction(norm, unstable)


def inductive_residual_change(k_e, r_e, group_of, p: int, lr: float, transform: SpectralTransform | None = None):
    """Predicted one-step residual change for every population point.

    Point i in group j moves by -lr * p * (K_e S r_e)[j]; with no transform S = I.
    """
    r_e = np.asarray(r_e, dtype=np.float64)
    v = r_e if transform is None else apply_transform(transform, r_e)
    per_group = -lr * p * (np.asarray(k_e) @ v)
    return per_group[np.asarray(group_of)]
