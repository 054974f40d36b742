"""Grouping of population coordinates and per-group representative selection.

Population indices are row-major positions in the original grid. A plan
holds an ``(n, p)`` slot table: ``slots[j, i]`` is the population index of
member ``i`` of group ``j``. When ``p`` does not divide ``N`` the last group
is padded by repeating its final index; padded slots carry ``valid=False``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .numerics import StructuralError

STRATEGIES = ("slr", "rsi", "ri")


@dataclass
class GroupingPlan:
    slots: np.ndarray
    valid: np.ndarray
    representatives: np.ndarray
    layout: str = "interval"
    frozen: bool = field(default=False)

    @property
    def n(self) -> int:
        return int(self.slots.shape[0])

    @property
    def p(self) -> int:
        return int(self.slots.shape[1])

    @property
    def population(self) -> int:
        return int(self.valid.sum())

    def membership(self) -> dict[int, tuple[int, int]]:
        """population index -> (group j, member i), both 0-based; padded slots skipped."""
        out = {}
        for j, i in zip(*np.nonzero(self.valid)):
            out[int(self.slots[j, i])] = (int(j), int(i))
        return out


def _interval_slots(total: int, p: int) -> tuple[np.ndarray, np.ndarray]:
    n = math.ceil(total / p)
    flat = np.arange(n * p)
    valid = flat < total
    flat = np.minimum(flat, total - 1)
    return flat.reshape(n, p), valid.reshape(n, p)


def make_groups(shape, p: int) -> GroupingPlan:
    """Partition a grid of the given shape into groups of p adjacent points.

    1-D: consecutive intervals. 2-D: sqrt(p) x sqrt(p) patches when p is a
    perfect square whose root divides both sides, row-major intervals
    otherwise. d >= 3: row-major flattening, then intervals.
    """
    shape = tuple(int(s) for s in np.atleast_1d(shape))
    if p < 1:
        raise ValueError("group size p must be >= 1")
    total = int(np.prod(shape))
    if p > total:
        raise StructuralError(f"group size p={p} exceeds population size N={total}")
    if len(shape) == 2:
        h, w = shape
        edge = math.isqrt(p)
        if edge * edge == p and h % edge == 0 and w % edge == 0:
            grid = np.arange(total).reshape(h // edge, edge, w // edge, edge)
            slots = grid.transpose(0, 2, 1, 3).reshape(-1, p)
            valid = np.ones_like(slots, dtype=bool)
            return GroupingPlan(slots, valid, slots[:, 0].copy(), layout="patch")
    slots, valid = _interval_slots(total, p)
    return GroupingPlan(slots, valid, slots[:, 0].copy(), layout="interval")


def select_representatives(plan: GroupingPlan, residual_magnitudes, strategy: str = "slr", rng=None) -> GroupingPlan:
    """Update ``plan.representatives`` in place and return the plan.

    slr: largest |r| per group, ties to the lowest population index.
    ri: uniform draw per group on every call.
    rsi: uniform draw on the first call, then frozen.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"strategy must be one of {STRATEGIES}, got {strategy!r}")
    if strategy == "slr":
        mag = np.asarray(residual_magnitudes, dtype=np.float64)
        if mag.ndim == 2:
            mag = np.abs(mag).sum(axis=1)
        else:
            mag = np.abs(mag)
        vals = np.where(plan.valid, mag[plan.slots], -np.inf)
        # slots within a group are in ascending population order, so argmax's
        # first-hit rule is the lowest-index tie-break
        plan.representatives = plan.slots[np.arange(plan.n), np.argmax(vals, axis=1)]
        return plan
    if strategy == "rsi" and plan.frozen:
        return plan
    if rng is None:
        rng = np.random.default_rng()
    counts = plan.valid.sum(axis=1)
    picks = np.floor(rng.random(plan.n) * counts).astype(int)
    plan.representatives = plan.slots[np.arange(plan.n), picks]
    if strategy == "rsi":
        plan.frozen = True
    return plan


def slice_population(plan: GroupingPlan, i: int) -> np.ndarray:
    """Population index of member i (1-based) of every group, in group order."""
    if not 1 <= i <= plan.p:
        raise StructuralError(f"member index must be in 1..{plan.p}, got {i}")
    return plan.slots[:, i - 1].copy()
