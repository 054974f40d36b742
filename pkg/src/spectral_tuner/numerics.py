"""Dense symmetric eigendecomposition and DFT magnitude spectra.

Everything here works in float64. ``sym_eig`` is backed by LAPACK
(``numpy.linalg.eigh``); ``jacobi_eig`` is a self-contained cyclic Jacobi
solver kept as an independent cross-check and as a pure-numpy fallback.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SYMMETRY_RTOL = 1e-12


class StructuralError(ValueError):
    """Input has the wrong shape, size or structure for the operation."""


class ConvergenceError(RuntimeError):
    """An iterative solver hit its iteration cap."""


@dataclass(frozen=True)
class Eigensystem:
    """Eigenpairs of a symmetric matrix.

    ``values`` are sorted in descending order and ``vectors[:, i]`` is the
    unit eigenvector belonging to ``values[i]``.
    """

    values: np.ndarray
    vectors: np.ndarray

    def __post_init__(self):
        if self.vectors.ndim != 2 or self.vectors.shape[1] != self.values.shape[0]:
            raise StructuralError(
                f"vectors shape {self.vectors.shape} does not match {self.values.shape[0]} values"
            )

    @property
    def size(self) -> int:
        return int(self.values.shape[0])

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * self.values) @ self.vectors.T


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise StructuralError(f"{name} must be 2-D, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise StructuralError(f"{name} has non-finite entries")
    return a


def _check_symmetric(a: np.ndarray) -> None:
    if a.shape[0] != a.shape[1]:
        raise StructuralError(f"expected a square matrix, got shape {a.shape}")
    scale = np.max(np.abs(a)) if a.size else 0.0
    if scale > 0 and np.max(np.abs(a - a.T)) > SYMMETRY_RTOL * scale:
        raise StructuralError("matrix is not symmetric")


def _canonical(values: np.ndarray, vectors: np.ndarray) -> Eigensystem:
    """Sort descending and flip signs so each vector's first nonzero entry is positive."""
    order = np.argsort(-values, kind="stable")
    values = values[order]
    vectors = vectors[:, order].copy()
    tol = 1e-12
    for i in range(vectors.shape[1]):
        col = vectors[:, i]
        nz = np.flatnonzero(np.abs(col) > tol)
        if nz.size and col[nz[0]] < 0:
            vectors[:, i] = -col
    return Eigensystem(values, vectors)


def sym_eig(a) -> Eigensystem:
    """All eigenpairs of a symmetric matrix, largest eigenvalue first."""
    a = as_matrix(a)
    _check_symmetric(a)
    # exact symmetrization so LAPACK sees the same lower and upper triangles
    a = 0.5 * (a + a.T)
    try:
        values, vectors = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"LAPACK eigensolver did not converge: {exc}") from exc
    return _canonical(values, vectors)


def jacobi_eig(a, max_sweeps: int = 60, tol: float = 1e-15) -> Eigensystem:
    """Cyclic Jacobi eigensolver.

    Sweeps over all off-diagonal pairs, annihilating each with a Givens
    rotation, until the off-diagonal Frobenius mass falls below
    ``tol * ||a||_F``.
    """
    a = as_matrix(a)
    _check_symmetric(a)
    n = a.shape[0]
    m = 0.5 * (a + a.T)
    v = np.eye(n)
    norm = np.linalg.norm(m)
    if n == 1 or norm == 0.0:
        return _canonical(np.diag(m).copy(), v)
    for _ in range(max_sweeps):
        # summing the strict upper triangle avoids cancellation against the diagonal
        off = np.sqrt(2.0 * np.sum(np.triu(m, 1) ** 2))
        if off <= tol * norm:
            return _canonical(np.diag(m).copy(), v)
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = m[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (m[q, q] - m[p, p]) / (2.0 * apq)
                if theta == 0.0:
                    t = 1.0
                elif abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                mp = m[:, p].copy()
                mq = m[:, q].copy()
                m[:, p] = c * mp - s * mq
                m[:, q] = s * mp + c * mq
                mp = m[p, :].copy()
                mq = m[q, :].copy()
                m[p, :] = c * mp - s * mq
                m[q, :] = s * mp + c * mq
                m[p, q] = m[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    raise ConvergenceError(f"Jacobi eigensolver did not converge within max_sweeps={max_sweeps}")


def dft(signal) -> np.ndarray:
    """Unnormalized forward DFT, bins k = 0..N//2. Accepts (N,) or (N, c)."""
    s = np.asarray(signal, dtype=np.float64)
    if s.ndim == 0 or s.shape[0] < 2:
        raise StructuralError("signal needs at least 2 samples")
    return np.fft.rfft(s, axis=0)


def dft_magnitude(signal) -> np.ndarray:
    """|sum_n s[n] exp(-2 pi i k n / N)| for k = 0..N//2."""
    return np.abs(dft(signal))
