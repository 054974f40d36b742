import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from spectral_tuner.numerics import (
    ConvergenceError,
    StructuralError,
    dft_magnitude,
    jacobi_eig,
    sym_eig,
)


def random_symmetric(n, seed):
    a = np.random.default_rng(seed).normal(size=(n, n))
    return 0.5 * (a + a.T)


def brute_dft(s):
    n = len(s)
    k = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(k, k) / n) @ s


def test_identity_eigenvalues():
    e = sym_eig(np.eye(4))
    np.testing.assert_allclose(e.values, np.ones(4))
    np.testing.assert_allclose(e.vectors.T @ e.vectors, np.eye(4), atol=1e-12)


def test_diagonal_case():
    e = sym_eig(np.diag([1.0, 4.0]))
    np.testing.assert_allclose(e.values, [4.0, 1.0])
    np.testing.assert_allclose(np.abs(e.vectors), [[0, 1], [1, 0]], atol=1e-14)


def test_reconstruction_64_matches_jacobi():
    a = random_symmetric(64, 3)
    lapack = sym_eig(a)
    jac = jacobi_eig(a)
    norm = np.linalg.norm(a)
    assert np.linalg.norm(lapack.reconstruct() - a) < 1e-8 * norm
    assert np.linalg.norm(jac.reconstruct() - a) < 1e-8 * norm
    np.testing.assert_allclose(lapack.values, jac.values, atol=1e-10 * norm)
    # random spectrum has no ties, so vectors agree after the sign convention
    np.testing.assert_allclose(lapack.vectors, jac.vectors, atol=1e-8)


def test_eigenpairs_satisfy_definition():
    a = random_symmetric(32, 11)
    e = sym_eig(a)
    resid = a @ e.vectors - e.vectors * e.values
    assert np.max(np.linalg.norm(resid, axis=0)) < 1e-8 * np.linalg.norm(a)
    assert np.all(np.diff(e.values) <= 0)


def test_sign_convention_first_nonzero_positive():
    e = sym_eig(random_symmetric(10, 5))
    for col in e.vectors.T:
        nz = col[np.abs(col) > 1e-12]
        assert nz[0] > 0


def test_degenerate_subspace_is_preserved():
    q, _ = np.linalg.qr(np.random.default_rng(0).normal(size=(6, 6)))
    a = (q * np.array([5.0, 5.0, 5.0, 2.0, 1.0, 1.0])) @ q.T
    for e in (sym_eig(a), jacobi_eig(a)):
        top = e.vectors[:, :3]
        # projector onto the repeated eigenspace is basis independent
        np.testing.assert_allclose(top @ top.T, q[:, :3] @ q[:, :3].T, atol=1e-9)


def test_handles_1024():
    a = random_symmetric(1024, 2)
    e = sym_eig(a)
    assert e.size == 1024
    assert np.linalg.norm(e.reconstruct() - a) < 1e-8 * np.linalg.norm(a)


@pytest.mark.parametrize("bad", [np.zeros((3, 4)), np.array([[1.0, 2.0], [0.0, 1.0]]), np.zeros(3)])
def test_structural_errors(bad):
    with pytest.raises(StructuralError):
        sym_eig(bad)
    with pytest.raises(StructuralError):
        jacobi_eig(bad)


def test_jacobi_iteration_cap_is_reported():
    with pytest.raises(ConvergenceError, match="max_sweeps=1"):
        jacobi_eig(random_symmetric(12, 0), max_sweeps=1)


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 8), st.integers(1, 8)),
              elements=st.floats(-10, 10, allow_nan=False)))
def test_trace_and_psd_product(m):
    a = m @ m.T  # PSD
    e = sym_eig(a)
    assert np.isclose(e.values.sum(), np.trace(a), rtol=1e-9, atol=1e-9 * max(1.0, np.abs(a).max()))
    assert np.prod(np.clip(e.values, 0, None)) >= 0
    assert e.values[-1] >= -1e-9 * max(1.0, e.values[0])


def test_dft_constant_signal():
    np.testing.assert_allclose(dft_magnitude([1, 1, 1, 1]), [4, 0, 0], atol=1e-12)


def test_dft_single_tone():
    n = np.arange(32)
    mag = dft_magnitude(np.cos(2 * np.pi * 3 * n / 32))
    assert mag.shape == (17,)
    assert mag[3] == pytest.approx(16.0)
    assert np.max(np.delete(mag, 3)) < 1e-12


def test_dft_parseval_against_brute_force():
    s = np.random.default_rng(7).normal(size=64)
    full = brute_dft(s)
    np.testing.assert_allclose(dft_magnitude(s), np.abs(full[:33]), atol=1e-10)
    assert np.sum(s**2) == pytest.approx(np.sum(np.abs(full) ** 2) / 64, rel=1e-9)


@settings(max_examples=25, deadline=None)
@given(arrays(np.float64, st.integers(2, 40), elements=st.floats(-5, 5, allow_nan=False)), st.integers(0, 39))
def test_dft_magnitude_shift_invariant(s, shift):
    np.testing.assert_allclose(dft_magnitude(np.roll(s, shift)), dft_magnitude(s), atol=1e-9)


def test_dft_rejects_short_input():
    with pytest.raises(StructuralError):
        dft_magnitude([])


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 30), st.integers(0, 10_000))
def test_jacobi_agrees_with_lapack(n, seed):
    a = random_symmetric(n, seed)
    fast, slow = sym_eig(a), jacobi_eig(a)
    np.testing.assert_allclose(slow.values, fast.values, atol=1e-10 * np.abs(a).max())
    assert np.linalg.norm(slow.reconstruct() - a) < 1e-10 * np.linalg.norm(a)
