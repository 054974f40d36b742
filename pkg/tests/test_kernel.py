import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spectral_tuner.kernel import (
    RankDeficiencyError,
    SpectralTransform,
    analytic_ntk_circle,
    apply_transform,
    build_transform,
    entk,
)
from spectral_tuner.model import NetworkSpec, init_network, ntk_gram
from spectral_tuner.numerics import Eigensystem, StructuralError, sym_eig


def random_psd(n, seed, rank=None):
    a = np.random.default_rng(seed).normal(size=(n, rank or 2 * n))
    return a @ a.T


def modified_spectrum(k, t):
    # K S is similar to the symmetric S^1/2 K S^1/2, so its eigenvalues are real
    half = (t.basis * np.sqrt(t.scales)) @ t.basis.T
    return sym_eig(half @ k @ half).values


def test_entk_examples():
    np.testing.assert_array_equal(entk(np.eye(2)), np.eye(2))
    np.testing.assert_array_equal(entk(np.array([[1.0, 0.0], [0.0, 2.0]])), np.diag([1.0, 4.0]))


def test_entk_is_psd():
    k = entk(np.random.default_rng(0).normal(size=(200, 16)))
    assert np.array_equal(k, k.T)
    assert sym_eig(k).values.min() >= -1e-10


def test_analytic_ntk_examples():
    x = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]])
    k = analytic_ntk_circle(x)
    assert k[0, 0] == pytest.approx(0.5)
    assert k[0, 1] == pytest.approx(0.125)
    assert k[0, 2] == pytest.approx(0.0, abs=1e-15)


def test_analytic_ntk_rejects_off_circle():
    with pytest.raises(StructuralError):
        analytic_ntk_circle(np.array([[1.0, 0.1]]))


def test_identity_range_sgd():
    t = build_transform(sym_eig(random_psd(5, 0)), 1, 1, "sgd")
    np.testing.assert_array_equal(t.scales, np.ones(5))
    np.testing.assert_allclose(t.matrix(), np.eye(5), atol=1e-12)


def test_two_by_two_sgd_balance():
    k = np.diag([4.0, 1.0])
    t = build_transform(sym_eig(k), 1, 2, "sgd")
    np.testing.assert_allclose(t.scales, [1.0, 4.0])
    np.testing.assert_allclose(modified_spectrum(k, t), [4.0, 4.0])


def test_three_by_three_adam_balance():
    k = np.diag([9.0, 4.0, 1.0])
    t = build_transform(sym_eig(k), 1, 2, "adam")
    np.testing.assert_allclose(t.scales, [1 / 9, 1 / 4, 1.0])
    np.testing.assert_allclose(modified_spectrum(k, t), [1.0, 1.0, 1.0])


@pytest.mark.parametrize("start,end,mode", [(0, 1, "sgd"), (2, 1, "sgd"), (1, 4, "adam"), (1, 5, "sgd"), (1, 1, "x")])
def test_build_transform_rejects_bad_ranges(start, end, mode):
    with pytest.raises(ValueError):
        build_transform(sym_eig(random_psd(4, 1)), start, end, mode)


def test_rank_deficiency_reports_index():
    k = random_psd(6, 2, rank=3)
    with pytest.raises(RankDeficiencyError) as info:
        build_transform(sym_eig(k), 1, 5, "sgd")
    assert info.value.index == 4


def test_apply_transform_examples():
    eigs = sym_eig(random_psd(8, 3))
    r = np.random.default_rng(3).normal(size=8)
    ident = build_transform(eigs, 1, 1, "sgd")
    np.testing.assert_allclose(apply_transform(ident, r), r, atol=1e-12)
    t = build_transform(eigs, 1, 5, "adam")
    v1 = eigs.vectors[:, 0]
    np.testing.assert_allclose(apply_transform(t, v1), t.scales[0] * v1, atol=1e-12)
    np.testing.assert_allclose(apply_transform(t, r), t.matrix() @ r, atol=1e-10)
    rr = np.random.default_rng(4).normal(size=(8, 3))
    np.testing.assert_allclose(apply_transform(t, rr), t.matrix() @ rr, atol=1e-10)
    with pytest.raises(StructuralError):
        apply_transform(t, np.zeros(7))


def test_transform_matrix_is_spd():
    t = build_transform(sym_eig(random_psd(10, 5)), 1, 6, "sgd")
    s = t.matrix()
    np.testing.assert_allclose(s, s.T, atol=1e-12)
    assert sym_eig(0.5 * (s + s.T)).values.min() > 0
    np.testing.assert_allclose(t.basis.T @ t.basis, np.eye(10), atol=1e-10)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 12), st.sampled_from(["sgd", "adam"]))
def test_modified_spectrum_profile(seed, end, mode):
    n = 16
    k = random_psd(n, seed)
    eigs = sym_eig(k)
    t = build_transform(eigs, 1, end, mode)
    lam = eigs.values
    target = lam.copy()
    target[:end] = lam[0] if mode == "sgd" else lam[end]
    got = modified_spectrum(k, t)
    np.testing.assert_allclose(got, np.sort(target)[::-1], rtol=1e-8)


def test_identity_transform_helper():
    t = SpectralTransform.identity(3)
    np.testing.assert_array_equal(apply_transform(t, [1.0, 2.0, 3.0]), [1.0, 2.0, 3.0])


def test_fixed_head_entk_approaches_analytic():
    theta = 2 * np.pi * np.arange(16) / 16
    x = np.stack([np.cos(theta), np.sin(theta)], 1)
    spec = NetworkSpec(2, (2048,), 1, variant="two_layer_fixed_head")
    mean = np.mean([ntk_gram(spec, init_network(spec, s), x) for s in range(20)], axis=0)
    assert np.abs(mean - analytic_ntk_circle(x)).max() < 5e-2
