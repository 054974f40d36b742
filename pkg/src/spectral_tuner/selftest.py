"""Fast built-in oracle checks, runnable without the test suite."""

from __future__ import annotations

import sys

import numpy as np

from .kernel import SpectralTransform, build_transform
from .model import NetworkSpec, backward, forward, init_network, jacobian
from .numerics import Eigensystem, jacobi_eig, sym_eig
from .optimizer import iga_gradient, linear_dynamics_predict
from .sampler import make_groups


def _gradient_check() -> float:
    worst = 0.0
    for act in ("relu", "sine"):
        spec = NetworkSpec(2, (8, 8), 1, act)
        params = init_network(spec, 0)
        x = np.random.default_rng(0).uniform(-1, 1, (4, 2))
        jac = jacobian(spec, params, x)
        h = 1e-5
        for k in range(params.size):
            e = np.zeros(params.size)
            e[k] = h
            fd = (forward(spec, params.with_flat(params.flat + e), x)
                  - forward(spec, params.with_flat(params.flat - e), x))[:, 0] / (2 * h)
            worst = max(worst, float(np.max(np.abs(fd - jac[k]))))
    return worst


def _eig_check() -> float:
    a = np.random.default_rng(1).normal(size=(24, 24))
    a = a + a.T
    fast, slow = sym_eig(a), jacobi_eig(a)
    return float(max(np.linalg.norm(fast.reconstruct() - a) / np.linalg.norm(a),
                     np.abs(fast.values - slow.values).max() / np.abs(a).max()))


def _transform_check() -> float:
    k = np.diag([9.0, 4.0, 1.0])
    t = build_transform(sym_eig(k), 1, 2, "adam")
    return float(np.abs(np.linalg.eigvals(k @ t.matrix()) - 1.0).max())


def _dynamics_check() -> float:
    eigs = Eigensystem(np.array([4.0, 1.0]), np.eye(2))
    want = np.sqrt(0.6**10 + 0.9**10)
    return abs(linear_dynamics_predict(eigs, np.ones(2), 0.1, 5).norm - want)


def _identity_iga_check() -> float:
    spec = NetworkSpec(1, (8, 8), 1, "relu")
    params = init_network(spec, 2)
    x = np.linspace(-1, 1, 16)[:, None]
    r = np.sin(3 * x)
    plan = make_groups((16,), 4)
    got = iga_gradient(spec, params, x, plan, SpectralTransform.identity(plan.n), r)
    return float(np.abs(got - backward(spec, params, x, r)).max())


CHECKS = (
    ("jacobian vs central differences", _gradient_check, 1e-6),
    ("eigensolver reconstruction and Jacobi agreement", _eig_check, 1e-10),
    ("balanced spectrum (9,4,1) -> (1,1,1)", _transform_check, 1e-12),
    ("linear dynamics closed form", _dynamics_check, 1e-14),
    ("identity transform reproduces vanilla gradient", _identity_iga_check, 1e-12),
)


def run_all(stream=sys.stdout) -> bool:
    ok = True
    for name, fn, tol in CHECKS:
        err = fn()
        passed = err <= tol
        ok &= passed
        stream.write(f"{'PASS' if passed else 'FAIL'}  {name}  (error {err:.2e}, tol {tol:.0e})\n")
    return ok
