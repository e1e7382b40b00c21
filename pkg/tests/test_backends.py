"""The compiled kernels and the numpy fallback must agree bit for bit."""

import os
import subprocess
import sys

import numpy as np
import pytest

from pcasvm import _accel, _pure
from pcasvm.svm import KernelSpec, kernel_matrix

core = pytest.importorskip("pcasvm._core")


def _problem(seed):
    rng = np.random.default_rng(seed)
    p = int(rng.integers(4, 60))
    d = int(rng.integers(1, 6))
    x = rng.normal(size=(p, d))
    y = np.where(rng.integers(0, 2, p) == 1, 1.0, -1.0)
    y[:2] = [1.0, -1.0]
    kind = ("linear", "polynomial", "rbf")[seed % 3]
    return kernel_matrix(KernelSpec(kind).resolved(d), x, x), y


@pytest.mark.parametrize("seed", range(12))
def test_smo_identical(seed):
    gram, y = _problem(seed)
    C = (1.0, 100.0)[seed % 2]
    fast = core.smo_solve(gram, y, C, 1e-6, 10**7)
    slow = _pure.smo_solve(gram.__getitem__, gram.diagonal().copy(), y, C, 1e-6, 10**7)
    np.testing.assert_array_equal(fast[0], slow[0])
    np.testing.assert_array_equal(fast[1], slow[1])
    assert fast[2:] == slow[2:]


@pytest.mark.parametrize("n", [1, 2, 3, 5, 8, 12])
def test_jacobi_identical(n):
    rng = np.random.default_rng(n)
    b = rng.normal(size=(n + 3, n))
    a = b.T @ b
    w1, v1, s1 = core.jacobi_eigh(a, 1e-12, 100)
    w2, v2, s2 = _pure.jacobi_eigh(a, 1e-12, 100)
    np.testing.assert_array_equal(w1, w2)
    np.testing.assert_array_equal(v1, v2)
    assert s1 == s2 >= 0


def test_environment_forces_fallback():
    env = dict(os.environ, PCASVM_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from pcasvm import _accel; print(_accel.BACKEND)"],
                         capture_output=True, text=True, env=env, check=True)
    assert out.stdout.strip() == "python"
    assert _accel.BACKEND == "cython"
