import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from heardu import _jit, kernels


def brute_ops(ref, hyp):
    """Full-matrix DP over (total, subs, dels) tuples, compared lexicographically."""
    n, m = len(ref), len(hyp)
    d = [[None] * (m + 1) for _ in range(n + 1)]
    d[0] = [(j, 0, 0) for j in range(m + 1)]
    for i in range(1, n + 1):
        d[i][0] = (i, 0, i)
        for j in range(1, m + 1):
            t, s, dl = d[i - 1][j - 1]
            diag = (t, s, dl) if ref[i - 1] == hyp[j - 1] else (t + 1, s + 1, dl)
            t, s, dl = d[i - 1][j]
            up = (t + 1, s, dl + 1)
            t, s, dl = d[i][j - 1]
            left = (t + 1, s, dl)
            d[i][j] = min(diag, up, left)
    t, s, dl = d[n][m]
    return s, dl, t - s - dl


IMPLS = [kernels.edit_ops_numba, kernels.edit_ops_numpy]


@pytest.mark.parametrize("impl", IMPLS)
@pytest.mark.parametrize("ref,hyp,expected", [
    ([0, 1, 2, 3], [0, 9, 2], (1, 1, 0)),
    ([0], [], (0, 1, 0)),
    ([], [4, 5], (0, 0, 2)),
    ([1, 2, 3], [1, 2, 3], (0, 0, 0)),
    ([1, 2], [3, 4, 5], (2, 0, 1)),
])
def test_frozen_cases(impl, ref, hyp, expected):
    assert impl(np.array(ref, dtype=np.int64), np.array(hyp, dtype=np.int64)) == expected


@settings(max_examples=300, deadline=None)
@given(st.lists(st.integers(0, 4), max_size=15), st.lists(st.integers(0, 4), max_size=15))
def test_kernels_match_brute_force(ref, hyp):
    r, h = np.array(ref, dtype=np.int64), np.array(hyp, dtype=np.int64)
    expected = brute_ops(ref, hyp)
    assert kernels.edit_ops_numba(r, h) == expected
    assert kernels.edit_ops_numpy(r, h) == expected


def test_packing_limit():
    with pytest.raises(ValueError):
        kernels._packing(1 << 19, 1 << 19)


@pytest.mark.parametrize("step,out_len", [(1.0, 50), (1.1, 45), (0.9, 56), (2.0, 25), (0.5, 99)])
def test_resample_parity(step, out_len):
    x = np.random.default_rng(3).standard_normal(50)
    a = kernels.linear_resample_numba(x, step, out_len)
    b = kernels.linear_resample_numpy(x, step, out_len)
    assert a.shape == b.shape == (out_len,)
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-12)


def test_resample_values():
    x = np.array([0.0, 10.0, 20.0])
    np.testing.assert_allclose(kernels.linear_resample_numba(x, 0.5, 6), [0, 5, 10, 15, 20, 20])
    np.testing.assert_allclose(kernels.linear_resample_numpy(x, 0.5, 6), [0, 5, 10, 15, 20, 20])


def test_dispatch_follows_backend():
    assert _jit.KERNEL_BACKEND in ("numba", "numpy")
    want = kernels.edit_ops_numba if _jit.KERNEL_BACKEND == "numba" else kernels.edit_ops_numpy
    assert kernels.edit_ops is want
    if _jit.NUMBA_AVAILABLE and "HEARDU_KERNELS" not in os.environ:
        assert _jit.KERNEL_BACKEND == "numba"


@pytest.mark.parametrize("value,expected", [("numpy", "numpy"), ("numba", None)])
def test_backend_flag_env(value, expected):
    code = "from heardu import kernels, _jit; print(_jit.KERNEL_BACKEND, kernels.edit_ops.__name__)"
    env = {"HEARDU_KERNELS": value, "PATH": "/usr/bin:/bin"}
    out = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, env=env, check=True)
    backend, name = out.stdout.split()
    expected = expected or ("numba" if _jit.NUMBA_AVAILABLE else "numpy")
    assert backend == expected and name == f"edit_ops_{expected}"


def test_backend_flag_invalid():
    env = {"HEARDU_KERNELS": "cuda", "PATH": "/usr/bin:/bin"}
    out = subprocess.run([sys.executable, "-c", "import heardu.kernels"], capture_output=True,
                         text=True, env=env)
    assert out.returncode != 0 and "HEARDU_KERNELS" in out.stderr
