"""Numeric inner loops: edit-distance DP and linear resampling.

Every kernel has a numba implementation and a numpy implementation with
identical results; the public names dispatch on ``_jit.KERNEL_BACKEND``.

Edit-distance cells hold a single int64 that packs the lexicographic cost
``(total, substitutions, deletions)`` as ``total*B*B + subs*B + dels`` with
``B = len(ref) + len(hyp) + 1``. Every component stays below ``B``, so
integer ``min`` is lexicographic ``min`` and one DP yields the minimal
total with ties broken toward fewer substitutions, then fewer deletions.
"""

from __future__ import annotations

import numpy as np

from . import _jit

_MAX_BASE = 1 << 20  # B**3 must fit in int64


def _packing(n: int, m: int) -> tuple[int, int, int, int]:
    base = n + m + 1
    if base >= _MAX_BASE:
        raise ValueError(f"sequences too long for packed edit distance ({n} + {m})")
    unit = base * base
    return base, unit + base, unit + 1, unit  # base, SUB, DEL, INS


def _unpack(key: int, base: int) -> tuple[int, int, int]:
    unit = base * base
    total, rem = divmod(int(key), unit)
    subs, dels = divmod(rem, base)
    return subs, dels, total - subs - dels


@_jit.njit
def _edit_ops_numba(ref, hyp, sub_cost, del_cost, ins_cost):
    n = ref.shape[0]
    m = hyp.shape[0]
    prev = np.empty(m + 1, dtype=np.int64)
    cur = np.empty(m + 1, dtype=np.int64)
    for j in range(m + 1):
        prev[j] = j * ins_cost
    for i in range(1, n + 1):
        cur[0] = i * del_cost
        r = ref[i - 1]
        for j in range(1, m + 1):
            best = prev[j - 1] if hyp[j - 1] == r else prev[j - 1] + sub_cost
            cand = prev[j] + del_cost
            if cand < best:
                best = cand
            cand = cur[j - 1] + ins_cost
            if cand < best:
                best = cand
            cur[j] = best
        prev, cur = cur, prev
    return prev[m]


def _edit_ops_numpy(ref, hyp, sub_cost, del_cost, ins_cost):
    m = hyp.shape[0]
    ramp = np.arange(m + 1, dtype=np.int64) * ins_cost
    prev = ramp.copy()
    for i in range(1, ref.shape[0] + 1):
        diag = prev[:-1] + np.where(hyp == ref[i - 1], 0, sub_cost)
        cur = np.empty(m + 1, dtype=np.int64)
        cur[0] = i * del_cost
        cur[1:] = np.minimum(diag, prev[1:] + del_cost)
        # insertion chain: cur[j] = min_k<=j cur[k] + (j-k)*ins
        cur = np.minimum.accumulate(cur - ramp) + ramp
        prev = cur
    return prev[m]


def edit_ops_numba(ref_ids: np.ndarray, hyp_ids: np.ndarray) -> tuple[int, int, int]:
    """(substitutions, deletions, insertions) via the compiled kernel."""
    base, sub, dele, ins = _packing(len(ref_ids), len(hyp_ids))
    key = _edit_ops_numba(ref_ids, hyp_ids, sub, dele, ins)
    return _unpack(key, base)


def edit_ops_numpy(ref_ids: np.ndarray, hyp_ids: np.ndarray) -> tuple[int, int, int]:
    """(substitutions, deletions, insertions) via the vectorised fallback."""
    base, sub, dele, ins = _packing(len(ref_ids), len(hyp_ids))
    key = _edit_ops_numpy(ref_ids, hyp_ids, sub, dele, ins)
    return _unpack(key, base)


@_jit.njit
def _linear_resample_numba(x, step, out_len):
    out = np.empty(out_len, dtype=np.float64)
    last = x.shape[0] - 1
    for k in range(out_len):
        pos = k * step
        i = int(pos)
        if i >= last:
            out[k] = x[last]
        else:
            frac = pos - i
            out[k] = x[i] * (1.0 - frac) + x[i + 1] * frac
    return out


def linear_resample_numba(x: np.ndarray, step: float, out_len: int) -> np.ndarray:
    return _linear_resample_numba(np.ascontiguousarray(x, dtype=np.float64), float(step), int(out_len))


def linear_resample_numpy(x: np.ndarray, step: float, out_len: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    pos = np.arange(out_len, dtype=np.float64) * step
    return np.interp(pos, np.arange(x.shape[0], dtype=np.float64), x)


if _jit.KERNEL_BACKEND == "numba":
    edit_ops = edit_ops_numba
    linear_resample = linear_resample_numba
else:
    edit_ops = edit_ops_numpy
    linear_resample = linear_resample_numpy
