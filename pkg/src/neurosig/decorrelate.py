"""Temporal decorrelation (second-order DPCM) and the signed-to-unsigned map.

The predictor is linear extrapolation from the two previous samples:
e(n) = x(n) - 2 x(n-1) + x(n-2), exactly invertible in integers. History
starts at zero at every stream or spike-window boundary so segments decode
independently. For 9-bit inputs the residual alphabet is [-1022, 1022].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Q_MAX, Q_MIN
from .errors import CorruptStreamError

RESIDUAL_MAX = 1022


@dataclass
class PredictorState:
    """DPCM2 history: x1 is the previous sample, x2 the one before it."""

    x1: int = 0
    x2: int = 0


def dpcm2_forward(state, x):
    e = x - 2 * state.x1 + state.x2
    state.x2 = state.x1
    state.x1 = x
    return e


def dpcm2_inverse(state, e):
    x = e + 2 * state.x1 - state.x2
    if x < Q_MIN or x > Q_MAX:
        raise CorruptStreamError(f"DPCM2 reconstruction {x} outside 9-bit range")
    state.x2 = state.x1
    state.x1 = x
    return x


def dpcm2_forward_block(x, x1=0, x2=0):
    """Vectorized forward pass from explicit history; returns int32 residuals."""
    x = np.asarray(x, dtype=np.int32)
    n = len(x)
    e = np.empty(n, dtype=np.int32)
    if n == 0:
        return e
    prev1 = np.empty(n, dtype=np.int32)
    prev1[0] = x1
    prev1[1:] = x[:-1]
    prev2 = np.empty(n, dtype=np.int32)
    prev2[0] = x2
    if n > 1:
        prev2[1] = x1
        prev2[2:] = x[:-2]
    np.subtract(x, 2 * prev1 - prev2, out=e)
    return e


def dpcm2_inverse_block(e, x1=0, x2=0, lo=Q_MIN, hi=Q_MAX):
    """Vectorized inverse via double prefix sum; range-checks the output."""
    e = np.asarray(e, dtype=np.int64)
    if len(e) == 0:
        return np.empty(0, dtype=np.int32)
    d = np.cumsum(e) + (x1 - x2)
    x = np.cumsum(d) + x1
    if x.min() < lo or x.max() > hi:
        raise CorruptStreamError("DPCM2 reconstruction outside the sample range")
    return x.astype(np.int32)


def zigzag_map(e):
    """Interleave signed residuals onto the non-negative integers."""
    return 2 * e if e >= 0 else -2 * e - 1


def zigzag_unmap(m):
    if m < 0:
        raise ValueError(f"mapped value must be non-negative, got {m}")
    return m // 2 if m % 2 == 0 else -((m + 1) // 2)


def zigzag_block(e):
    e = np.asarray(e, dtype=np.int64)
    return np.where(e >= 0, 2 * e, -2 * e - 1).astype(np.int32)


def unzigzag_block(m):
    m = np.asarray(m, dtype=np.int64)
    return np.where(m % 2 == 0, m // 2, -((m + 1) // 2)).astype(np.int32)
