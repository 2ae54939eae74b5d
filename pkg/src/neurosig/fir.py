"""16-channel fixed-point FIR bank.

Each channel runs a 16-tap filter y[n] = sum_i c_i x[n-i] with 16-bit signed
coefficients. Products are truncated by 2 bits before accumulation so 16
terms fit the 26-bit accumulator, which wraps (two's complement) rather than
saturating; only the final output is saturated to int16 after the configured
right shift.
"""

from __future__ import annotations

import numpy as np

from . import kernels

TAPS = 16
BANK_CHANNELS = 16
COEFF_MIN, COEFF_MAX = -32768, 32767
ACC_BITS = 26
PRODUCT_SHIFT = 2
DEFAULT_OUT_SHIFT = 12


class FirBank:
    """Coefficient and delay-line state for up to 16 independent channels."""

    def __init__(self, out_shift=DEFAULT_OUT_SHIFT):
        self.coeffs = np.zeros((BANK_CHANNELS, TAPS), dtype=np.int16)
        self.delay = np.zeros((BANK_CHANNELS, TAPS), dtype=np.int32)
        self.out_shift = out_shift

    def load_coeffs(self, channel, coeffs):
        """Replace one channel's coefficients; the delay line is preserved."""
        self._check_channel(channel)
        coeffs = np.asarray(coeffs)
        if coeffs.shape != (TAPS,):
            raise ValueError(f"need exactly {TAPS} coefficients")
        if coeffs.min() < COEFF_MIN or coeffs.max() > COEFF_MAX:
            raise ValueError("coefficients must fit in int16")
        self.coeffs[channel] = coeffs.astype(np.int16)

    def step(self, channel, x_n):
        """One sample through one channel; returns the saturated int16 output."""
        self._check_channel(channel)
        if not -32768 <= x_n <= 32767:
            raise ValueError(f"input sample {x_n} outside int16")
        y, delay = kernels.fir_step_raw(
            self.coeffs[channel].tolist(),
            self.delay[channel].tolist(),
            int(x_n),
            self.out_shift,
        )
        self.delay[channel] = delay
        return y

    def process(self, channel, x):
        """Filter a whole block through the active kernel backend."""
        self._check_channel(channel)
        x = np.ascontiguousarray(x, dtype=np.int32)
        y, delay = kernels.fir_channel(
            x, self.coeffs[channel], self.delay[channel], self.out_shift
        )
        self.delay[channel] = delay
        return y

    def _check_channel(self, channel):
        if not 0 <= channel < BANK_CHANNELS:
            raise ValueError(f"channel must be in [0, {BANK_CHANNELS}), got {channel}")


def load_coeff_file(path):
    """Plain-text coefficient file: 16 lines of 16 integers."""
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            rows.append([int(tok) for tok in line.split()])
    if len(rows) != BANK_CHANNELS or any(len(r) != TAPS for r in rows):
        raise ValueError(f"coefficient file must hold {BANK_CHANNELS} lines of {TAPS} integers")
    arr = np.asarray(rows)
    if arr.min() < COEFF_MIN or arr.max() > COEFF_MAX:
        raise ValueError("coefficients must fit in int16")
    return arr.astype(np.int16)
