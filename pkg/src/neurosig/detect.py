"""Two-stage spike detection with an adaptive threshold estimator.

Stage 1 is an amplitude test against a threshold derived from the noise
estimate; stage 2 confirms with the nonlinear energy operator
psi(n) = x(n)^2 - x(n-1) x(n+1), which must exceed its own threshold within
the verification window around the stage-1 trigger. The adaptive threshold
estimator combines a clipped first-order low-pass of rectified psi (noise
level) with a log-compressed zero-crossing count (firing-rate proxy):
thr_neo = ne_level * (c0 + c1 * zc_log) and thr_amp = amp_mult * isqrt(ne).

Streaming convention: feeding x(n) yields the detection flag for time n-1,
the newest sample for which psi is defined. A detection is stamped at the
sample where both stages have fired (at most verify_window after the
amplitude trigger) and starts the refractory countdown.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import FormatError

NEO_CLAMP = -(1 << 20)
ZC_WINDOW = 1 << 14
NE_FRAC_BITS = 4  # noise level kept in Q.4 so the IIR cannot stall early
NE_ALPHA_SHIFT = 4

RASTER_EMPTY = 0xA0
RASTER_FIRING = 0xA1
RASTER_CHANNELS = 68
RASTER_BITMAP_BYTES = 9


@dataclass
class DetectorConfig:
    c0: int = 8
    c1: int = 0
    amp_mult: int = 4
    refractory: int = 64
    verify_window: int = 4

    def __post_init__(self):
        if self.c0 <= 0:
            raise ValueError("c0 must be positive")
        if self.refractory < 64:
            raise ValueError("refractory must be >= 64 samples")
        if self.verify_window < 0:
            raise ValueError("verify_window must be non-negative")


@dataclass
class NeoState:
    """History for the causal psi(n-1) evaluation; first two outputs are 0."""

    x1: int = 0
    x2: int = 0
    n: int = 0


def neo(state, x_n):
    """psi(n-1) = x(n-1)^2 - x(n-2) x(n), clamped at -2^20."""
    psi = state.x1 * state.x1 - state.x2 * x_n if state.n >= 2 else 0
    state.x2 = state.x1
    state.x1 = x_n
    state.n += 1
    return psi if psi >= NEO_CLAMP else NEO_CLAMP


@dataclass
class AteState:
    """Adaptive threshold estimator state for one channel."""

    c0: int = 8
    c1: int = 0
    amp_mult: int = 4
    zc_count: int = 0
    zc_pos: int = 0
    zc_log: int = 0
    ne_q: int = 0  # noise level in Q.4
    psi_prev: int = 0
    thr_neo: int = 0
    thr_amp: int = 0

    def __post_init__(self):
        self._refresh_thresholds()

    @property
    def ne_level(self):
        return self.ne_q >> NE_FRAC_BITS

    def zero_crossing_update(self, psi):
        """Count sign flips of psi; every 2^14 samples latch floor(log2(count+1)).

        Returns the latched zc_log at a window rollover, else None.
        """
        emitted = None
        if psi != 0 and self.psi_prev != 0 and (psi > 0) != (self.psi_prev > 0):
            self.zc_count += 1
        self.psi_prev = psi
        self.zc_pos += 1
        if self.zc_pos == ZC_WINDOW:
            self.zc_log = (self.zc_count + 1).bit_length() - 1
            emitted = self.zc_log
            self.zc_count = 0
            self.zc_pos = 0
        return emitted

    def noise_update(self, psi):
        """Clipped first-order IIR on rectified psi; clipping rejects spikes."""
        clip_limit = 4 * self.ne_level + 64
        psi_c = psi if psi > 0 else 0
        if psi_c > clip_limit:
            psi_c = clip_limit
        self.ne_q += ((psi_c << NE_FRAC_BITS) - self.ne_q) >> NE_ALPHA_SHIFT
        return self.ne_level

    def _refresh_thresholds(self):
        ne = self.ne_level
        self.thr_neo = ne * (self.c0 + self.c1 * self.zc_log)
        self.thr_amp = self.amp_mult * math.isqrt(max(ne, 1))

    def update(self, psi):
        """One ATE tick: ZC, NE, then the threshold calculator."""
        self.zero_crossing_update(psi)
        self.noise_update(psi)
        self._refresh_thresholds()


def threshold_calc(ate, config=None):
    """Current (thr_neo, thr_amp) pair from the estimator state."""
    if config is not None:
        ate.c0 = config.c0
        ate.c1 = config.c1
        ate.amp_mult = config.amp_mult
        ate._refresh_thresholds()
    return ate.thr_neo, ate.thr_amp


class ChannelDetector:
    """Streaming two-stage detector for a single channel."""

    def __init__(self, config=None):
        self.config = config or DetectorConfig()
        self.neo_state = NeoState()
        self.ate = AteState(
            c0=self.config.c0, c1=self.config.c1, amp_mult=self.config.amp_mult
        )
        self._psi_ring = [0] * self.config.verify_window
        self._pending_left = 0
        self._refractory_left = 0

    def step(self, x_n):
        """Feed x(n); returns True when a detection is confirmed at n-1."""
        psi = neo(self.neo_state, x_n)
        self.ate.update(psi)
        hit = False
        if self._refractory_left > 0:
            self._refractory_left -= 1
        else:
            thr_neo = self.ate.thr_neo
            if self._pending_left > 0:
                if psi >= thr_neo:
                    hit = True
                else:
                    self._pending_left -= 1
            if not hit and self._pending_left == 0:
                x_prev = self.neo_state.x2  # x(n-1) after the shift
                if abs(x_prev) >= self.ate.thr_amp:
                    if psi >= thr_neo or any(p >= thr_neo for p in self._psi_ring):
                        hit = True
                    else:
                        self._pending_left = self.config.verify_window
            if hit:
                self._pending_left = 0
                self._refractory_left = self.config.refractory
        if self.config.verify_window:
            self._psi_ring.pop(0)
            self._psi_ring.append(psi)
        return hit


def detect_step(state, x_n, config=None):
    """Spec-surface single-step detection; state is a ChannelDetector."""
    return state.step(x_n)


def detect_channel(x, config=None):
    """Detection flags for one channel via the active kernel backend.

    Returns (flags uint8 array aligned to sample times, final ATE snapshot).
    """
    config = config or DetectorConfig()
    x = np.ascontiguousarray(x, dtype=np.int32)
    return kernels.detect_channel(
        x,
        config.c0,
        config.c1,
        config.amp_mult,
        config.refractory,
        config.verify_window,
    )


def raster_tick(flags, tick):
    """Build one raster packet from 68 detection flags.

    All-quiet ticks compress to a single header byte; firing ticks carry a
    9-byte LSB-first channel bitmap and the 20 kHz tick as u32 LE.
    """
    if len(flags) != RASTER_CHANNELS:
        raise ValueError(f"expected {RASTER_CHANNELS} flags, got {len(flags)}")
    bitmap = bytearray(RASTER_BITMAP_BYTES)
    firing = False
    for ch, flag in enumerate(flags):
        if flag:
            firing = True
            bitmap[ch >> 3] |= 1 << (ch & 7)
    if not firing:
        return bytes([RASTER_EMPTY])
    return bytes([RASTER_FIRING]) + bytes(bitmap) + struct.pack("<I", tick)


def parse_raster(data):
    """Inverse of a raster_tick stream: list of (tick, flag array) per packet.

    Empty packets yield (implicit_tick, zeros); the implicit tick is the
    packet ordinal, which matches the explicit tick of firing packets when
    the stream started at tick 0.
    """
    packets = []
    pos = 0
    ordinal = 0
    n = len(data)
    while pos < n:
        header = data[pos]
        pos += 1
        flags = np.zeros(RASTER_CHANNELS, dtype=np.uint8)
        if header == RASTER_EMPTY:
            packets.append((ordinal, flags))
        elif header == RASTER_FIRING:
            if pos + RASTER_BITMAP_BYTES + 4 > n:
                raise FormatError("truncated firing packet", offset=pos)
            bitmap = data[pos : pos + RASTER_BITMAP_BYTES]
            pos += RASTER_BITMAP_BYTES
            (tick,) = struct.unpack_from("<I", data, pos)
            pos += 4
            for ch in range(RASTER_CHANNELS):
                if bitmap[ch >> 3] & (1 << (ch & 7)):
                    flags[ch] = 1
            if not flags.any():
                raise FormatError("firing packet with empty bitmap", offset=pos)
            packets.append((tick, flags))
        else:
            raise FormatError(f"unknown packet header {header:#x}", offset=pos - 1)
        ordinal += 1
    return packets
