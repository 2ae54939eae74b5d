"""Domain types, 9-bit quantization, the SSR metric, and .nrec file I/O."""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import FormatError

Q_MIN = -256
Q_MAX = 255
SAMPLE_BITS = 9
MAX_CHANNELS = 68
DEFAULT_RATE_HZ = 20_000

NREC_MAGIC = b"NREC"
NREC_VERSION = 1
_NREC_HEADER = struct.Struct("<4sBHIBQ")

SPIKE_WINDOW = 64
SPIKE_PRE = 31  # samples kept before the trigger; trigger + 32 follow


@dataclass
class Recording:
    """Multichannel 9-bit sample streams with rate metadata.

    samples is an int16 array of shape (channels, length); every value must
    lie in the signed 9-bit range. All channels share one length.
    """

    samples: np.ndarray
    rate_hz: int = DEFAULT_RATE_HZ

    def __post_init__(self):
        self.samples = np.ascontiguousarray(self.samples, dtype=np.int16)
        if self.samples.ndim != 2:
            raise ValueError("samples must be a (channels, length) array")
        channels = self.samples.shape[0]
        if not 1 <= channels <= MAX_CHANNELS:
            raise ValueError(f"channel count must be in [1, {MAX_CHANNELS}], got {channels}")
        if self.rate_hz <= 0:
            raise ValueError(f"rate_hz must be positive, got {self.rate_hz}")
        if self.samples.size and (
            self.samples.min() < Q_MIN or self.samples.max() > Q_MAX
        ):
            raise ValueError(f"samples must lie in [{Q_MIN}, {Q_MAX}]")

    @property
    def channels(self):
        return self.samples.shape[0]

    @property
    def length(self):
        return self.samples.shape[1]

    @property
    def duration_s(self):
        return self.length / self.rate_hz

    def channel(self, index):
        return self.samples[index]


@dataclass
class SpikeEvent:
    """One detected spike: channel, trigger sample index, 64-sample waveform."""

    channel: int
    t: int
    waveform: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.waveform = np.ascontiguousarray(self.waveform, dtype=np.int16)
        if self.waveform.shape != (SPIKE_WINDOW,):
            raise ValueError(f"waveform must have exactly {SPIKE_WINDOW} samples")
        if self.t < SPIKE_PRE:
            raise ValueError(f"trigger must be >= {SPIKE_PRE}, got {self.t}")


def quantize(raw, scale):
    """Map a real-valued sample to the signed 9-bit grid.

    round(raw / scale) clamped to [Q_MIN, Q_MAX]; rounding is IEEE
    round-half-even via np.rint. Clamping is defined behavior, not an error.
    """
    if scale <= 0:
        raise ValueError(f"scale must be positive, got {scale}")
    return int(np.clip(np.rint(raw / scale), Q_MIN, Q_MAX))


def quantize_array(raw, scale):
    """Vectorized quantize; returns int16 plus the count of clamped samples."""
    if scale <= 0:
        raise ValueError(f"scale must be positive, got {scale}")
    rounded = np.rint(np.asarray(raw, dtype=np.float64) / scale)
    clamped = int(np.count_nonzero((rounded < Q_MIN) | (rounded > Q_MAX)))
    return np.clip(rounded, Q_MIN, Q_MAX).astype(np.int16), clamped


def ssr(original_bits, compressed_bits):
    """Space-saving ratio 1 - compressed/original; negative means expansion."""
    if original_bits <= 0:
        raise ValueError(f"original_bits must be positive, got {original_bits}")
    return 1.0 - compressed_bits / original_bits


def original_bits(recording):
    """SSR baseline: 9 bits per stored sample."""
    return SAMPLE_BITS * recording.samples.size


def write_nrec(path, recording):
    """Write the canonical .nrec container (sample-interleaved little-endian i16)."""
    header = _NREC_HEADER.pack(
        NREC_MAGIC,
        NREC_VERSION,
        recording.channels,
        recording.rate_hz,
        SAMPLE_BITS,
        recording.length,
    )
    interleaved = np.ascontiguousarray(recording.samples.T, dtype="<i2")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(interleaved.tobytes())


def read_nrec(path):
    """Read and validate a .nrec file."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < _NREC_HEADER.size:
        raise FormatError("file shorter than the .nrec header", offset=len(data))
    magic, version, channels, rate_hz, bits, length = _NREC_HEADER.unpack_from(data)
    if magic != NREC_MAGIC:
        raise FormatError(f"bad magic {magic!r}", offset=0)
    if version != NREC_VERSION:
        raise FormatError(f"unsupported version {version}", offset=4)
    if bits != SAMPLE_BITS:
        raise FormatError(f"unsupported bits-per-sample {bits}", offset=11)
    expected = _NREC_HEADER.size + 2 * channels * length
    if len(data) != expected:
        raise FormatError(
            f"payload size mismatch: expected {expected} bytes, have {len(data)}",
            offset=min(len(data), expected),
        )
    flat = np.frombuffer(data, dtype="<i2", offset=_NREC_HEADER.size)
    samples = flat.reshape(length, channels).T if length else np.zeros(
        (channels, 0), dtype=np.int16
    )
    try:
        return Recording(samples=samples.copy(), rate_hz=rate_hz)
    except ValueError as exc:
        raise FormatError(str(exc)) from exc
