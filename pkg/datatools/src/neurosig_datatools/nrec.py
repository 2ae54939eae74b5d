"""Writer for the canonical .nrec container and the ground-truth sidecar.

Implements the published wire format directly:

  magic "NREC", version u8=1, channels u16 LE, rate_hz u32 LE,
  bits_per_sample u8=9, total_samples_per_channel u64 LE, then
  sample-interleaved little-endian i16 (sign-extended 9-bit values).

Sidecar: text, one "sample_index class_label" line per spike, strictly
increasing times, labels >= 0.
"""

from __future__ import annotations

import struct
import warnings

import numpy as np

Q_MIN = -256
Q_MAX = 255
_HEADER = struct.Struct("<4sBHIBQ")


def quantize(raw, scale):
    """round(raw / scale) clamped to the signed 9-bit range.

    Returns (int16 array, number of clamped samples). Matches the recording
    chain's documented quantizer (round-half-even).
    """
    if scale <= 0:
        raise ValueError(f"scale must be positive, got {scale}")
    rounded = np.rint(np.asarray(raw, dtype=np.float64) / scale)
    clamped = int(np.count_nonzero((rounded < Q_MIN) | (rounded > Q_MAX)))
    return np.clip(rounded, Q_MIN, Q_MAX).astype(np.int16), clamped


def auto_scale(signal):
    """Default quantization scale: max|signal| / 255 keeps the rails unclamped."""
    peak = float(np.max(np.abs(signal)))
    if peak == 0.0:
        return 1.0
    return peak / 255.0


def write_nrec(path, samples, rate_hz):
    """samples: int16 array of shape (channels, length), values in 9-bit range."""
    samples = np.ascontiguousarray(samples, dtype=np.int16)
    if samples.ndim != 2:
        raise ValueError("samples must be (channels, length)")
    channels, length = samples.shape
    if not 1 <= channels <= 68:
        raise ValueError(f"channel count {channels} outside [1, 68]")
    if samples.size and (samples.min() < Q_MIN or samples.max() > Q_MAX):
        raise ValueError("samples outside the signed 9-bit range")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(b"NREC", 1, channels, int(rate_hz), 9, length))
        fh.write(np.ascontiguousarray(samples.T, dtype="<i2").tobytes())


def read_nrec(path):
    """Read back an .nrec file (for converter self-checks)."""
    with open(path, "rb") as fh:
        data = fh.read()
    magic, version, channels, rate_hz, bits, length = _HEADER.unpack_from(data)
    if magic != b"NREC" or version != 1 or bits != 9:
        raise ValueError("not a version-1 .nrec file")
    flat = np.frombuffer(data, dtype="<i2", offset=_HEADER.size)
    return flat.reshape(length, channels).T.copy(), rate_hz


def write_sidecar(path, times, labels):
    """Ground-truth sidecar; duplicate timestamps are dropped with a warning."""
    times = np.asarray(times, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    if len(times) != len(labels):
        raise ValueError("times and labels must have equal length")
    if labels.size and labels.min() < 0:
        raise ValueError("class labels must be non-negative")
    order = np.argsort(times, kind="stable")
    times = times[order]
    labels = labels[order]
    keep = np.ones(len(times), dtype=bool)
    keep[1:] = np.diff(times) > 0
    dropped = int((~keep).sum())
    if dropped:
        warnings.warn(f"dropped {dropped} duplicate spike timestamps")
    with open(path, "w") as fh:
        for t, c in zip(times[keep].tolist(), labels[keep].tolist()):
            fh.write(f"{t} {c}\n")
    return int(keep.sum())
