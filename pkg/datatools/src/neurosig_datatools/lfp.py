"""Converter for multichannel LFP recordings.

Handles MAT files holding a 2-D numeric array (channels x samples in either
orientation) and flat binary .dat/.bin/.lfp files of interleaved int16, the
layout the public multichannel recordings ship in.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .matio import load_mat
from .nrec import auto_scale, quantize, write_nrec


def _matrix_from_mat(variables, var=None):
    if var is not None:
        if var not in variables:
            raise KeyError(f"variable {var!r} not in file; file has {sorted(variables)}")
        return np.asarray(variables[var], dtype=np.float64)
    best = None
    for name, value in variables.items():
        value = np.asarray(value)
        if value.dtype == object or value.ndim != 2 or value.size < 4:
            continue
        if best is None or value.size > best[1].size:
            best = (name, value)
    if best is None:
        raise KeyError(f"no 2-D numeric array found; file has {sorted(variables)}")
    return np.asarray(best[1], dtype=np.float64)


def convert_lfp(
    path,
    out_nrec,
    channels=None,
    scale=None,
    rate_hz=20_000,
    n_channels=None,
    var=None,
):
    """Select, align, quantize, and write channels from a multichannel source.

    For flat binary input n_channels is required (interleaved int16 LE).
    Channels are rows after orientation normalization (more samples than
    channels assumed). Returns a summary dict.
    """
    path = Path(path)
    if path.suffix.lower() in (".dat", ".bin", ".lfp"):
        if not n_channels:
            raise ValueError("binary input needs n_channels")
        flat = np.frombuffer(path.read_bytes(), dtype="<i2")
        usable = (len(flat) // n_channels) * n_channels
        matrix = flat[:usable].reshape(-1, n_channels).T.astype(np.float64)
    else:
        matrix = _matrix_from_mat(load_mat(path), var=var)
        if matrix.shape[0] > matrix.shape[1]:
            matrix = matrix.T  # samples-major on disk
    if channels is not None:
        for ch in channels:
            if not 0 <= ch < matrix.shape[0]:
                raise ValueError(f"channel {ch} not present (have {matrix.shape[0]})")
        matrix = matrix[list(channels)]
    scale = scale if scale is not None else auto_scale(matrix)
    samples, clamped = quantize(matrix, scale)
    write_nrec(out_nrec, samples, rate_hz)
    return {
        "channels": int(samples.shape[0]),
        "samples": int(samples.shape[1]),
        "rate_hz": int(rate_hz),
        "scale": float(scale),
        "clamped": clamped,
    }
