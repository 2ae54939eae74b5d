"""Converter for simulated single-channel spike datasets (wave_clus layout).

The published files carry a 'data' vector, cell arrays 'spike_times' and
'spike_class', and usually a sampling rate ('sr') or sampling interval.
Output: one-channel .nrec plus a ground-truth sidecar.
"""

from __future__ import annotations

import numpy as np

from .matio import flatten_numeric, load_mat
from .nrec import auto_scale, quantize, write_nrec, write_sidecar

DATA_KEYS = ("data", "signal", "x")
TIME_KEYS = ("spike_times", "spiketimes", "spt")
CLASS_KEYS = ("spike_class", "spikeclass", "spc")
RATE_KEYS = ("sr", "fs", "sampling_rate")


def _pick(variables, keys, what):
    for key in keys:
        if key in variables:
            return variables[key]
        # v7.3 files occasionally carry differently-cased names
        for name in variables:
            if name.lower() == key:
                return variables[name]
    raise KeyError(
        f"could not find the {what} array; expected one of {keys}, "
        f"file has {sorted(variables)}"
    )


def convert_quiroga(
    mat_path,
    out_nrec,
    out_gt,
    scale=None,
    rate_hz=None,
    times_unit="samples",
):
    """Quantize the signal to 9 bits and emit .nrec + sidecar.

    times_unit: 'samples' (the published simulated sets), 'ms', or 's'.
    Returns a summary dict (scale, clamped samples, spike count, rate).
    """
    variables = load_mat(mat_path)
    signal = flatten_numeric(_pick(variables, DATA_KEYS, "signal"))
    times = flatten_numeric(_pick(variables, TIME_KEYS, "spike times"))
    classes = flatten_numeric(_pick(variables, CLASS_KEYS, "spike classes"))
    if len(times) != len(classes):
        raise ValueError(
            f"spike_times ({len(times)}) and spike_class ({len(classes)}) lengths differ"
        )
    if rate_hz is None:
        for key in RATE_KEYS:
            if key in variables:
                rate_hz = int(flatten_numeric(variables[key])[0])
                break
    if rate_hz is None:
        rate_hz = 24_000  # the published simulated sets' rate
    if times_unit == "ms":
        times = times * rate_hz / 1000.0
    elif times_unit == "s":
        times = times * rate_hz
    elif times_unit != "samples":
        raise ValueError(f"unknown times_unit {times_unit!r}")
    time_idx = np.rint(times).astype(np.int64)
    if time_idx.size and (time_idx.min() < 0 or time_idx.max() >= len(signal)):
        raise ValueError("spike times fall outside the signal")

    scale = scale if scale is not None else auto_scale(signal)
    samples, clamped = quantize(signal, scale)
    write_nrec(out_nrec, samples[np.newaxis, :], rate_hz)
    written = write_sidecar(out_gt, time_idx, classes.astype(np.int64))
    return {
        "samples": int(len(signal)),
        "rate_hz": int(rate_hz),
        "scale": float(scale),
        "clamped": clamped,
        "spikes": written,
    }
