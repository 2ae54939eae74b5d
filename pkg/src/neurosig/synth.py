"""Synthetic benchmark datasets.

The public benchmark recordings used for the reference figures are simulated
extracellular signals: template spike waveforms inserted at random times on
top of background noise that is itself built from spike-shaped activity.
This module reproduces that construction offline so the benchmark harness
has deterministic inputs with known ground truth. Real recordings converted
with the dataset tools drop into the same harness.

AP sets: four single-channel recordings (easy1, easy2, difficult1,
difficult2) with three spike classes each. The easy/difficult distinction is
the similarity of the class templates; noise level rises across the suite.
Spike times are drawn with a global minimum separation so every ground-truth
spike is resolvable (mirroring overlap-excluded evaluation on the published
sets).

LFP set: eight channels driven by shared band-limited sources with
per-channel gains plus a small independent noise floor, giving the strong
spatial correlation (pairwise rho >= 0.9) the cross-channel codec exploits.

Samples are quantized against a full-scale of 2x the nominal spike peak,
modeling an acquisition range with headroom rather than per-file peak
scaling.
"""

from __future__ import annotations

import json
import zlib
from pathlib import Path

import numpy as np

from .core import Recording, quantize_array, write_nrec

RATE_HZ = 20_000
TEMPLATE_LEN = 48
SPIKE_PEAK_LSB = 127.0  # nominal unit-peak spike after quantization
MIN_SEPARATION = 100  # samples between any two ground-truth spikes

AP_DATASETS = ("easy1", "easy2", "difficult1", "difficult2")

# (width1, width2, amp2, offset2, width3, amp3, offset3) per class: a
# depolarization peak, a repolarization dip, and a slow recovery hump.
_TEMPLATE_PARAMS = {
    "easy1": [
        (2.4, 4.8, 0.65, 7.0, 10.0, 0.18, 16.0),
        (3.4, 6.6, 0.55, 9.0, 12.0, 0.12, 20.0),
        (3.0, 3.4, 0.85, 5.0, 8.0, 0.30, 12.0),
    ],
    "easy2": [
        (2.6, 5.2, 0.62, 7.5, 10.0, 0.16, 17.0),
        (4.0, 7.4, 0.42, 10.5, 12.0, 0.12, 23.0),
        (3.0, 4.0, 0.88, 5.5, 9.0, 0.30, 13.0),
    ],
    "difficult1": [
        (2.6, 5.2, 0.32, 7.0, 10.0, 0.05, 16.0),
        (3.1, 6.0, 0.72, 8.8, 11.0, 0.22, 18.0),
        (3.8, 7.0, 0.52, 10.5, 12.0, 0.36, 21.0),
    ],
    "difficult2": [
        (2.6, 5.3, 0.31, 7.0, 10.0, 0.05, 16.0),
        (3.2, 6.1, 0.72, 9.0, 11.0, 0.22, 18.5),
        (3.8, 7.0, 0.52, 10.5, 12.0, 0.36, 21.0),
    ],
}

_NOISE_LEVEL = {"easy1": 0.09, "easy2": 0.12, "difficult1": 0.14, "difficult2": 0.15}


def spike_template(width1, width2, amp2, offset2, width3, amp3, offset3):
    """Peak-normalized biphasic template with a slow recovery hump."""
    t = np.arange(TEMPLATE_LEN, dtype=np.float64)
    c1 = 12.0
    shape = (
        np.exp(-(((t - c1) / width1) ** 2))
        - amp2 * np.exp(-(((t - c1 - offset2) / width2) ** 2))
        + amp3 * np.exp(-(((t - c1 - offset3) / width3) ** 2))
    )
    return shape / np.max(np.abs(shape))


def _spike_band_noise(n, templates, sigma, rng):
    """Noise sharing the spectral footprint of the spike templates."""
    noise = np.zeros(n + TEMPLATE_LEN)
    for tpl in templates:
        noise += np.convolve(rng.standard_normal(n + TEMPLATE_LEN), tpl, mode="same")
    noise = noise[:n]
    noise *= sigma / noise.std()
    noise += rng.standard_normal(n) * (0.05 * sigma)
    return noise


def _draw_spike_times(n, count, rng, margin=TEMPLATE_LEN):
    """count times in [margin, n - margin) with a global minimum separation."""
    times = []
    attempts = 0
    taken = np.zeros(0, dtype=np.int64)
    while len(times) < count and attempts < count * 50:
        t = int(rng.integers(margin, n - margin))
        if taken.size == 0 or np.min(np.abs(taken - t)) >= MIN_SEPARATION:
            times.append(t)
            taken = np.asarray(sorted(times), dtype=np.int64)
        attempts += 1
    return np.asarray(sorted(times), dtype=np.int64)


def make_ap_dataset(name, duration_s=60.0, rate_per_class_hz=18.0, seed=0):
    """One synthetic AP recording.

    Returns (Recording, gt_times, gt_classes); ground-truth times point at
    the template insertion peak.
    """
    if name not in AP_DATASETS:
        raise ValueError(f"unknown dataset {name!r}; expected one of {AP_DATASETS}")
    name_key = zlib.crc32(name.encode())  # stable across processes
    rng = np.random.default_rng(np.random.SeedSequence([name_key, seed]))
    n = int(duration_s * RATE_HZ)
    templates = [spike_template(*p) for p in _TEMPLATE_PARAMS[name]]
    noise_sigma = _NOISE_LEVEL[name]
    signal = _spike_band_noise(n, templates, noise_sigma, rng)

    count = int(duration_s * rate_per_class_hz * len(templates))
    times = _draw_spike_times(n, count, rng)
    classes = rng.integers(0, len(templates), size=len(times))
    peak_offset = int(np.argmax(np.abs(templates[0])))
    gt_times = []
    for t, cls in zip(times.tolist(), classes.tolist()):
        tpl = templates[cls] * rng.uniform(0.97, 1.03)
        start = t - peak_offset
        signal[start : start + TEMPLATE_LEN] += tpl
        gt_times.append(t)

    scale = 4.0 / 255.0  # acquisition full scale 4x the unit spike peak
    samples, _ = quantize_array(signal, scale)
    rec = Recording(samples=samples[np.newaxis, :], rate_hz=RATE_HZ)
    order = np.argsort(gt_times, kind="stable")
    return rec, np.asarray(gt_times, dtype=np.int64)[order], classes[order]


def make_lfp_dataset(
    duration_s=20.0,
    channels=8,
    seed=0,
    slow_sigma_lsb=90.0,
    fast_sigma_lsb=28.0,
    white_sigma_lsb=0.9,
):
    """Shared-source multichannel LFP-band recording.

    Each channel is a gain-scaled mix of one slow and one faster shared
    source plus independent white noise, so channels are strongly correlated
    and one-tap cross-channel prediction has real shared energy to remove.
    """
    rng = np.random.default_rng(seed)
    n = int(duration_s * RATE_HZ)

    def smooth(sigma_samples):
        kernel_t = np.arange(-4 * sigma_samples, 4 * sigma_samples + 1)
        kernel = np.exp(-0.5 * (kernel_t / sigma_samples) ** 2)
        src = np.convolve(rng.standard_normal(n + len(kernel)), kernel, mode="same")
        return src[:n] / src[:n].std()

    slow = smooth(14.0)
    fast = smooth(2.5)
    rows = np.empty((channels, n))
    for ch in range(channels):
        gain = rng.uniform(0.85, 1.15)
        tilt = rng.uniform(0.9, 1.1)
        rows[ch] = (
            gain * slow_sigma_lsb * slow
            + gain * tilt * fast_sigma_lsb * fast
            + white_sigma_lsb * rng.standard_normal(n)
        )
    peak = np.max(np.abs(rows))
    samples, _ = quantize_array(rows, max(peak / 250.0, 1.0))
    return Recording(samples=samples, rate_hz=RATE_HZ)


def write_ground_truth(path, times, classes):
    """Sidecar format: one 'time class' line per spike, times ascending."""
    with open(path, "w") as fh:
        for t, c in zip(np.asarray(times).tolist(), np.asarray(classes).tolist()):
            fh.write(f"{int(t)} {int(c)}\n")


def read_ground_truth(path):
    times = []
    classes = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            t, c = line.split()
            times.append(int(t))
            classes.append(int(c))
    times = np.asarray(times, dtype=np.int64)
    classes = np.asarray(classes, dtype=np.int64)
    if np.any(np.diff(times) <= 0):
        raise ValueError("ground-truth times must be strictly increasing")
    if classes.size and classes.min() < 0:
        raise ValueError("ground-truth labels must be non-negative")
    return times, classes


def build_benchmark_suite(outdir, seed=0, duration_s=60.0, lfp_duration_s=20.0):
    """Generate the full benchmark suite into outdir; returns a manifest dict."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    manifest = {"ap": [], "lfp": None, "seed": seed}
    for name in AP_DATASETS:
        rec, times, classes = make_ap_dataset(name, duration_s=duration_s, seed=seed)
        nrec = outdir / f"{name}.nrec"
        gt = outdir / f"{name}.gt"
        write_nrec(nrec, rec)
        write_ground_truth(gt, times, classes)
        manifest["ap"].append(
            {"name": name, "nrec": str(nrec), "gt": str(gt), "spikes": len(times)}
        )
    lfp = make_lfp_dataset(duration_s=lfp_duration_s, seed=seed)
    lfp_path = outdir / "lfp8.nrec"
    write_nrec(lfp_path, lfp)
    manifest["lfp"] = {"name": "lfp8", "nrec": str(lfp_path)}
    with open(outdir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2)
    return manifest
