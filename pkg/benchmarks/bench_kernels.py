#!/usr/bin/env python3
"""Throughput comparison: compiled kernels vs the pure-Python fallback.

Runs the hot paths (Rice coding, range coding, detection, FIR) over the same
inputs with both backends and prints symbols-or-samples per second plus the
speedup. The pure backend gets a scaled-down workload so the run stays short;
rates are still directly comparable.

    python3 benchmarks/bench_kernels.py [--size 2000000]
"""

import argparse
import time

import numpy as np

from neurosig.entropy import FrequencyTable
from neurosig.kernels import pykernels

try:
    from neurosig.kernels import _ckernels
except ImportError:
    _ckernels = None


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def bench_rice(impl, values):
    w = impl.BitWriter()
    coder = impl.RiceCoder()
    _, t_enc = _timed(lambda: coder.encode_block(values, w))
    reader = impl.BitReader(w.getvalue(), nbits=w.bit_length)
    dec = impl.RiceCoder()
    _, t_dec = _timed(lambda: dec.decode_block(len(values), reader))
    return len(values) / t_enc, len(values) / t_dec


def bench_range(impl, values, table):
    w = impl.BitWriter()
    enc = impl.RangeEncoder(w)
    _, t_enc = _timed(lambda: (enc.encode_block(values, table.counts, table.cum), enc.finish()))
    reader = impl.BitReader(w.getvalue(), nbits=w.bit_length)
    dec = impl.RangeDecoder(reader)
    _, t_dec = _timed(lambda: dec.decode_block(len(values), table.counts, table.cum))
    return len(values) / t_enc, len(values) / t_dec


def bench_detect(impl, x):
    _, t = _timed(lambda: impl.detect_channel(x, 8, 0, 4, 64, 4))
    return len(x) / t


def bench_fir(impl, x, coeffs, delay):
    _, t = _timed(lambda: impl.fir_channel(x, coeffs, delay, 12))
    return len(x) / t


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--size", type=int, default=2_000_000)
    parser.add_argument("--python-fraction", type=float, default=0.02,
                        help="fraction of --size given to the pure backend")
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    values = (rng.geometric(0.25, size=args.size) - 1).astype(np.int64)
    table = FrequencyTable.train(values[:200_000])
    x = rng.integers(-200, 200, size=args.size).astype(np.int32)
    coeffs = rng.integers(-32768, 32768, size=16).astype(np.int16)
    delay = np.zeros(16, dtype=np.int32)

    backends = [("python", pykernels, max(int(args.size * args.python_fraction), 1000))]
    if _ckernels is not None:
        backends.append(("c", _ckernels, args.size))
    else:
        print("compiled kernels unavailable; benchmarking the pure backend only")

    rows = {}
    for name, impl, n in backends:
        rice_enc, rice_dec = bench_rice(impl, values[:n])
        rc_enc, rc_dec = bench_range(impl, values[:n], table)
        det = bench_detect(impl, x[:n])
        fir = bench_fir(impl, x[:n], coeffs, delay)
        rows[name] = {
            "rice encode": rice_enc,
            "rice decode": rice_dec,
            "range encode": rc_enc,
            "range decode": rc_dec,
            "detect": det,
            "fir": fir,
        }

    kernels = list(next(iter(rows.values())))
    header = f"{'kernel':<14}" + "".join(f"{name + ' (M/s)':>16}" for name in rows)
    if len(rows) == 2:
        header += f"{'speedup':>10}"
    print(header)
    for k in kernels:
        line = f"{k:<14}" + "".join(f"{rows[name][k] / 1e6:>16.2f}" for name in rows)
        if len(rows) == 2:
            line += f"{rows['c'][k] / rows['python'][k]:>9.0f}x"
        print(line)


if __name__ == "__main__":
    main()
