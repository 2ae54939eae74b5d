"""The two entropy coders of the intra-channel compression engine.

The arithmetic coder is semi-adaptive: symbol statistics are gathered in a
training pass, frozen into a FrequencyTable, and shipped with the stream.
Values above 255 are coded as an ESC symbol followed by 11 raw bits. The
Golomb-Rice coder adapts its parameter from the running proportion of zero
symbols (see kernels.RiceCoder).
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .errors import FormatError

AC_ALPHABET = 257  # symbols 0..255 plus ESC
AC_MAX_TOTAL = 1 << 13
AC_MAX_VALUE = (1 << kernels.AC_RAW_BITS) - 1


class FrequencyTable:
    """Frozen symbol statistics for the range coder.

    Invariants: 257 counts, each >= 1 (add-1 smoothing), total <= 2**13.
    Four such tables fit the 2 KiB model budget of the hardware this models.
    """

    __slots__ = ("counts", "cum")

    def __init__(self, counts):
        counts = np.asarray(counts, dtype=np.int64)
        if counts.shape != (AC_ALPHABET,):
            raise ValueError(f"table needs {AC_ALPHABET} counts, got {counts.shape}")
        if counts.min() < 1:
            raise ValueError("every count must be >= 1")
        if counts.sum() > AC_MAX_TOTAL:
            raise ValueError(f"count total exceeds {AC_MAX_TOTAL}")
        self.counts = counts.astype(np.uint16)
        cum = np.zeros(AC_ALPHABET + 1, dtype=np.uint32)
        np.cumsum(counts, out=cum[1:])
        self.cum = cum

    @property
    def total(self):
        return int(self.cum[-1])

    @classmethod
    def train(cls, symbols):
        """Histogram over the clamp-to-ESC alphabet, smoothed and rescaled.

        Add-1 smoothing keeps every count >= 1; when the smoothed total
        exceeds the cap, the histogram part is scaled proportionally into the
        remaining budget so the table sits as close to the cap (finest
        probability resolution) as the invariant allows.
        """
        symbols = np.asarray(symbols)
        if symbols.size == 0:
            raise ValueError("training sequence must be non-empty")
        if symbols.min() < 0:
            raise ValueError("training symbols must be non-negative")
        clipped = np.minimum(symbols, 256).astype(np.int64)
        hist = np.bincount(clipped, minlength=AC_ALPHABET)
        if hist.sum() + AC_ALPHABET > AC_MAX_TOTAL:
            budget = AC_MAX_TOTAL - AC_ALPHABET
            hist = (hist * budget) // hist.sum()
        return cls(hist + 1)

    @classmethod
    def uniform(cls):
        return cls(np.ones(AC_ALPHABET, dtype=np.int64))

    def serialize(self, writer):
        for c in self.counts.tolist():
            writer.write_bits(c & 0xFF, 8)
            writer.write_bits(c >> 8, 8)

    @classmethod
    def deserialize(cls, reader):
        counts = np.empty(AC_ALPHABET, dtype=np.int64)
        for i in range(AC_ALPHABET):
            lo = reader.read_bits(8)
            hi = reader.read_bits(8)
            counts[i] = lo | (hi << 8)
        try:
            return cls(counts)
        except ValueError as exc:
            raise FormatError(f"invalid frequency table: {exc}") from exc


def ac_train_table(symbols):
    return FrequencyTable.train(symbols)


def ac_encode(table, symbols, sink):
    """Range-code mapped residues against a trained table; returns bit count."""
    start = sink.bit_length
    enc = kernels.RangeEncoder(sink)
    enc.encode_block(np.asarray(symbols), table.counts, table.cum)
    enc.finish()
    return sink.bit_length - start


def ac_decode(table, source, count):
    dec = kernels.RangeDecoder(source)
    return dec.decode_block(count, table.counts, table.cum)


def gc_encode(state, m, sink):
    """Rice-code one mapped residue with the current parameter, then adapt."""
    state.encode_one(m, sink)


def gc_decode(state, source):
    return state.decode_one(source)


def gc_adapt(state, m):
    state.adapt(m)


def make_rice_state(k=kernels.RICE_DEFAULT_K, p0_q=kernels.RICE_DEFAULT_P0):
    return kernels.RiceCoder(k=k, p0_q=p0_q)
