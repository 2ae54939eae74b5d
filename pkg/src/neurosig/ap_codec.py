"""Per-channel action-potential compression (lossless and near-lossless).

Lossless mode pipes the whole stream through DPCM2 -> zigzag -> entropy coder.
Near-lossless mode keeps only 64-sample spike windows exactly: the stream
becomes groups of (2 or 3) run-length chunk symbols followed by 64 window
symbols, plus a trailing run, so a decoder parses sets of 66 or 67 symbols per
spike. Gaps between windows decode to zeros. Run-length chunks are raw 9-bit
symbols split big-endian from the gap length; they bypass DPCM2/zigzag and go
through the ESC path of the arithmetic coder or a frozen k=8 Rice code. Runs
that would overflow the chunk capacity are split with an all-ones sentinel run
meaning "advance, no window follows".
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import kernels
from .core import SPIKE_PRE, SPIKE_WINDOW
from .decorrelate import (
    dpcm2_forward_block,
    dpcm2_inverse_block,
    unzigzag_block,
    zigzag_block,
)
from .entropy import FrequencyTable, make_rice_state
from .errors import CorruptStreamError

MODE_LOSSLESS = "lossless"
MODE_NEAR_LOSSLESS = "near_lossless"
CODER_AC = "ac"
CODER_GC = "gc"

CHUNK_BITS = 9
CHUNK_RICE_K = 8
# Training marker standing in for one RLE chunk: any value >= 256 counts as
# ESC, which is how chunks are actually coded.
CHUNK_TRAIN_MARKER = 2047


@dataclass
class ApCodecConfig:
    mode: str = MODE_LOSSLESS
    coder: str = CODER_GC
    chunk_mode: int = 2
    slot_id: int = 0

    def __post_init__(self):
        if self.mode not in (MODE_LOSSLESS, MODE_NEAR_LOSSLESS):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.coder not in (CODER_AC, CODER_GC):
            raise ValueError(f"unknown coder {self.coder!r}")
        if self.chunk_mode not in (2, 3):
            raise ValueError(f"chunk_mode must be 2 or 3, got {self.chunk_mode}")
        if not 0 <= self.slot_id < 4:
            raise ValueError(f"slot_id must be in [0, 4), got {self.slot_id}")


class NllEncodeResult(NamedTuple):
    bits: int
    window_starts: list
    padded_tail: bool


class NllDecodeResult(NamedTuple):
    samples: np.ndarray
    window_starts: list
    padded_tail: bool
    groups: int
    symbols: int


def run_capacity(chunk_mode):
    """Largest encodable run; this all-ones value is the continuation sentinel."""
    return (1 << (CHUNK_BITS * chunk_mode)) - 1


def merge_triggers(detections, total):
    """Accepted trigger times from per-sample flags or a time list.

    Triggers closer than the 64-sample refractory to an accepted one are
    merged (first wins), and triggers without 31 preceding samples are
    dropped since their window cannot be formed.
    """
    detections = np.asarray(detections)
    if detections.dtype == bool or (
        detections.size == total and set(np.unique(detections)) <= {0, 1}
    ):
        times = np.flatnonzero(detections)
    else:
        times = np.sort(detections.astype(np.int64))
    accepted = []
    last = None
    for t in times.tolist():
        if t < SPIKE_PRE or t >= total:
            continue
        if last is not None and t < last + SPIKE_WINDOW:
            continue
        accepted.append(int(t))
        last = t
    return accepted


def _encode_symbols(config, symbols, writer, table, rice):
    if config.coder == CODER_AC:
        enc = kernels.RangeEncoder(writer)
        enc.encode_block(symbols, table.counts, table.cum)
        enc.finish()
    else:
        rice.encode_block(symbols, writer)


def encode_lossless(config, samples, sink, table=None, rice_state=None):
    """DPCM2 + zigzag + entropy-code every sample; returns payload bit count."""
    start = sink.bit_length
    symbols = zigzag_block(dpcm2_forward_block(samples))
    if config.coder == CODER_AC:
        table = table if table is not None else FrequencyTable.train(symbols)
        enc = kernels.RangeEncoder(sink)
        enc.encode_block(symbols, table.counts, table.cum)
        enc.finish()
    else:
        rice = rice_state if rice_state is not None else make_rice_state()
        rice.encode_block(symbols, sink)
    return sink.bit_length - start


def decode_lossless(config, source, count, table=None, rice_state=None):
    if count == 0:
        return np.empty(0, dtype=np.int16)
    if config.coder == CODER_AC:
        if table is None:
            raise ValueError("AC decode requires the encoder's table")
        dec = kernels.RangeDecoder(source)
        m = dec.decode_block(count, table.counts, table.cum)
    else:
        rice = rice_state if rice_state is not None else make_rice_state()
        m = rice.decode_block(count, source)
    return dpcm2_inverse_block(unzigzag_block(m)).astype(np.int16)


def nll_plan(total, triggers, chunk_mode):
    """Emission plan: (run, window_start|None) entries covering the stream.

    Window starts are trigger - 31; sentinel-valued runs carry no window and
    signal a continuation run. The plan satisfies
    sum(runs) + 64 * windows >= total, with equality unless the final window
    is tail-padded.
    """
    cap = run_capacity(chunk_mode)
    plan = []
    pos = 0
    for t in triggers:
        start = t - SPIKE_PRE
        gap = start - pos
        while gap >= cap:
            plan.append((cap, None))
            gap -= cap
        plan.append((gap, start))
        pos = start + SPIKE_WINDOW
    gap = total - pos
    while gap >= cap:
        plan.append((cap, None))
        gap -= cap
    if gap > 0:
        plan.append((gap, None))
    return plan


def _run_chunks(run, chunk_mode):
    chunks = np.empty(chunk_mode, dtype=np.int32)
    for i in range(chunk_mode - 1, -1, -1):
        chunks[i] = run & ((1 << CHUNK_BITS) - 1)
        run >>= CHUNK_BITS
    return chunks


def nll_training_symbols(samples, triggers, chunk_mode):
    """Symbol stream for AC table training: window residues + chunk markers."""
    total = len(samples)
    plan = nll_plan(total, triggers, chunk_mode)
    parts = []
    for _, start in plan:
        parts.append(np.full(chunk_mode, CHUNK_TRAIN_MARKER, dtype=np.int32))
        if start is not None:
            window = _window_samples(samples, start, total)
            parts.append(zigzag_block(dpcm2_forward_block(window)))
    if not parts:
        return np.full(1, CHUNK_TRAIN_MARKER, dtype=np.int32)
    return np.concatenate(parts)


def _window_samples(samples, start, total):
    end = start + SPIKE_WINDOW
    if end <= total:
        return np.asarray(samples[start:end], dtype=np.int32)
    window = np.zeros(SPIKE_WINDOW, dtype=np.int32)
    window[: total - start] = samples[start:total]
    return window


def encode_near_lossless(config, samples, detections, sink, table=None, rice_state=None):
    """Exact spike windows plus run-length coded gaps.

    detections may be per-sample flags or trigger times; they are merged with
    a 64-sample refractory. A trigger too close to the stream end produces a
    zero-padded final window, reported via padded_tail for the container flag.
    """
    samples = np.asarray(samples)
    total = len(samples)
    triggers = merge_triggers(detections, total)
    plan = nll_plan(total, triggers, config.chunk_mode)
    use_ac = config.coder == CODER_AC
    if use_ac and table is None:
        table = FrequencyTable.train(
            nll_training_symbols(samples, triggers, config.chunk_mode)
        )
    rice = rice_state if rice_state is not None else make_rice_state()
    start_bits = sink.bit_length
    enc = kernels.RangeEncoder(sink) if use_ac else None
    window_starts = []
    padded_tail = False
    for run, wstart in plan:
        chunks = _run_chunks(run, config.chunk_mode)
        if use_ac:
            enc.encode_escaped_block(chunks, table.counts, table.cum)
        else:
            rice.encode_fixed_block(chunks, CHUNK_RICE_K, sink)
        if wstart is None:
            continue
        window_starts.append(wstart)
        if wstart + SPIKE_WINDOW > total:
            padded_tail = True
        symbols = zigzag_block(dpcm2_forward_block(_window_samples(samples, wstart, total)))
        if use_ac:
            enc.encode_block(symbols, table.counts, table.cum)
        else:
            rice.encode_block(symbols, sink)
    if use_ac:
        enc.finish()
    return NllEncodeResult(sink.bit_length - start_bits, window_starts, padded_tail)


def decode_near_lossless(config, source, total_samples, table=None, rice_state=None):
    """Reconstruct zero gaps and bit-exact windows at their exact positions."""
    use_ac = config.coder == CODER_AC
    if use_ac and table is None:
        raise ValueError("AC decode requires the encoder's table")
    rice = rice_state if rice_state is not None else make_rice_state()
    dec = kernels.RangeDecoder(source) if use_ac and total_samples else None
    out = np.zeros(total_samples, dtype=np.int16)
    cap = run_capacity(config.chunk_mode)
    pos = 0
    groups = 0
    symbols = 0
    window_starts = []
    padded_tail = False
    while pos < total_samples:
        if use_ac:
            chunks = dec.decode_escaped_block(config.chunk_mode, table.counts, table.cum)
        else:
            chunks = rice.decode_fixed_block(config.chunk_mode, CHUNK_RICE_K, source)
        symbols += config.chunk_mode
        run = 0
        for c in chunks.tolist():
            run = (run << CHUNK_BITS) | int(c)
        pos += run
        if pos > total_samples:
            raise CorruptStreamError("run length passes the end of the stream")
        if run == cap or pos == total_samples:
            continue
        if use_ac:
            m = dec.decode_block(SPIKE_WINDOW, table.counts, table.cum)
        else:
            m = rice.decode_block(SPIKE_WINDOW, source)
        symbols += SPIKE_WINDOW
        groups += 1
        window = dpcm2_inverse_block(unzigzag_block(m))
        window_starts.append(pos)
        end = pos + SPIKE_WINDOW
        if end > total_samples:
            padded_tail = True
            out[pos:total_samples] = window[: total_samples - pos]
        else:
            out[pos:end] = window
        pos = end
    return NllDecodeResult(out, window_starts, padded_tail, groups, symbols)
