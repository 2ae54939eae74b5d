"""Pure-Python kernel implementations.

These are the reference twins of the compiled ``_ckernels`` extension: same
classes, same bit-exact output. The compiled core is selected by
``neurosig.kernels`` when importable; set ``NEUROSIG_PURE_PYTHON=1`` to force
this module instead. Semantics here are authoritative; the extension is
equivalence-tested against it.
"""

from __future__ import annotations

from bisect import bisect_right

import numpy as np

from ..errors import CorruptStreamError, TruncatedStreamError

BACKEND = "python"

MASK32 = 0xFFFFFFFF

# Range coder renormalization bounds (Subbotin carryless scheme). The byte at
# bits 24..31 is emitted once settled; forcing below RC_BOT sacrifices a sliver
# of range instead of propagating carries. RC_BOT must stay >= the frequency
# total cap (2**13) so the per-symbol division never underflows, and well
# below RC_TOP so the force branch stays rare.
RC_TOP = 1 << 24
RC_BOT = 1 << 16

AC_ESC = 256
AC_RAW_BITS = 11

RICE_ADAPT_WINDOW = 64
RICE_ESCAPE_Q = 512
RICE_ESCAPE_BITS = 16
RICE_DEFAULT_K = 4
RICE_DEFAULT_P0 = 128  # Q0.8 for 0.5

# k = round(log2(max(1, -1/log2(1 - p0)))) evaluated at the bucket midpoint;
# bucket 0 uses p0 = 1/64 because its population skews toward very small p0.
RICE_K_LOOKUP = (5, 3, 2, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0)


class BitWriter:
    """MSB-first bit sink backed by a bytearray."""

    def __init__(self):
        self._buf = bytearray()
        self._acc = 0
        self._nacc = 0

    @property
    def bit_length(self):
        return len(self._buf) * 8 + self._nacc

    def write_bits(self, value, nbits):
        if nbits < 0 or nbits > 32:
            raise ValueError(f"nbits must be in [0, 32], got {nbits}")
        if value < 0 or value >> nbits:
            raise ValueError(f"value {value} does not fit in {nbits} bits")
        acc = (self._acc << nbits) | value
        nacc = self._nacc + nbits
        buf = self._buf
        while nacc >= 8:
            nacc -= 8
            buf.append((acc >> nacc) & 0xFF)
        self._acc = acc & ((1 << nacc) - 1)
        self._nacc = nacc

    def write_unary(self, q):
        """q one-bits followed by a terminating zero."""
        while q >= 32:
            self.write_bits(MASK32, 32)
            q -= 32
        self.write_bits(((1 << q) - 1) << 1, q + 1)

    def write_ones(self, q):
        """q one-bits with no terminator (escape prefixes)."""
        while q >= 32:
            self.write_bits(MASK32, 32)
            q -= 32
        if q:
            self.write_bits((1 << q) - 1, q)

    def getvalue(self):
        """Contents as bytes, final partial byte zero-padded."""
        out = bytes(self._buf)
        if self._nacc:
            out += bytes([(self._acc << (8 - self._nacc)) & 0xFF])
        return out


class BitReader:
    """MSB-first bit source over a bytes object."""

    def __init__(self, data, nbits=None, start_bit=0):
        self._data = data
        self._pos = start_bit
        limit = len(data) * 8
        if nbits is not None:
            limit = min(limit, start_bit + nbits)
        self._limit = limit

    @property
    def bits_remaining(self):
        return self._limit - self._pos

    def read_bits(self, nbits):
        if nbits < 0 or nbits > 32:
            raise ValueError(f"nbits must be in [0, 32], got {nbits}")
        pos = self._pos
        if pos + nbits > self._limit:
            raise TruncatedStreamError(
                f"read of {nbits} bits at bit {pos} passes end ({self._limit})"
            )
        data = self._data
        value = 0
        remaining = nbits
        while remaining:
            byte_index, bit_index = divmod(pos, 8)
            take = min(8 - bit_index, remaining)
            chunk = data[byte_index] >> (8 - bit_index - take)
            value = (value << take) | (chunk & ((1 << take) - 1))
            pos += take
            remaining -= take
        self._pos = pos
        return value

    def read_unary(self, cap):
        """Count one-bits until a zero is consumed; stop at cap ones.

        Returns the count. When cap ones were read, no terminating zero is
        consumed (escape-prefix convention).
        """
        count = 0
        while count < cap:
            if self.read_bits(1) == 0:
                return count
            count += 1
        return count


class RiceCoder:
    """Golomb-Rice coder whose parameter tracks the zero-symbol proportion.

    Every RICE_ADAPT_WINDOW symbols the zero fraction of the window is blended
    into a Q0.8 estimate and k is refreshed from RICE_K_LOOKUP. Quotients
    reaching RICE_ESCAPE_Q escape to a raw 16-bit value after a run of
    RICE_ESCAPE_Q ones (no terminator), guarding pathological inputs.
    """

    def __init__(self, k=RICE_DEFAULT_K, p0_q=RICE_DEFAULT_P0):
        if not 0 <= k <= 15:
            raise ValueError(f"k must be in [0, 15], got {k}")
        self.k = k
        self.p0_q = p0_q
        self.zero_count = 0
        self.symbol_count = 0

    @property
    def state(self):
        return (self.k, self.p0_q, self.zero_count, self.symbol_count)

    def adapt(self, m):
        self.zero_count += m == 0
        self.symbol_count += 1
        if self.symbol_count == RICE_ADAPT_WINDOW:
            # zero fraction in Q0.8: (zero_count << 8) / 64
            self.p0_q = (self.p0_q + (self.zero_count << 2)) >> 1
            self.k = RICE_K_LOOKUP[min(self.p0_q >> 4, 15)]
            self.zero_count = 0
            self.symbol_count = 0

    def encode_one(self, m, writer):
        if m < 0:
            raise ValueError(f"Rice input must be non-negative, got {m}")
        k = self.k
        q = m >> k
        if q >= RICE_ESCAPE_Q:
            if m >> RICE_ESCAPE_BITS:
                raise ValueError(f"value {m} exceeds the escape range")
            writer.write_ones(RICE_ESCAPE_Q)
            writer.write_bits(m, RICE_ESCAPE_BITS)
        else:
            writer.write_unary(q)
            if k:
                writer.write_bits(m & ((1 << k) - 1), k)
        self.adapt(m)

    def decode_one(self, reader):
        q = reader.read_unary(RICE_ESCAPE_Q)
        if q == RICE_ESCAPE_Q:
            m = reader.read_bits(RICE_ESCAPE_BITS)
        else:
            k = self.k
            m = (q << k) | (reader.read_bits(k) if k else 0)
        self.adapt(m)
        return m

    def encode_block(self, values, writer):
        encode = self.encode_one
        for m in np.asarray(values).tolist():
            encode(int(m), writer)

    def decode_block(self, count, reader):
        decode = self.decode_one
        out = np.empty(count, dtype=np.int64)
        for i in range(count):
            out[i] = decode(reader)
        return out

    def encode_fixed_block(self, values, k, writer):
        """Frozen-parameter coding; bypasses adaptation entirely."""
        mask = (1 << k) - 1
        for m in np.asarray(values).tolist():
            m = int(m)
            writer.write_unary(m >> k)
            if k:
                writer.write_bits(m & mask, k)

    @staticmethod
    def encode_interleaved(values, states, writer):
        """Round-robin a flat sample-major stream over per-channel coders."""
        n_states = len(states)
        i = 0
        for m in np.asarray(values).tolist():
            states[i].encode_one(int(m), writer)
            i += 1
            if i == n_states:
                i = 0

    @staticmethod
    def decode_interleaved(count, states, reader):
        """Inverse of encode_interleaved; count is the total symbol count."""
        n_states = len(states)
        out = np.empty(count, dtype=np.int64)
        i = 0
        for j in range(count):
            out[j] = states[i].decode_one(reader)
            i += 1
            if i == n_states:
                i = 0
        return out

    def decode_fixed_block(self, count, k, reader):
        out = np.empty(count, dtype=np.int64)
        for i in range(count):
            q = reader.read_unary(RICE_ESCAPE_Q)
            if q == RICE_ESCAPE_Q:
                raise CorruptStreamError("unary prefix overrun in fixed-k block")
            out[i] = (q << k) | (reader.read_bits(k) if k else 0)
        return out


class RangeEncoder:
    """Carryless 32-bit range coder (Subbotin renormalization).

    A byte is emitted once the top byte of [low, low + range) is settled; when
    range drops below RC_BOT while straddling a top-byte boundary, range is
    clipped to the distance to the next RC_BOT multiple, which avoids carry
    propagation at a negligible coding cost.
    """

    def __init__(self, writer):
        self._writer = writer
        self.low = 0
        self.range = MASK32

    def _normalize(self):
        low = self.low
        rng = self.range
        write = self._writer.write_bits
        while True:
            if (low ^ (low + rng)) < RC_TOP:
                pass
            elif rng < RC_BOT:
                rng = (-low) & (RC_BOT - 1)
            else:
                break
            write((low >> 24) & 0xFF, 8)
            low = (low << 8) & MASK32
            rng = (rng << 8) & MASK32
        self.low = low
        self.range = rng

    def encode(self, cum_lo, freq, total):
        r = self.range // total
        self.low += r * cum_lo
        self.range = r * freq
        self._normalize()

    def encode_bit_direct(self, bit):
        self.range >>= 1
        if bit:
            self.low += self.range
        self._normalize()

    def encode_direct(self, value, nbits):
        for shift in range(nbits - 1, -1, -1):
            self.encode_bit_direct((value >> shift) & 1)

    def finish(self):
        low = self.low
        write = self._writer.write_bits
        for _ in range(4):
            write((low >> 24) & 0xFF, 8)
            low = (low << 8) & MASK32
        self.low = low

    def encode_block(self, values, counts, cum):
        """Table-coded symbols; values >= 256 go through ESC + 11 raw bits."""
        counts = counts.tolist() if hasattr(counts, "tolist") else list(counts)
        cum = cum.tolist() if hasattr(cum, "tolist") else list(cum)
        total = cum[257]
        esc_lo = cum[AC_ESC]
        esc_f = counts[AC_ESC]
        for v in np.asarray(values).tolist():
            v = int(v)
            if v < AC_ESC:
                self.encode(cum[v], counts[v], total)
            else:
                self.encode(esc_lo, esc_f, total)
                self.encode_direct(v, AC_RAW_BITS)

    def encode_escaped_block(self, values, counts, cum):
        """Force every value through the ESC + raw path (RLE chunk symbols)."""
        counts = counts.tolist() if hasattr(counts, "tolist") else list(counts)
        cum = cum.tolist() if hasattr(cum, "tolist") else list(cum)
        total = cum[257]
        esc_lo = cum[AC_ESC]
        esc_f = counts[AC_ESC]
        for v in np.asarray(values).tolist():
            self.encode(esc_lo, esc_f, total)
            self.encode_direct(int(v), AC_RAW_BITS)


class RangeDecoder:
    """Decoding twin of RangeEncoder; state trajectories match exactly."""

    def __init__(self, reader):
        self._reader = reader
        self.low = 0
        self.range = MASK32
        code = 0
        for _ in range(4):
            code = (code << 8) | reader.read_bits(8)
        self.code = code

    def _normalize(self):
        low = self.low
        rng = self.range
        code = self.code
        read = self._reader.read_bits
        while True:
            if (low ^ (low + rng)) < RC_TOP:
                pass
            elif rng < RC_BOT:
                rng = (-low) & (RC_BOT - 1)
            else:
                break
            code = ((code << 8) | read(8)) & MASK32
            low = (low << 8) & MASK32
            rng = (rng << 8) & MASK32
        self.low = low
        self.range = rng
        self.code = code

    def decode_target(self, total):
        r = self.range // total
        target = ((self.code - self.low) & MASK32) // r
        if target >= total:
            raise CorruptStreamError("range decoder target outside table total")
        return target

    def decode_update(self, cum_lo, freq, total):
        r = self.range // total
        self.low += r * cum_lo
        self.range = r * freq
        self._normalize()

    def decode_bit_direct(self):
        self.range >>= 1
        bit = 1 if ((self.code - self.low) & MASK32) >= self.range else 0
        if bit:
            self.low += self.range
        self._normalize()
        return bit

    def decode_direct(self, nbits):
        value = 0
        for _ in range(nbits):
            value = (value << 1) | self.decode_bit_direct()
        return value

    def decode_block(self, count, counts, cum):
        counts = counts.tolist() if hasattr(counts, "tolist") else list(counts)
        cum = cum.tolist() if hasattr(cum, "tolist") else list(cum)
        total = cum[257]
        out = np.empty(count, dtype=np.int64)
        for i in range(count):
            target = self.decode_target(total)
            sym = bisect_right(cum, target) - 1
            self.decode_update(cum[sym], counts[sym], total)
            if sym == AC_ESC:
                out[i] = self.decode_direct(AC_RAW_BITS)
            else:
                out[i] = sym
        return out

    def decode_escaped_block(self, count, counts, cum):
        counts = counts.tolist() if hasattr(counts, "tolist") else list(counts)
        cum = cum.tolist() if hasattr(cum, "tolist") else list(cum)
        total = cum[257]
        esc_lo = cum[AC_ESC]
        esc_f = counts[AC_ESC]
        out = np.empty(count, dtype=np.int64)
        for i in range(count):
            target = self.decode_target(total)
            if not esc_lo <= target < esc_lo + esc_f:
                raise CorruptStreamError("expected an ESC-coded chunk symbol")
            self.decode_update(esc_lo, esc_f, total)
            out[i] = self.decode_direct(AC_RAW_BITS)
        return out


def fir_step_raw(coeffs, delay, x, out_shift):
    """One fixed-point FIR tick.

    coeffs and delay are length-16 int sequences, delay newest-first. Products
    are truncated by 2 bits before a 26-bit wrapping accumulate; the wrapped
    sum is arithmetic-shifted by out_shift and saturated to int16. Returns
    (y, new_delay_list).
    """
    delay = [x] + list(delay[:15])
    acc = 0
    for c, s in zip(coeffs, delay):
        acc += (c * s) >> 2
        acc = ((acc + (1 << 25)) & ((1 << 26) - 1)) - (1 << 25)
    y = acc >> out_shift
    if y > 32767:
        y = 32767
    elif y < -32768:
        y = -32768
    return y, delay


def fir_channel(x, coeffs, delay, out_shift):
    """Run one channel through the FIR; returns (y int16 array, new delay)."""
    coeffs = [int(c) for c in coeffs]
    state = [int(d) for d in delay]
    out = np.empty(len(x), dtype=np.int16)
    for i, sample in enumerate(np.asarray(x).tolist()):
        y, state = fir_step_raw(coeffs, state, int(sample), out_shift)
        out[i] = y
    return out, np.asarray(state, dtype=np.int32)


def detect_channel(x, c0, c1, amp_mult, refractory, verify_window):
    """Full two-stage detection over one channel.

    Pure fallback delegates to the streaming reference detector so there is a
    single source of truth; the compiled twin re-implements the same loop.
    Returns (flags uint8 array, final AteState snapshot tuple).
    """
    from ..detect import ChannelDetector, DetectorConfig

    config = DetectorConfig(
        c0=c0,
        c1=c1,
        amp_mult=amp_mult,
        refractory=refractory,
        verify_window=verify_window,
    )
    det = ChannelDetector(config)
    flags = np.zeros(len(x), dtype=np.uint8)
    step = det.step
    for i, sample in enumerate(np.asarray(x).tolist()):
        if step(int(sample)) and i > 0:
            flags[i - 1] = 1
    ate = det.ate
    return flags, (ate.thr_neo, ate.thr_amp, ate.ne_q, ate.zc_log, ate.zc_count, ate.zc_pos)
