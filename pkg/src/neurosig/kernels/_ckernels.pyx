# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel core.

Bit-exact twin of ``pykernels``; every class and function here must produce
identical output (equivalence-tested). Only the inner loops differ.
"""

from cpython.mem cimport PyMem_Free, PyMem_Malloc, PyMem_Realloc
from libc.math cimport sqrt
from libc.string cimport memcpy

import numpy as np

from ..errors import CorruptStreamError, TruncatedStreamError

BACKEND = "c"

MASK32 = 0xFFFFFFFF

cdef unsigned long long C_MASK32 = 0xFFFFFFFFULL
cdef unsigned long long C_RC_TOP = 1ULL << 24
cdef unsigned long long C_RC_BOT = 1ULL << 16

cdef int C_AC_ESC = 256
cdef int C_AC_RAW_BITS = 11
cdef int C_ADAPT_WINDOW = 64
cdef int C_ESCAPE_Q = 512
cdef int C_ESCAPE_BITS = 16

RC_TOP = 1 << 24
RC_BOT = 1 << 16
AC_ESC = 256
AC_RAW_BITS = 11
RICE_ADAPT_WINDOW = 64
RICE_ESCAPE_Q = 512
RICE_ESCAPE_BITS = 16
RICE_DEFAULT_K = 4
RICE_DEFAULT_P0 = 128
RICE_K_LOOKUP = (5, 3, 2, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0)

cdef int[16] C_K_LOOKUP
for _i, _v in enumerate(RICE_K_LOOKUP):
    C_K_LOOKUP[_i] = _v


cdef inline long long asr(long long v, int s):
    # Portable arithmetic (floor) right shift.
    if v >= 0:
        return v >> s
    return ~((~v) >> s)


cdef inline long long c_isqrt(long long v):
    if v <= 0:
        return 0
    cdef long long x = <long long>sqrt(<double>v)
    while x > 0 and x * x > v:
        x -= 1
    while (x + 1) * (x + 1) <= v:
        x += 1
    return x


cdef class BitWriter:
    """MSB-first bit sink backed by a growable C buffer."""

    cdef unsigned char* _buf
    cdef size_t _cap
    cdef size_t _size
    cdef unsigned long long _acc
    cdef int _nacc

    def __cinit__(self):
        self._cap = 4096
        self._buf = <unsigned char*>PyMem_Malloc(self._cap)
        if self._buf == NULL:
            raise MemoryError()
        self._size = 0
        self._acc = 0
        self._nacc = 0

    def __dealloc__(self):
        if self._buf != NULL:
            PyMem_Free(self._buf)

    cdef inline int _grow(self) except -1:
        cdef size_t new_cap = self._cap * 2
        cdef unsigned char* p = <unsigned char*>PyMem_Realloc(self._buf, new_cap)
        if p == NULL:
            raise MemoryError()
        self._buf = p
        self._cap = new_cap
        return 0

    cdef inline int _put(self, unsigned long long value, int nbits) except -1:
        cdef unsigned long long acc = (self._acc << nbits) | value
        cdef int nacc = self._nacc + nbits
        while nacc >= 8:
            nacc -= 8
            if self._size == self._cap:
                self._grow()
            self._buf[self._size] = <unsigned char>((acc >> nacc) & 0xFF)
            self._size += 1
        self._acc = acc & ((1ULL << nacc) - 1)
        self._nacc = nacc
        return 0

    @property
    def bit_length(self):
        return self._size * 8 + self._nacc

    def write_bits(self, value, nbits):
        cdef int nb = nbits
        if nb < 0 or nb > 32:
            raise ValueError(f"nbits must be in [0, 32], got {nbits}")
        cdef unsigned long long v = value
        if nb < 64 and (v >> nb):
            raise ValueError(f"value {value} does not fit in {nbits} bits")
        self._put(v, nb)

    def write_unary(self, q):
        cdef long long qq = q
        self._unary(qq)

    cdef inline int _unary(self, long long q) except -1:
        while q >= 32:
            self._put(0xFFFFFFFFULL, 32)
            q -= 32
        self._put(((1ULL << q) - 1) << 1, <int>q + 1)
        return 0

    def write_ones(self, q):
        cdef long long qq = q
        self._ones(qq)

    cdef inline int _ones(self, long long q) except -1:
        while q >= 32:
            self._put(0xFFFFFFFFULL, 32)
            q -= 32
        if q:
            self._put((1ULL << q) - 1, <int>q)
        return 0

    def getvalue(self):
        out = self._buf[: self._size]
        if self._nacc:
            out += bytes([(self._acc << (8 - self._nacc)) & 0xFF])
        return out


cdef class BitReader:
    """MSB-first bit source over a bytes object."""

    cdef bytes _obj
    cdef const unsigned char* _data
    cdef long long _pos
    cdef long long _limit

    def __init__(self, data, nbits=None, start_bit=0):
        self._obj = bytes(data)
        self._data = self._obj
        self._pos = start_bit
        cdef long long limit = <long long>len(self._obj) * 8
        if nbits is not None:
            if start_bit + nbits < limit:
                limit = start_bit + nbits
        self._limit = limit

    @property
    def bits_remaining(self):
        return self._limit - self._pos

    cdef inline unsigned long long _get(self, int nbits) except? 0xFFFFFFFFFFFFFFFF:
        cdef long long pos = self._pos
        if pos + nbits > self._limit:
            raise TruncatedStreamError(
                f"read of {nbits} bits at bit {pos} passes end ({self._limit})"
            )
        cdef unsigned long long value = 0
        cdef int remaining = nbits
        cdef long long byte_index
        cdef int bit_index, take
        cdef unsigned int chunk
        while remaining:
            byte_index = pos >> 3
            bit_index = <int>(pos & 7)
            take = 8 - bit_index
            if take > remaining:
                take = remaining
            chunk = self._data[byte_index] >> (8 - bit_index - take)
            value = (value << take) | (chunk & ((1u << take) - 1))
            pos += take
            remaining -= take
        self._pos = pos
        return value

    def read_bits(self, nbits):
        cdef int nb = nbits
        if nb < 0 or nb > 32:
            raise ValueError(f"nbits must be in [0, 32], got {nbits}")
        return self._get(nb)

    cdef inline long long _unary(self, long long cap) except -1:
        cdef long long count = 0
        while count < cap:
            if self._get(1) == 0:
                return count
            count += 1
        return count

    def read_unary(self, cap):
        return self._unary(cap)


cdef class RiceCoder:
    """Golomb-Rice coder with zero-proportion-driven parameter adaptation."""

    cdef public int k
    cdef public int p0_q
    cdef public int zero_count
    cdef public int symbol_count

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

    cdef inline void _adapt(self, long long m):
        if m == 0:
            self.zero_count += 1
        self.symbol_count += 1
        cdef int idx
        if self.symbol_count == C_ADAPT_WINDOW:
            self.p0_q = (self.p0_q + (self.zero_count << 2)) >> 1
            idx = self.p0_q >> 4
            if idx > 15:
                idx = 15
            self.k = C_K_LOOKUP[idx]
            self.zero_count = 0
            self.symbol_count = 0

    def adapt(self, m):
        self._adapt(m)

    cdef inline int _encode(self, long long m, BitWriter writer) except -1:
        cdef int k = self.k
        cdef long long q = m >> k
        if q >= C_ESCAPE_Q:
            if m >> C_ESCAPE_BITS:
                raise ValueError(f"value {m} exceeds the escape range")
            writer._ones(C_ESCAPE_Q)
            writer._put(<unsigned long long>m, C_ESCAPE_BITS)
        else:
            writer._unary(q)
            if k:
                writer._put(<unsigned long long>m & ((1ULL << k) - 1), k)
        self._adapt(m)
        return 0

    def encode_one(self, m, writer):
        if m < 0:
            raise ValueError(f"Rice input must be non-negative, got {m}")
        self._encode(m, <BitWriter>writer)

    cdef inline long long _decode(self, BitReader reader) except -1:
        cdef long long q = reader._unary(C_ESCAPE_Q)
        cdef long long m
        cdef int k
        if q == C_ESCAPE_Q:
            m = <long long>reader._get(C_ESCAPE_BITS)
        else:
            k = self.k
            m = q << k
            if k:
                m |= <long long>reader._get(k)
        self._adapt(m)
        return m

    def decode_one(self, reader):
        return self._decode(<BitReader>reader)

    def encode_block(self, values, writer):
        cdef long long[::1] v = np.ascontiguousarray(values, dtype=np.int64)
        cdef BitWriter w = <BitWriter>writer
        cdef Py_ssize_t i
        for i in range(v.shape[0]):
            if v[i] < 0:
                raise ValueError(f"Rice input must be non-negative, got {v[i]}")
            self._encode(v[i], w)

    def decode_block(self, count, reader):
        cdef Py_ssize_t n = count
        out = np.empty(n, dtype=np.int64)
        cdef long long[::1] o = out
        cdef BitReader r = <BitReader>reader
        cdef Py_ssize_t i
        for i in range(n):
            o[i] = self._decode(r)
        return out

    def encode_fixed_block(self, values, k, writer):
        cdef long long[::1] v = np.ascontiguousarray(values, dtype=np.int64)
        cdef BitWriter w = <BitWriter>writer
        cdef int kk = k
        cdef unsigned long long mask = (1ULL << kk) - 1
        cdef Py_ssize_t i
        cdef long long m
        for i in range(v.shape[0]):
            m = v[i]
            w._unary(m >> kk)
            if kk:
                w._put(<unsigned long long>m & mask, kk)

    def decode_fixed_block(self, count, k, reader):
        cdef Py_ssize_t n = count
        out = np.empty(n, dtype=np.int64)
        cdef long long[::1] o = out
        cdef BitReader r = <BitReader>reader
        cdef int kk = k
        cdef Py_ssize_t i
        cdef long long q
        for i in range(n):
            q = r._unary(C_ESCAPE_Q)
            if q == C_ESCAPE_Q:
                raise CorruptStreamError("unary prefix overrun in fixed-k block")
            if kk:
                o[i] = (q << kk) | <long long>r._get(kk)
            else:
                o[i] = q
        return out

    @staticmethod
    def encode_interleaved(values, states, writer):
        cdef long long[::1] v = np.ascontiguousarray(values, dtype=np.int64)
        cdef BitWriter w = <BitWriter>writer
        cdef list st = list(states)
        cdef Py_ssize_t n_states = len(st)
        cdef Py_ssize_t i = 0, j
        for j in range(v.shape[0]):
            if v[j] < 0:
                raise ValueError(f"Rice input must be non-negative, got {v[j]}")
            (<RiceCoder>st[i])._encode(v[j], w)
            i += 1
            if i == n_states:
                i = 0

    @staticmethod
    def decode_interleaved(count, states, reader):
        cdef Py_ssize_t n = count
        out = np.empty(n, dtype=np.int64)
        cdef long long[::1] o = out
        cdef BitReader r = <BitReader>reader
        cdef list st = list(states)
        cdef Py_ssize_t n_states = len(st)
        cdef Py_ssize_t i = 0, j
        for j in range(n):
            o[j] = (<RiceCoder>st[i])._decode(r)
            i += 1
            if i == n_states:
                i = 0
        return out


cdef class RangeEncoder:
    """Carryless 32-bit range coder (Subbotin renormalization)."""

    cdef BitWriter _writer
    cdef unsigned long long _low
    cdef unsigned long long _range

    def __init__(self, writer):
        self._writer = <BitWriter>writer
        self._low = 0
        self._range = C_MASK32

    @property
    def low(self):
        return self._low

    @property
    def range(self):
        return self._range

    cdef inline int _normalize(self) except -1:
        cdef unsigned long long low = self._low
        cdef unsigned long long rng = self._range
        while True:
            if (low ^ (low + rng)) < C_RC_TOP:
                pass
            elif rng < C_RC_BOT:
                rng = (0 - low) & (C_RC_BOT - 1)
            else:
                break
            self._writer._put((low >> 24) & 0xFF, 8)
            low = (low << 8) & C_MASK32
            rng = (rng << 8) & C_MASK32
        self._low = low
        self._range = rng
        return 0

    cdef inline int _encode(
        self, unsigned long long cum_lo, unsigned long long freq, unsigned long long total
    ) except -1:
        cdef unsigned long long r = self._range // total
        self._low += r * cum_lo
        self._range = r * freq
        self._normalize()
        return 0

    def encode(self, cum_lo, freq, total):
        self._encode(cum_lo, freq, total)

    cdef inline int _encode_bit(self, int bit) except -1:
        self._range >>= 1
        if bit:
            self._low += self._range
        self._normalize()
        return 0

    def encode_bit_direct(self, bit):
        self._encode_bit(bit)

    cdef inline int _encode_direct(self, unsigned long long value, int nbits) except -1:
        cdef int shift
        for shift in range(nbits - 1, -1, -1):
            self._encode_bit(<int>((value >> shift) & 1))
        return 0

    def encode_direct(self, value, nbits):
        self._encode_direct(value, nbits)

    def finish(self):
        cdef unsigned long long low = self._low
        cdef int i
        for i in range(4):
            self._writer._put((low >> 24) & 0xFF, 8)
            low = (low << 8) & C_MASK32
        self._low = low

    def encode_block(self, values, counts, cum):
        cdef long long[::1] v = np.ascontiguousarray(values, dtype=np.int64)
        cdef unsigned int[::1] c = np.ascontiguousarray(counts, dtype=np.uint32)
        cdef unsigned int[::1] cm = np.ascontiguousarray(cum, dtype=np.uint32)
        cdef unsigned long long total = cm[257]
        cdef unsigned long long esc_lo = cm[C_AC_ESC]
        cdef unsigned long long esc_f = c[C_AC_ESC]
        cdef Py_ssize_t i
        cdef long long val
        for i in range(v.shape[0]):
            val = v[i]
            if val < C_AC_ESC:
                self._encode(cm[val], c[val], total)
            else:
                self._encode(esc_lo, esc_f, total)
                self._encode_direct(<unsigned long long>val, C_AC_RAW_BITS)

    def encode_escaped_block(self, values, counts, cum):
        cdef long long[::1] v = np.ascontiguousarray(values, dtype=np.int64)
        cdef unsigned int[::1] c = np.ascontiguousarray(counts, dtype=np.uint32)
        cdef unsigned int[::1] cm = np.ascontiguousarray(cum, dtype=np.uint32)
        cdef unsigned long long total = cm[257]
        cdef unsigned long long esc_lo = cm[C_AC_ESC]
        cdef unsigned long long esc_f = c[C_AC_ESC]
        cdef Py_ssize_t i
        for i in range(v.shape[0]):
            self._encode(esc_lo, esc_f, total)
            self._encode_direct(<unsigned long long>v[i], C_AC_RAW_BITS)


cdef class RangeDecoder:
    """Decoding twin of RangeEncoder; state trajectories match exactly."""

    cdef BitReader _reader
    cdef unsigned long long _low
    cdef unsigned long long _range
    cdef unsigned long long _code

    def __init__(self, reader):
        self._reader = <BitReader>reader
        self._low = 0
        self._range = C_MASK32
        cdef unsigned long long code = 0
        cdef int i
        for i in range(4):
            code = (code << 8) | self._reader._get(8)
        self._code = code

    @property
    def low(self):
        return self._low

    @property
    def range(self):
        return self._range

    @property
    def code(self):
        return self._code

    cdef inline int _normalize(self) except -1:
        cdef unsigned long long low = self._low
        cdef unsigned long long rng = self._range
        cdef unsigned long long code = self._code
        while True:
            if (low ^ (low + rng)) < C_RC_TOP:
                pass
            elif rng < C_RC_BOT:
                rng = (0 - low) & (C_RC_BOT - 1)
            else:
                break
            code = ((code << 8) | self._reader._get(8)) & C_MASK32
            low = (low << 8) & C_MASK32
            rng = (rng << 8) & C_MASK32
        self._low = low
        self._range = rng
        self._code = code
        return 0

    cdef inline unsigned long long _target(self, unsigned long long total) except? 0xFFFFFFFFFFFFFFFF:
        cdef unsigned long long r = self._range // total
        cdef unsigned long long t = ((self._code - self._low) & C_MASK32) // r
        if t >= total:
            raise CorruptStreamError("range decoder target outside table total")
        return t

    def decode_target(self, total):
        return self._target(total)

    cdef inline int _update(
        self, unsigned long long cum_lo, unsigned long long freq, unsigned long long total
    ) except -1:
        cdef unsigned long long r = self._range // total
        self._low += r * cum_lo
        self._range = r * freq
        self._normalize()
        return 0

    def decode_update(self, cum_lo, freq, total):
        self._update(cum_lo, freq, total)

    cdef inline int _decode_bit(self) except -1:
        self._range >>= 1
        cdef int bit = 1 if ((self._code - self._low) & C_MASK32) >= self._range else 0
        if bit:
            self._low += self._range
        self._normalize()
        return bit

    def decode_bit_direct(self):
        return self._decode_bit()

    cdef inline unsigned long long _decode_direct(self, int nbits) except? 0xFFFFFFFFFFFFFFFF:
        cdef unsigned long long value = 0
        cdef int i
        for i in range(nbits):
            value = (value << 1) | <unsigned long long>self._decode_bit()
        return value

    def decode_direct(self, nbits):
        return self._decode_direct(nbits)

    def decode_block(self, count, counts, cum):
        cdef Py_ssize_t n = count
        cdef unsigned int[::1] c = np.ascontiguousarray(counts, dtype=np.uint32)
        cdef unsigned int[::1] cm = np.ascontiguousarray(cum, dtype=np.uint32)
        cdef unsigned long long total = cm[257]
        out = np.empty(n, dtype=np.int64)
        cdef long long[::1] o = out
        cdef Py_ssize_t i
        cdef unsigned long long t
        cdef int lo, hi, mid
        for i in range(n):
            t = self._target(total)
            lo = 0
            hi = 257
            while hi - lo > 1:
                mid = (lo + hi) >> 1
                if cm[mid] <= t:
                    lo = mid
                else:
                    hi = mid
            self._update(cm[lo], c[lo], total)
            if lo == C_AC_ESC:
                o[i] = <long long>self._decode_direct(C_AC_RAW_BITS)
            else:
                o[i] = lo
        return out

    def decode_escaped_block(self, count, counts, cum):
        cdef Py_ssize_t n = count
        cdef unsigned int[::1] c = np.ascontiguousarray(counts, dtype=np.uint32)
        cdef unsigned int[::1] cm = np.ascontiguousarray(cum, dtype=np.uint32)
        cdef unsigned long long total = cm[257]
        cdef unsigned long long esc_lo = cm[C_AC_ESC]
        cdef unsigned long long esc_f = c[C_AC_ESC]
        out = np.empty(n, dtype=np.int64)
        cdef long long[::1] o = out
        cdef Py_ssize_t i
        cdef unsigned long long t
        for i in range(n):
            t = self._target(total)
            if t < esc_lo or t >= esc_lo + esc_f:
                raise CorruptStreamError("expected an ESC-coded chunk symbol")
            self._update(esc_lo, esc_f, total)
            o[i] = <long long>self._decode_direct(C_AC_RAW_BITS)
        return out


def fir_step_raw(coeffs, delay, x, out_shift):
    """Single-tick reference; kept identical to the pure version."""
    cdef long long acc = 0
    cdef long long y
    cdef int i
    new_delay = [int(x)] + list(delay[:15])
    cdef long long c, s
    for i in range(16):
        c = coeffs[i]
        s = new_delay[i]
        acc += asr(c * s, 2)
        acc = ((acc + (1LL << 25)) & ((1LL << 26) - 1)) - (1LL << 25)
    y = asr(acc, out_shift)
    if y > 32767:
        y = 32767
    elif y < -32768:
        y = -32768
    return int(y), new_delay


def fir_channel(x, coeffs, delay, out_shift):
    """Block FIR for one channel; returns (int16 output, updated delay)."""
    cdef int[::1] xv = np.ascontiguousarray(x, dtype=np.int32)
    cdef long long[16] c
    cdef long long[16] d
    cdef int i, j
    cdef int shift = out_shift
    co = np.ascontiguousarray(coeffs, dtype=np.int64)
    de = np.ascontiguousarray(delay, dtype=np.int64)
    for i in range(16):
        c[i] = co[i]
        d[i] = de[i]
    cdef Py_ssize_t n = xv.shape[0]
    out = np.empty(n, dtype=np.int16)
    cdef short[::1] o = out
    cdef long long acc, y
    cdef Py_ssize_t t
    for t in range(n):
        for j in range(15, 0, -1):
            d[j] = d[j - 1]
        d[0] = xv[t]
        acc = 0
        for j in range(16):
            acc += asr(c[j] * d[j], 2)
            acc = ((acc + (1LL << 25)) & ((1LL << 26) - 1)) - (1LL << 25)
        y = asr(acc, shift)
        if y > 32767:
            y = 32767
        elif y < -32768:
            y = -32768
        o[t] = <short>y
    new_delay = np.empty(16, dtype=np.int32)
    for i in range(16):
        new_delay[i] = <int>d[i]
    return out, new_delay


def detect_channel(x, c0, c1, amp_mult, refractory, verify_window):
    """Two-stage detection loop; mirrors neurosig.detect.ChannelDetector."""
    cdef int[::1] xv = np.ascontiguousarray(x, dtype=np.int32)
    cdef Py_ssize_t n = xv.shape[0]
    flags = np.zeros(n, dtype=np.uint8)
    cdef unsigned char[::1] fl = flags

    cdef long long cc0 = c0, cc1 = c1, camp = amp_mult
    cdef long long crefr = refractory
    cdef int vw = verify_window

    cdef long long x1 = 0, x2 = 0
    cdef long long seen = 0
    cdef long long psi, psi_c, clip_limit
    cdef long long psi_prev = 0
    cdef long long zc_count = 0, zc_pos = 0, zc_log = 0
    cdef long long ne_q = 0, ne
    cdef long long thr_neo = 0, thr_amp = camp
    cdef long long pending_left = 0, refractory_left = 0
    cdef long long x_prev, v, v2
    cdef bint hit
    cdef Py_ssize_t t
    cdef int ring_len = vw if vw > 0 else 1
    cdef long long* ring = <long long*>PyMem_Malloc(ring_len * sizeof(long long))
    if ring == NULL:
        raise MemoryError()
    cdef int ring_pos = 0
    cdef int ri
    for ri in range(ring_len):
        ring[ri] = 0

    try:
        for t in range(n):
            v = xv[t]
            # NEO at time t-1 (zero for the first two samples)
            if seen >= 2:
                psi = x1 * x1 - x2 * v
            else:
                psi = 0
            x2 = x1
            x1 = v
            seen += 1
            if psi < -(1LL << 20):
                psi = -(1LL << 20)

            # ATE: zero crossings
            if psi != 0 and psi_prev != 0 and ((psi > 0) != (psi_prev > 0)):
                zc_count += 1
            psi_prev = psi
            zc_pos += 1
            if zc_pos == (1LL << 14):
                zc_log = 0
                v2 = zc_count + 1
                while v2 > 1:
                    v2 >>= 1
                    zc_log += 1
                zc_count = 0
                zc_pos = 0

            # ATE: clipped noise IIR in Q.4
            ne = ne_q >> 4
            clip_limit = 4 * ne + 64
            psi_c = psi if psi > 0 else 0
            if psi_c > clip_limit:
                psi_c = clip_limit
            ne_q += asr((psi_c << 4) - ne_q, 4)

            # thresholds
            ne = ne_q >> 4
            thr_neo = ne * (cc0 + cc1 * zc_log)
            thr_amp = camp * c_isqrt(ne if ne > 1 else 1)

            # two-stage detection at time t-1
            hit = False
            if refractory_left > 0:
                refractory_left -= 1
            else:
                if pending_left > 0:
                    if psi >= thr_neo:
                        hit = True
                    else:
                        pending_left -= 1
                if (not hit) and pending_left == 0:
                    x_prev = x2
                    if x_prev < 0:
                        x_prev = -x_prev
                    if x_prev >= thr_amp:
                        if psi >= thr_neo:
                            hit = True
                        else:
                            for ri in range(vw):
                                if ring[ri] >= thr_neo:
                                    hit = True
                                    break
                            if not hit:
                                pending_left = vw
                if hit:
                    pending_left = 0
                    refractory_left = crefr
            if vw:
                ring[ring_pos] = psi
                ring_pos += 1
                if ring_pos == vw:
                    ring_pos = 0
            if hit and t > 0:
                fl[t - 1] = 1
    finally:
        PyMem_Free(ring)
    return flags, (int(thr_neo), int(thr_amp), int(ne_q), int(zc_log), int(zc_count), int(zc_pos))
