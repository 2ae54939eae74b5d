"""Kernel backend selection.

The compiled extension carries the hot inner loops (bit I/O, Rice and range
coding, detection, FIR). It is used when importable; otherwise, or when
``NEUROSIG_PURE_PYTHON=1`` is set, the pure-Python twins take over with
identical bit-exact behavior.
"""

import os

from . import pykernels

if os.environ.get("NEUROSIG_PURE_PYTHON"):
    _impl = pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:
        _impl = pykernels

BACKEND = _impl.BACKEND

BitWriter = _impl.BitWriter
BitReader = _impl.BitReader
RiceCoder = _impl.RiceCoder
RangeEncoder = _impl.RangeEncoder
RangeDecoder = _impl.RangeDecoder
fir_channel = _impl.fir_channel
detect_channel = _impl.detect_channel

fir_step_raw = pykernels.fir_step_raw

MASK32 = pykernels.MASK32
AC_ESC = pykernels.AC_ESC
AC_RAW_BITS = pykernels.AC_RAW_BITS
RICE_ADAPT_WINDOW = pykernels.RICE_ADAPT_WINDOW
RICE_ESCAPE_Q = pykernels.RICE_ESCAPE_Q
RICE_ESCAPE_BITS = pykernels.RICE_ESCAPE_BITS
RICE_DEFAULT_K = pykernels.RICE_DEFAULT_K
RICE_DEFAULT_P0 = pykernels.RICE_DEFAULT_P0
RICE_K_LOOKUP = pykernels.RICE_K_LOOKUP
