"""Software model of a 68-channel neural-recording DSP chain.

Covers the full digital path: lossless/near-lossless action-potential
compression, cross-channel LFP compression, two-stage spike detection with
adaptive thresholding, a fixed-point FIR bank, spike-raster packets, and
fixed-point spike sorting, plus a benchmark harness for space-saving-ratio
and sorting-accuracy figures.
"""

from .core import Recording, SpikeEvent, quantize, read_nrec, ssr, write_nrec
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "Recording",
    "SpikeEvent",
    "quantize",
    "read_nrec",
    "ssr",
    "write_nrec",
    "__version__",
]
