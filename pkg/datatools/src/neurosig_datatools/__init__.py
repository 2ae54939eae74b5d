"""Dataset converters for the neurosig recording format.

Standalone package: it talks to the main library only through the published
.nrec and ground-truth sidecar file formats (and the neurosig CLI when
validating), never through its Python API.
"""

__version__ = "0.1.0"
