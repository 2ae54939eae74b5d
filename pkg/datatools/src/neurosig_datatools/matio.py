"""MAT-file loading that covers both classic (v5/v7) and v7.3 (HDF5) files."""

from __future__ import annotations

import numpy as np


def load_mat(path):
    """Return a dict of variable name -> numpy array.

    Cell arrays come back as object arrays; v7.3 object references are
    dereferenced one level, which covers the cell-of-vectors layout the
    public spike datasets use.
    """
    try:
        from scipy.io import loadmat

        raw = loadmat(path, squeeze_me=False, struct_as_record=False)
        return {k: v for k, v in raw.items() if not k.startswith("__")}
    except (NotImplementedError, ValueError):
        pass  # v7.3 (or plain HDF5): fall through to h5py
    import h5py

    out = {}
    with h5py.File(path, "r") as fh:

        def read_item(item):
            data = item[()]
            if isinstance(data, np.ndarray) and data.dtype == object:
                return np.array([[fh[ref][()] for ref in row] for row in data], dtype=object)
            if isinstance(data, np.ndarray) and data.dtype.kind == "O":
                return data
            if isinstance(data, np.ndarray) and h5py.check_ref_dtype(item.dtype):
                return np.array([[fh[ref][()] for ref in row] for row in data], dtype=object)
            return np.asarray(data)

        for key, item in fh.items():
            if key.startswith("#"):
                continue
            if isinstance(item, h5py.Dataset):
                out[key] = read_item(item)
    return out


def flatten_numeric(value):
    """Flatten a possibly cell-wrapped numeric array to 1-D float64."""
    value = np.asarray(value)
    if value.dtype == object:
        parts = [flatten_numeric(v) for v in value.ravel()]
        return np.concatenate(parts) if parts else np.array([])
    return value.astype(np.float64).ravel()
