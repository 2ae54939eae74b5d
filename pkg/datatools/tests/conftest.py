import numpy as np
import pytest
from scipy.io import savemat


@pytest.fixture()
def rng():
    return np.random.default_rng(7)


@pytest.fixture()
def quiroga_mat(tmp_path, rng):
    """Synthetic MAT file in the wave_clus layout (data + cell arrays)."""
    n = 48_000
    signal = rng.normal(0, 0.05, size=n)
    times = np.sort(rng.choice(np.arange(100, n - 100), size=150, replace=False))
    classes = rng.integers(1, 4, size=150)
    for t in times:
        signal[t : t + 8] += np.hanning(8)
    path = tmp_path / "C_Test_noise005.mat"
    savemat(
        path,
        {
            "data": signal[np.newaxis, :],
            "spike_times": np.array([[times.astype(np.float64)]], dtype=object),
            "spike_class": np.array([[classes.astype(np.float64)]], dtype=object),
            "sr": np.array([[24_000.0]]),
        },
    )
    return path, signal, times, classes


@pytest.fixture()
def lfp_mat(tmp_path, rng):
    src = rng.normal(0, 1, size=30_000)
    kernel = np.ones(25) / 25.0
    base = np.convolve(src, kernel, mode="same")
    rows = np.stack([g * base + rng.normal(0, 0.01, size=len(base)) for g in (1.0, 0.9, 1.1, 0.95)])
    path = tmp_path / "lfp.mat"
    savemat(path, {"lfp": rows.T})  # samples-major on disk, as shipped
    return path, rows
