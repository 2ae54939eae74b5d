import subprocess
import sys

import numpy as np
import pytest
from scipy.io import savemat

from neurosig_datatools import nrec
from neurosig_datatools.cli import main
from neurosig_datatools.lfp import convert_lfp
from neurosig_datatools.quiroga import convert_quiroga


class TestQuirogaConverter:
    def test_sample_count_and_sidecar_preserved(self, quiroga_mat, tmp_path):
        path, signal, times, classes = quiroga_mat
        out = tmp_path / "out.nrec"
        gt = tmp_path / "out.gt"
        summary = convert_quiroga(path, out, gt)
        assert summary["samples"] == len(signal)
        assert summary["rate_hz"] == 24_000
        assert summary["spikes"] == len(times)
        lines = gt.read_text().strip().splitlines()
        assert len(lines) == len(times)
        got_times = [int(line.split()[0]) for line in lines]
        assert got_times == sorted(times.tolist())

    def test_dequantized_within_half_scale(self, quiroga_mat, tmp_path):
        path, signal, _, _ = quiroga_mat
        out = tmp_path / "out.nrec"
        summary = convert_quiroga(path, out, tmp_path / "out.gt")
        samples, rate = nrec.read_nrec(out)
        assert rate == 24_000
        err = np.abs(samples[0].astype(np.float64) * summary["scale"] - signal)
        assert float(err.max()) <= summary["scale"] / 2 + 1e-12
        assert summary["clamped"] == 0  # auto scale keeps the rails unclamped

    def test_ms_times_unit(self, tmp_path, rng):
        signal = rng.normal(0, 0.1, size=24_000)
        times_ms = np.array([100.0, 500.0])
        path = tmp_path / "d.mat"
        savemat(
            path,
            {
                "data": signal,
                "spike_times": np.array([[times_ms]], dtype=object),
                "spike_class": np.array([[np.array([1.0, 2.0])]], dtype=object),
                "sr": np.array([[24_000.0]]),
            },
        )
        convert_quiroga(path, tmp_path / "d.nrec", tmp_path / "d.gt", times_unit="ms")
        lines = (tmp_path / "d.gt").read_text().split()
        assert int(lines[0]) == 2400 and int(lines[2]) == 12_000

    def test_missing_fields_named_in_error(self, tmp_path):
        path = tmp_path / "bad.mat"
        savemat(path, {"something": np.zeros(10)})
        with pytest.raises(KeyError, match="signal"):
            convert_quiroga(path, tmp_path / "x.nrec", tmp_path / "x.gt")

    def test_hdf5_mat_path(self, tmp_path, rng):
        """v7.3-style files go through the HDF5 loader."""
        import h5py

        signal = rng.normal(0, 0.1, size=5000)
        path = tmp_path / "v73.mat"
        with h5py.File(path, "w") as fh:
            fh["data"] = signal[np.newaxis, :]
            fh["spike_times"] = np.array([[100.0, 900.0]])
            fh["spike_class"] = np.array([[1.0, 2.0]])
            fh["sr"] = np.array([[24_000.0]])
        summary = convert_quiroga(path, tmp_path / "v.nrec", tmp_path / "v.gt")
        assert summary["spikes"] == 2


class TestLfpConverter:
    def test_channel_count_order_and_alignment(self, lfp_mat, tmp_path):
        path, rows = lfp_mat
        out = tmp_path / "l.nrec"
        summary = convert_lfp(path, out, rate_hz=1250)
        samples, rate = nrec.read_nrec(out)
        assert rate == 1250
        assert samples.shape == rows.shape  # orientation normalized, aligned

    def test_spot_values_match_after_scaling(self, lfp_mat, tmp_path):
        path, rows = lfp_mat
        out = tmp_path / "l.nrec"
        summary = convert_lfp(path, out)
        samples, _ = nrec.read_nrec(out)
        for ch, idx in ((0, 10), (2, 1234), (3, 29_000)):
            expected = np.clip(np.rint(rows[ch, idx] / summary["scale"]), -256, 255)
            assert samples[ch, idx] == expected

    def test_channel_selection_preserves_order(self, lfp_mat, tmp_path):
        path, rows = lfp_mat
        out = tmp_path / "sel.nrec"
        summary = convert_lfp(path, out, channels=[2, 0])
        samples, _ = nrec.read_nrec(out)
        assert summary["channels"] == 2
        # selection list order is preserved row-for-row
        full = tmp_path / "full.nrec"
        convert_lfp(path, full)
        all_samples, _ = nrec.read_nrec(full)
        assert np.array_equal(samples[0], all_samples[2])
        assert np.array_equal(samples[1], all_samples[0])

    def test_binary_input(self, tmp_path, rng):
        rows = rng.integers(-200, 200, size=(3, 1000)).astype("<i2")
        raw = tmp_path / "x.dat"
        raw.write_bytes(np.ascontiguousarray(rows.T).tobytes())
        out = tmp_path / "x.nrec"
        convert_lfp(raw, out, n_channels=3, scale=1.0, rate_hz=1250)
        samples, _ = nrec.read_nrec(out)
        assert np.array_equal(samples, rows)

    def test_binary_needs_channel_count(self, tmp_path):
        raw = tmp_path / "x.dat"
        raw.write_bytes(bytes(12))
        with pytest.raises(ValueError, match="n_channels"):
            convert_lfp(raw, tmp_path / "x.nrec")


class TestSidecarInvariants:
    def test_duplicate_times_dropped_with_warning(self, tmp_path):
        with pytest.warns(UserWarning, match="duplicate"):
            n = nrec.write_sidecar(tmp_path / "s.gt", [5, 5, 9], [1, 2, 1])
        assert n == 2

    def test_negative_labels_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            nrec.write_sidecar(tmp_path / "s.gt", [1, 2], [0, -1])


class TestCli:
    def test_convert_quiroga_subcommand(self, quiroga_mat, tmp_path, capsys):
        path, _, times, _ = quiroga_mat
        out = tmp_path / "cli.nrec"
        assert main(["convert-quiroga", str(path), "--output", str(out)]) == 0
        assert out.exists() and out.with_suffix(".gt").exists()

    def test_convert_lfp_subcommand(self, lfp_mat, tmp_path):
        path, _ = lfp_mat
        out = tmp_path / "cli_lfp.nrec"
        assert main(["convert-lfp", str(path), "--output", str(out), "--channels", "0,1"]) == 0
        samples, _ = nrec.read_nrec(out)
        assert samples.shape[0] == 2

    def test_error_exit_code(self, tmp_path):
        bad = tmp_path / "bad.mat"
        savemat(bad, {"nothing": np.zeros(3)})
        assert main(["convert-quiroga", str(bad)]) == 2


def test_output_accepted_by_primary_cli(quiroga_mat, tmp_path):
    """The converter's product is consumed through the primary's public CLI."""
    path, _, _, _ = quiroga_mat
    out = tmp_path / "x.nrec"
    convert_quiroga(path, out, tmp_path / "x.gt")
    proc = subprocess.run(
        [sys.executable, "-m", "neurosig.cli", "info", str(out)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert "channels=1" in proc.stdout
