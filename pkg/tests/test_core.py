import numpy as np
import pytest

from neurosig import core
from neurosig.errors import FormatError, TruncatedStreamError
from neurosig.kernels import BitReader, BitWriter


class TestQuantize:
    def test_zero_maps_to_zero(self):
        assert core.quantize(0.0, 1.0) == 0
        assert core.quantize(0.0, 1e-6) == 0

    def test_clamp_at_positive_rail(self):
        assert core.quantize(1e9, 1.0) == 255

    def test_clamp_at_negative_rail(self):
        assert core.quantize(-1e9, 1.0) == -256

    def test_direct_evaluation(self):
        assert core.quantize(-0.7, 0.01) == -70

    def test_rejects_nonpositive_scale(self):
        with pytest.raises(ValueError):
            core.quantize(1.0, 0.0)

    def test_monotone_in_raw(self, rng):
        raw = np.sort(rng.uniform(-5, 5, size=2000))
        q = [core.quantize(v, 0.01) for v in raw]
        assert all(b >= a for a, b in zip(q, q[1:]))

    def test_array_matches_scalar_and_counts_clamps(self, rng):
        raw = rng.uniform(-4, 4, size=500)
        arr, clamped = core.quantize_array(raw, 0.01)
        assert [core.quantize(v, 0.01) for v in raw] == arr.tolist()
        assert clamped == int(np.sum((np.rint(raw / 0.01) > 255) | (np.rint(raw / 0.01) < -256)))


class TestSsr:
    def test_no_compression(self):
        assert core.ssr(900, 900) == 0.0

    def test_paper_lossless_target(self):
        assert core.ssr(900, 333) == pytest.approx(0.63)

    def test_paper_near_lossless_target(self):
        assert core.ssr(1000, 90) == pytest.approx(0.91)

    def test_zero_original_rejected(self):
        with pytest.raises(ValueError):
            core.ssr(0, 10)

    def test_strictly_decreasing_in_compressed(self):
        values = [core.ssr(1000, c) for c in range(0, 2000, 50)]
        assert all(b < a for a, b in zip(values, values[1:]))

    def test_expansion_goes_negative(self):
        assert core.ssr(100, 150) < 0


class TestBitIO:
    def test_simple_round_trip(self):
        w = BitWriter()
        w.write_bits(0b101, 3)
        r = BitReader(w.getvalue(), nbits=w.bit_length)
        assert r.read_bits(3) == 0b101

    def test_32_bit_zero(self):
        w = BitWriter()
        w.write_bits(0, 32)
        r = BitReader(w.getvalue(), nbits=w.bit_length)
        assert r.read_bits(32) == 0

    def test_random_schedule_round_trip(self, rng):
        w = BitWriter()
        log = []
        for _ in range(10_000):
            nbits = int(rng.integers(0, 33))
            value = int(rng.integers(0, 1 << nbits)) if nbits else 0
            w.write_bits(value, nbits)
            log.append((value, nbits))
        r = BitReader(w.getvalue(), nbits=w.bit_length)
        for value, nbits in log:
            assert r.read_bits(nbits) == value

    def test_read_past_end_raises(self):
        w = BitWriter()
        w.write_bits(0b11, 2)
        r = BitReader(w.getvalue(), nbits=w.bit_length)
        r.read_bits(2)
        with pytest.raises(TruncatedStreamError):
            r.read_bits(1)

    def test_value_must_fit(self):
        w = BitWriter()
        with pytest.raises(ValueError):
            w.write_bits(4, 2)

    def test_unary_and_ones(self):
        w = BitWriter()
        w.write_unary(5)
        w.write_ones(3)
        r = BitReader(w.getvalue(), nbits=w.bit_length)
        assert r.read_unary(100) == 5
        assert r.read_bits(3) == 0b111


class TestRecording:
    def test_basic_invariants(self):
        rec = core.Recording(samples=np.zeros((2, 10), dtype=np.int16))
        assert rec.channels == 2 and rec.length == 10

    def test_channel_bounds(self):
        with pytest.raises(ValueError):
            core.Recording(samples=np.zeros((69, 4), dtype=np.int16))

    def test_sample_range_enforced(self):
        bad = np.full((1, 4), 300, dtype=np.int16)
        with pytest.raises(ValueError):
            core.Recording(samples=bad)

    def test_rate_positive(self):
        with pytest.raises(ValueError):
            core.Recording(samples=np.zeros((1, 4), dtype=np.int16), rate_hz=0)


class TestNrecFile:
    def test_write_then_ingest_round_trip(self, tmp_path, rng):
        samples = rng.integers(-256, 256, size=(3, 777)).astype(np.int16)
        rec = core.Recording(samples=samples, rate_hz=20_000)
        path = tmp_path / "t.nrec"
        core.write_nrec(path, rec)
        back = core.read_nrec(path)
        assert back.rate_hz == 20_000
        assert np.array_equal(back.samples, samples)

    def test_max_channels_accepted(self, tmp_path, rng):
        samples = rng.integers(-256, 256, size=(68, 5)).astype(np.int16)
        path = tmp_path / "t.nrec"
        core.write_nrec(path, core.Recording(samples=samples))
        assert core.read_nrec(path).channels == 68

    def test_truncated_file_rejected(self, tmp_path, rng):
        samples = rng.integers(-256, 256, size=(2, 100)).astype(np.int16)
        path = tmp_path / "t.nrec"
        core.write_nrec(path, core.Recording(samples=samples))
        data = path.read_bytes()
        path.write_bytes(data[:-3])
        with pytest.raises(FormatError):
            core.read_nrec(path)

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "t.nrec"
        path.write_bytes(b"XXXX" + bytes(30))
        with pytest.raises(FormatError) as exc:
            core.read_nrec(path)
        assert exc.value.offset == 0


class TestSpikeEvent:
    def test_window_length_enforced(self):
        with pytest.raises(ValueError):
            core.SpikeEvent(channel=0, t=40, waveform=np.zeros(63, dtype=np.int16))

    def test_trigger_must_leave_room_for_pre_samples(self):
        with pytest.raises(ValueError):
            core.SpikeEvent(channel=0, t=30, waveform=np.zeros(64, dtype=np.int16))
        core.SpikeEvent(channel=0, t=31, waveform=np.zeros(64, dtype=np.int16))
