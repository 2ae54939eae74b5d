import numpy as np
import pytest

from neurosig import fir
from neurosig.fir import FirBank, load_coeff_file


def _float_oracle(x, coeffs, out_shift):
    """Double-precision convolution with the identical shift schedule.

    Products are floor-shifted by 2 exactly as the fixed-point path does, so
    the only divergence left is accumulator wraparound.
    """
    out = np.empty(len(x))
    delay = [0.0] * 16
    for n, v in enumerate(x):
        delay = [float(v)] + delay[:15]
        acc = 0.0
        for c, s in zip(coeffs, delay):
            acc += np.floor(c * s / 4.0)
        out[n] = np.floor(acc / 2.0**out_shift)
    return out


class TestLoadCoeffs:
    def test_load_and_read_back(self):
        bank = FirBank()
        coeffs = np.arange(16, dtype=np.int16)
        bank.load_coeffs(3, coeffs)
        assert np.array_equal(bank.coeffs[3], coeffs)

    def test_delay_line_preserved_across_reload(self):
        bank = FirBank()
        bank.load_coeffs(0, np.ones(16, dtype=np.int16))
        bank.step(0, 100)
        saved = bank.delay[0].copy()
        bank.load_coeffs(0, np.full(16, 2, dtype=np.int16))
        assert np.array_equal(bank.delay[0], saved)

    def test_boundary_values_accepted(self):
        bank = FirBank()
        bank.load_coeffs(0, np.full(16, 32767, dtype=np.int64))
        bank.load_coeffs(1, np.full(16, -32768, dtype=np.int64))

    def test_wrong_length_rejected(self):
        with pytest.raises(ValueError):
            FirBank().load_coeffs(0, np.zeros(15, dtype=np.int16))

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            FirBank().load_coeffs(0, np.full(16, 40_000, dtype=np.int64))


class TestFirStep:
    def test_impulse_response_identity(self, rng):
        """An impulse of amplitude 256 traces ((c_i * 256) >> 2) >> out_shift."""
        coeffs = rng.integers(-32768, 32768, size=16).astype(np.int16)
        bank = FirBank(out_shift=12)
        bank.load_coeffs(0, coeffs)
        outputs = [bank.step(0, 256)] + [bank.step(0, 0) for _ in range(15)]
        expected = [((int(c) * 256) >> 2) >> 12 for c in coeffs]
        assert outputs == expected

    def test_zero_coefficients_zero_output(self, rng):
        bank = FirBank()
        x = rng.integers(-256, 256, size=200)
        assert all(bank.step(0, int(v)) == 0 for v in x)

    def test_matches_float_oracle_without_wraparound(self, rng):
        coeffs = rng.integers(-2048, 2048, size=16)
        x = rng.integers(-256, 256, size=500)
        bank = FirBank(out_shift=12)
        bank.load_coeffs(0, coeffs)
        got = np.array([bank.step(0, int(v)) for v in x], dtype=float)
        expected = _float_oracle(x, coeffs, 12)
        assert np.max(np.abs(got - expected)) <= 1

    def test_wraparound_is_defined_behavior(self):
        """Full-scale coefficients and inputs overflow 26 bits and wrap."""
        bank = FirBank(out_shift=0)
        bank.load_coeffs(0, np.full(16, 32767, dtype=np.int64))
        acc = 0
        outputs = []
        for _ in range(16):
            outputs.append(bank.step(0, 32767))
        # reference with explicit 26-bit wrap
        delay = []
        ref = []
        for _ in range(16):
            delay = [32767] + delay[:15]
            acc = 0
            for s in delay:
                acc += (32767 * s) >> 2
                acc = ((acc + (1 << 25)) & ((1 << 26) - 1)) - (1 << 25)
            ref.append(max(-32768, min(32767, acc)))
        assert outputs == ref

    def test_block_process_matches_steps(self, rng):
        coeffs = rng.integers(-32768, 32768, size=16)
        x = rng.integers(-256, 256, size=1000).astype(np.int32)
        bank_a = FirBank()
        bank_a.load_coeffs(2, coeffs)
        stepped = np.array([bank_a.step(2, int(v)) for v in x], dtype=np.int16)
        bank_b = FirBank()
        bank_b.load_coeffs(2, coeffs)
        block = bank_b.process(2, x)
        assert np.array_equal(stepped, block)
        assert np.array_equal(bank_a.delay[2], bank_b.delay[2])


class TestFirProperties:
    def test_linearity_in_scale(self, rng):
        # fir(x) carries up to ~2 LSB of floor-rounding; scaling the input by
        # a scales that rounding too, so fir(a x) and a fir(x) may differ by
        # about 2a LSB. Equivalently fir(a x)/a matches fir(x) within 2 LSB.
        coeffs = rng.integers(-512, 512, size=16)
        x = rng.integers(-32, 32, size=400).astype(np.int32)
        outs = {}
        for a in (1, 2, 4):
            bank = FirBank(out_shift=4)
            bank.load_coeffs(0, coeffs)
            outs[a] = bank.process(0, a * x).astype(np.int64)
        for a in (2, 4):
            assert np.max(np.abs(outs[a] / a - outs[1])) <= 2

    def test_time_invariance_exact(self, rng):
        coeffs = rng.integers(-32768, 32768, size=16)
        x = rng.integers(-256, 256, size=600).astype(np.int32)
        shift = 37
        bank_a = FirBank()
        bank_a.load_coeffs(0, coeffs)
        y = bank_a.process(0, x)
        bank_b = FirBank()
        bank_b.load_coeffs(0, coeffs)
        y_shifted = bank_b.process(0, np.concatenate([np.zeros(shift, dtype=np.int32), x]))
        assert np.array_equal(y_shifted[shift:], y[: len(y) - 0] if shift == 0 else y)

    def test_channel_independence(self, rng):
        xs = [rng.integers(-256, 256, size=300).astype(np.int32) for _ in range(16)]
        coeffs = [rng.integers(-32768, 32768, size=16) for _ in range(16)]
        bank = FirBank()
        for ch in range(16):
            bank.load_coeffs(ch, coeffs[ch])
        together = [bank.process(ch, xs[ch]) for ch in range(16)]
        for ch in range(16):
            solo = FirBank()
            solo.load_coeffs(ch, coeffs[ch])
            assert np.array_equal(solo.process(ch, xs[ch]), together[ch])


def test_coeff_file_round_trip(tmp_path, rng):
    rows = rng.integers(-32768, 32768, size=(16, 16))
    path = tmp_path / "c.txt"
    with open(path, "w") as fh:
        fh.write("# comment line\n")
        for row in rows:
            fh.write(" ".join(str(v) for v in row) + "\n")
    assert np.array_equal(load_coeff_file(path), rows)


def test_coeff_file_shape_enforced(tmp_path):
    path = tmp_path / "c.txt"
    path.write_text("1 2 3\n")
    with pytest.raises(ValueError):
        load_coeff_file(path)
