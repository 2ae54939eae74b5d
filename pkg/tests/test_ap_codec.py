import numpy as np
import pytest

from neurosig import ap_codec as ap
from neurosig.core import SPIKE_WINDOW, read_nrec
from neurosig.entropy import FrequencyTable
from neurosig.errors import CorruptStreamError
from neurosig.kernels import BitReader, BitWriter


def _round_trip_lossless(samples, coder):
    cfg = ap.ApCodecConfig(mode=ap.MODE_LOSSLESS, coder=coder)
    w = BitWriter()
    table = None
    if coder == ap.CODER_AC:
        from neurosig.decorrelate import dpcm2_forward_block, zigzag_block

        symbols = zigzag_block(dpcm2_forward_block(samples))
        table = FrequencyTable.train(symbols if len(symbols) else np.zeros(1, int))
    bits = ap.encode_lossless(cfg, samples, w, table=table)
    r = BitReader(w.getvalue(), nbits=w.bit_length)
    out = ap.decode_lossless(cfg, r, len(samples), table=table)
    return out, bits


class TestLossless:
    @pytest.mark.parametrize("coder", [ap.CODER_AC, ap.CODER_GC])
    def test_round_trip_random(self, coder, rng):
        x = rng.integers(-256, 256, size=20_000).astype(np.int16)
        out, _ = _round_trip_lossless(x, coder)
        assert np.array_equal(out, x)

    @pytest.mark.parametrize("coder", [ap.CODER_AC, ap.CODER_GC])
    def test_round_trip_spike_data(self, coder, small_suite):
        x = read_nrec(small_suite["ap"][0]["nrec"]).channel(0)
        out, _ = _round_trip_lossless(x, coder)
        assert np.array_equal(out, x)

    def test_all_zero_ssr_under_gc(self):
        x = np.zeros(50_000, dtype=np.int16)
        _, bits = _round_trip_lossless(x, ap.CODER_GC)
        assert 1 - bits / (9 * len(x)) > 0.85

    def test_empty_stream(self):
        out, _ = _round_trip_lossless(np.array([], dtype=np.int16), ap.CODER_GC)
        assert len(out) == 0

    def test_constant_stream(self):
        x = np.full(5000, 42, dtype=np.int16)
        out, bits = _round_trip_lossless(x, ap.CODER_GC)
        assert np.array_equal(out, x)
        assert bits < 9 * len(x) / 4  # residues vanish after warm-up


class TestMergeTriggers:
    def test_refractory_merging_first_wins(self):
        times = [100, 120, 163, 164, 300]
        assert ap.merge_triggers(np.array(times), 1000) == [100, 164, 300]

    def test_early_triggers_dropped(self):
        assert ap.merge_triggers(np.array([5, 30, 31]), 1000) == [31]

    def test_flag_input(self):
        flags = np.zeros(500, dtype=np.uint8)
        flags[[40, 90, 130]] = 1
        assert ap.merge_triggers(flags, 500) == [40, 130]


class TestNllPlan:
    def test_no_detections_single_run(self):
        assert ap.nll_plan(200, [], 2) == [(200, None)]

    def test_hand_traced_single_trigger(self):
        # Trigger 100 in a 200-sample stream: window start 100 - 31 = 69,
        # window covers [69, 133), trailing run 200 - 133 = 67. The run
        # total satisfies 69 + 64 + 67 = 200.
        plan = ap.nll_plan(200, [100], 2)
        assert plan == [(69, 69), (67, None)]
        runs = sum(r for r, _ in plan)
        assert runs + 64 * sum(1 for _, s in plan if s is not None) == 200

    def test_adjacent_windows_zero_gap(self):
        plan = ap.nll_plan(300, [100, 164], 2)
        assert plan == [(69, 69), (0, 133), (103, None)]

    def test_long_run_split_by_sentinel(self):
        cap = ap.run_capacity(2)
        total = cap + 500
        plan = ap.nll_plan(total, [], 2)
        assert plan == [(cap, None), (500, None)]

    def test_sentinel_before_window(self):
        cap = ap.run_capacity(2)
        t = cap + 31
        plan = ap.nll_plan(cap + 200, [t], 2)
        assert plan == [(cap, None), (0, cap), (cap + 200 - cap - 64, None)]


class TestNearLossless:
    @pytest.mark.parametrize("coder", [ap.CODER_AC, ap.CODER_GC])
    @pytest.mark.parametrize("chunk_mode", [2, 3])
    def test_round_trip_properties(self, coder, chunk_mode, rng):
        x = rng.integers(-200, 200, size=12_000).astype(np.int16)
        triggers = sorted(rng.choice(np.arange(40, 11_900), size=30, replace=False).tolist())
        cfg = ap.ApCodecConfig(mode=ap.MODE_NEAR_LOSSLESS, coder=coder, chunk_mode=chunk_mode)
        w = BitWriter()
        res = ap.encode_near_lossless(cfg, x, np.array(triggers), w)
        table = None
        if coder == ap.CODER_AC:
            merged = ap.merge_triggers(np.array(triggers), len(x))
            table = FrequencyTable.train(ap.nll_training_symbols(x, merged, chunk_mode))
        r = BitReader(w.getvalue(), nbits=w.bit_length)
        dec = ap.decode_near_lossless(cfg, r, len(x), table=table)
        assert dec.window_starts == res.window_starts
        mask = np.zeros(len(x), dtype=bool)
        for start in dec.window_starts:
            end = min(start + SPIKE_WINDOW, len(x))
            assert np.array_equal(dec.samples[start:end], x[start:end])
            mask[start:end] = True
        assert not np.any(dec.samples[~mask])

    def test_group_structure_symbol_counts(self, rng):
        x = rng.integers(-200, 200, size=10_000).astype(np.int16)
        triggers = [500, 900, 4000, 9000]
        for chunk_mode in (2, 3):
            cfg = ap.ApCodecConfig(
                mode=ap.MODE_NEAR_LOSSLESS, coder=ap.CODER_GC, chunk_mode=chunk_mode
            )
            w = BitWriter()
            ap.encode_near_lossless(cfg, x, np.array(triggers), w)
            r = BitReader(w.getvalue(), nbits=w.bit_length)
            dec = ap.decode_near_lossless(cfg, r, len(x))
            assert dec.groups == len(triggers)
            # every spike group spans chunk_mode + 64 symbols; the leftover
            # symbols belong to the trailing run
            assert dec.symbols == dec.groups * (chunk_mode + SPIKE_WINDOW) + chunk_mode

    def test_zero_spike_stream_decodes_to_zeros(self):
        x = np.zeros(500, dtype=np.int16)
        cfg = ap.ApCodecConfig(mode=ap.MODE_NEAR_LOSSLESS, coder=ap.CODER_GC)
        w = BitWriter()
        res = ap.encode_near_lossless(cfg, x, np.array([], dtype=np.int64), w)
        assert res.window_starts == []
        r = BitReader(w.getvalue(), nbits=w.bit_length)
        dec = ap.decode_near_lossless(cfg, r, 500)
        assert not np.any(dec.samples)

    def test_tail_window_zero_padded_and_flagged(self, rng):
        x = rng.integers(-200, 200, size=400).astype(np.int16)
        cfg = ap.ApCodecConfig(mode=ap.MODE_NEAR_LOSSLESS, coder=ap.CODER_GC)
        w = BitWriter()
        res = ap.encode_near_lossless(cfg, x, np.array([390]), w)
        assert res.padded_tail
        r = BitReader(w.getvalue(), nbits=w.bit_length)
        dec = ap.decode_near_lossless(cfg, r, 400)
        assert dec.padded_tail
        start = dec.window_starts[0]
        assert np.array_equal(dec.samples[start:400], x[start:400])

    def test_sparser_firing_means_higher_ssr(self, rng):
        x = rng.integers(-50, 50, size=40_000).astype(np.int16)
        cfg = ap.ApCodecConfig(mode=ap.MODE_NEAR_LOSSLESS, coder=ap.CODER_GC)
        bits = {}
        for rate, n in (("sparse", 10), ("dense", 300)):
            triggers = np.linspace(100, 39_000, n).astype(np.int64)
            w = BitWriter()
            bits[rate] = ap.encode_near_lossless(cfg, x, triggers, w).bits
        assert bits["sparse"] < bits["dense"]

    def test_nll_beats_lossless_on_sparse_spikes(self, small_suite):
        from neurosig.synth import read_ground_truth

        entry = small_suite["ap"][0]
        x = read_nrec(entry["nrec"]).channel(0)
        times, _ = read_ground_truth(entry["gt"])
        cfg = ap.ApCodecConfig(mode=ap.MODE_NEAR_LOSSLESS, coder=ap.CODER_GC)
        w = BitWriter()
        nll_bits = ap.encode_near_lossless(cfg, x, times, w).bits
        _, ll_bits = _round_trip_lossless(x, ap.CODER_GC)
        assert 1 - nll_bits / (9 * len(x)) > 1 - ll_bits / (9 * len(x))

    def test_run_overrun_detected(self):
        cfg = ap.ApCodecConfig(mode=ap.MODE_NEAR_LOSSLESS, coder=ap.CODER_GC)
        w = BitWriter()
        ap.encode_near_lossless(cfg, np.zeros(1000, dtype=np.int16), np.array([]), w)
        r = BitReader(w.getvalue(), nbits=w.bit_length)
        with pytest.raises(CorruptStreamError):
            ap.decode_near_lossless(cfg, r, 500)  # run of 1000 passes end
