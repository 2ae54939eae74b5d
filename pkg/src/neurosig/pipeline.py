"""Command dispatch, container serialization, and the benchmark harness.

The nine hardware commands map onto library operations:

  C1 record        ingest a recording into the on-device store (a directory)
  C2 stream-raw    emit framed raw samples (channel u8 + i16 LE per frame)
  C3 encode-ap     per-channel AP compression into an NCS1 container
  C4 encode-lfp    8-channel cross-channel LFP compression
  C5/C6 fir        filter up to 16 channels; stream out or store
  C7 raster        spike-raster packet stream from the two-stage detector
  C8/C9 ate        report adaptive thresholds / apply them to a config file

Debug mode re-runs any command against the store instead of a live input
file; outputs are bit-identical for identical sample content.

Container layout (NCS1, all integers little-endian):
  magic "NCS1", version u8, command u8, rate u32, total-samples u64,
  channel count u16, channel ids u8 each. For AP: slot count u8, then per
  slot 257 u16 table counts, then per channel a section [codec u8, mode u8,
  chunk_mode u8, slot u8, flags u8 (bit0 = padded tail), payload_bits u32,
  payload bytes]. For LFP: window_n u16, serialized chain, then one section
  [payload_bits u32, payload bytes].
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import ap_codec, lfp_codec
from .core import (
    Recording,
    SPIKE_PRE,
    SPIKE_WINDOW,
    original_bits,
    read_nrec,
    ssr,
    write_nrec,
)
from .detect import DetectorConfig, detect_channel, raster_tick
from .entropy import FrequencyTable
from .errors import FormatError
from .fir import BANK_CHANNELS, FirBank
from .kernels import BitReader, BitWriter
from .sort import (
    accuracy_eval,
    classify_block,
    af_train,
    kmeans_train,
    mac_project_block,
    pca_train,
)
from .synth import read_ground_truth

CONTAINER_MAGIC = b"NCS1"
CONTAINER_VERSION = 1
CMD_ENCODE_AP = 3
CMD_ENCODE_LFP = 4

MAX_TABLE_SLOTS = 4
SRAM_BUDGET_BYTES = 128 * 1024

_HEADER = struct.Struct("<4sBBIQH")
_SECTION = struct.Struct("<BBBBBI")

_CODEC_CODES = {ap_codec.CODER_AC: 0, ap_codec.CODER_GC: 1}
_MODE_CODES = {ap_codec.MODE_LOSSLESS: 0, ap_codec.MODE_NEAR_LOSSLESS: 1}


def _select_channels(recording, channels):
    if channels is None:
        return list(range(recording.channels))
    channels = sorted(set(int(c) for c in channels))
    for ch in channels:
        if not 0 <= ch < recording.channels:
            raise ValueError(f"channel {ch} not present in recording")
    return channels


def _assign_slots(symbol_sets):
    """Bucket channels into at most four table slots by residual spread.

    Channels with similar symbol statistics share a slot, keeping the whole
    model within the four-table budget.
    """
    n = len(symbol_sets)
    if n <= MAX_TABLE_SLOTS:
        tables = [
            FrequencyTable.train(s) if len(s) else FrequencyTable.uniform()
            for s in symbol_sets
        ]
        return list(range(n)), tables
    spreads = [float(np.std(s)) if len(s) else 0.0 for s in symbol_sets]
    order = np.argsort(np.argsort(spreads, kind="stable"), kind="stable")
    slots = [int(r * MAX_TABLE_SLOTS // n) for r in order]
    tables = []
    for slot in range(MAX_TABLE_SLOTS):
        pooled = [symbol_sets[i] for i in range(n) if slots[i] == slot]
        pooled = np.concatenate(pooled) if pooled else np.zeros(1, dtype=np.int64)
        tables.append(FrequencyTable.train(pooled))
    return slots, tables


def encode_ap(
    recording,
    channels=None,
    mode=ap_codec.MODE_LOSSLESS,
    coder=ap_codec.CODER_GC,
    chunk_mode=2,
    detections=None,
    detector_config=None,
):
    """Compress selected channels into an NCS1 container (command C3).

    coder may be "ac", "gc", or "alternate" (odd channels AC, even GC,
    mirroring the split compression-engine bank). Near-lossless mode takes
    detections as {channel: times-or-flags}; channels without an entry run
    the two-stage detector.
    """
    channels = _select_channels(recording, channels)
    coders = {}
    for i, ch in enumerate(channels):
        coders[ch] = (
            coder
            if coder in (ap_codec.CODER_AC, ap_codec.CODER_GC)
            else (ap_codec.CODER_AC if i % 2 == 0 else ap_codec.CODER_GC)
        )
    near = mode == ap_codec.MODE_NEAR_LOSSLESS
    triggers = {}
    if near:
        for ch in channels:
            if detections is not None and ch in detections:
                det = detections[ch]
            else:
                flags, _ = detect_channel(recording.channel(ch), detector_config)
                det = flags
            triggers[ch] = ap_codec.merge_triggers(det, recording.length)

    ac_channels = [ch for ch in channels if coders[ch] == ap_codec.CODER_AC]
    slot_of = {ch: 0 for ch in channels}
    tables = [FrequencyTable.uniform()]
    if ac_channels:
        symbol_sets = []
        for ch in ac_channels:
            x = recording.channel(ch)
            if near:
                symbol_sets.append(
                    ap_codec.nll_training_symbols(x, triggers[ch], chunk_mode)
                )
            else:
                from .decorrelate import dpcm2_forward_block, zigzag_block

                symbol_sets.append(zigzag_block(dpcm2_forward_block(x)))
        slots, tables = _assign_slots(symbol_sets)
        slot_of.update({ch: s for ch, s in zip(ac_channels, slots)})

    out = bytearray()
    out += _HEADER.pack(
        CONTAINER_MAGIC,
        CONTAINER_VERSION,
        CMD_ENCODE_AP,
        recording.rate_hz,
        recording.length,
        len(channels),
    )
    out += bytes(channels)
    out.append(len(tables))
    tw = BitWriter()
    for table in tables:
        table.serialize(tw)
    out += tw.getvalue()

    stats = {"windows": {}, "payload_bits": 0}
    for ch in channels:
        x = recording.channel(ch)
        cfg = ap_codec.ApCodecConfig(
            mode=mode, coder=coders[ch], chunk_mode=chunk_mode, slot_id=slot_of[ch]
        )
        w = BitWriter()
        table = tables[slot_of[ch]] if coders[ch] == ap_codec.CODER_AC else None
        padded = False
        if near:
            res = ap_codec.encode_near_lossless(cfg, x, triggers[ch], w, table=table)
            stats["windows"][ch] = res.window_starts
            padded = res.padded_tail
        else:
            ap_codec.encode_lossless(cfg, x, w, table=table)
        payload = w.getvalue()
        out += _SECTION.pack(
            _CODEC_CODES[coders[ch]],
            _MODE_CODES[mode],
            chunk_mode,
            slot_of[ch],
            1 if padded else 0,
            w.bit_length,
        )
        out += payload
        stats["payload_bits"] += w.bit_length
    return bytes(out), stats


def decode_ap(data):
    """Decode an NCS1 AP container; returns (Recording, info dict)."""
    magic, version, cmd, rate, total, n_ch = _unpack_header(data)
    if cmd != CMD_ENCODE_AP:
        raise FormatError(f"container command {cmd} is not an AP stream", offset=5)
    pos = _HEADER.size
    channels = list(data[pos : pos + n_ch])
    pos += n_ch
    slot_count = data[pos]
    pos += 1
    table_bytes = slot_count * 257 * 2
    tr = BitReader(data[pos : pos + table_bytes])
    tables = [FrequencyTable.deserialize(tr) for _ in range(slot_count)]
    pos += table_bytes
    samples = np.zeros((len(channels), total), dtype=np.int16)
    info = {"channels": channels, "modes": {}, "coders": {}, "windows": {}, "groups": {}}
    codes_codec = {v: k for k, v in _CODEC_CODES.items()}
    codes_mode = {v: k for k, v in _MODE_CODES.items()}
    for row, ch in enumerate(channels):
        if pos + _SECTION.size > len(data):
            raise FormatError("truncated channel section", offset=pos)
        codec, mode_c, chunk_mode, slot, flags, payload_bits = _SECTION.unpack_from(
            data, pos
        )
        pos += _SECTION.size
        nbytes_payload = (payload_bits + 7) // 8
        if pos + nbytes_payload > len(data):
            raise FormatError("truncated payload", offset=pos)
        reader = BitReader(data[pos : pos + nbytes_payload], nbits=payload_bits)
        pos += nbytes_payload
        coder = codes_codec[codec]
        mode = codes_mode[mode_c]
        cfg = ap_codec.ApCodecConfig(
            mode=mode, coder=coder, chunk_mode=chunk_mode, slot_id=slot
        )
        table = tables[slot] if coder == ap_codec.CODER_AC else None
        if mode == ap_codec.MODE_LOSSLESS:
            samples[row] = ap_codec.decode_lossless(cfg, reader, total, table=table)
        else:
            res = ap_codec.decode_near_lossless(cfg, reader, total, table=table)
            samples[row] = res.samples
            info["windows"][ch] = res.window_starts
            info["groups"][ch] = res.groups
            if res.padded_tail != bool(flags & 1):
                raise FormatError(f"channel {ch} padded-tail flag mismatch")
        info["modes"][ch] = mode
        info["coders"][ch] = coder
    return Recording(samples=samples, rate_hz=rate), info


def encode_lfp(recording, channels=None, config=None):
    """Compress an 8-channel group with the cross-channel engine (C4)."""
    channels = _select_channels(recording, channels)
    if len(channels) != lfp_codec.MAX_GROUP:
        raise ValueError(f"LFP encoding needs exactly {lfp_codec.MAX_GROUP} channels")
    config = config or lfp_codec.CceTrainingConfig()
    if recording.length < config.window_n:
        config = lfp_codec.CceTrainingConfig(
            window_n=max(recording.length, 2), n0=min(config.n0, max(recording.length - 1, 1))
        )
    samples = {ch: recording.channel(ch) for ch in channels}
    chain = lfp_codec.train_chain(samples, config)
    w = BitWriter()
    bits = lfp_codec.cce_encode(samples, chain, w)
    payload = w.getvalue()

    out = bytearray()
    out += _HEADER.pack(
        CONTAINER_MAGIC,
        CONTAINER_VERSION,
        CMD_ENCODE_LFP,
        recording.rate_hz,
        recording.length,
        len(channels),
    )
    out += bytes(channels)
    cw = BitWriter()
    lfp_codec.serialize_chain(chain, cw)
    out += cw.getvalue()
    out += struct.pack("<H", config.window_n)
    out += struct.pack("<I", w.bit_length)
    out += payload
    return bytes(out), {"chain": chain, "payload_bits": bits}


def decode_lfp(data):
    """Decode an NCS1 LFP container; returns (Recording, info dict)."""
    magic, version, cmd, rate, total, n_ch = _unpack_header(data)
    if cmd != CMD_ENCODE_LFP:
        raise FormatError(f"container command {cmd} is not an LFP stream", offset=5)
    pos = _HEADER.size
    channels = list(data[pos : pos + n_ch])
    pos += n_ch
    chain_bytes = 1 + (n_ch - 1) * 4
    chain = lfp_codec.deserialize_chain(BitReader(data[pos : pos + chain_bytes]), n_ch)
    pos += chain_bytes
    (window_n,) = struct.unpack_from("<H", data, pos)
    pos += 2
    (payload_bits,) = struct.unpack_from("<I", data, pos)
    pos += 4
    nbytes = (payload_bits + 7) // 8
    if pos + nbytes > len(data):
        raise FormatError("truncated LFP payload", offset=pos)
    reader = BitReader(data[pos : pos + nbytes], nbits=payload_bits)
    decoded = lfp_codec.cce_decode(reader, chain, total)
    samples = np.stack([decoded[ch] for ch in channels])
    return Recording(samples=samples, rate_hz=rate), {"chain": chain, "window_n": window_n}


def _unpack_header(data):
    if len(data) < _HEADER.size:
        raise FormatError("container shorter than its header", offset=len(data))
    magic, version, cmd, rate, total, n_ch = _HEADER.unpack_from(data)
    if magic != CONTAINER_MAGIC:
        raise FormatError(f"bad container magic {magic!r}", offset=0)
    if version != CONTAINER_VERSION:
        raise FormatError(f"unsupported container version {version}", offset=4)
    return magic, version, cmd, rate, total, n_ch


# --- store / debug mode (C1) -------------------------------------------------

def record_to_store(recording, store_dir):
    """C1: place a recording in the store directory for later processing."""
    store = Path(store_dir)
    store.mkdir(parents=True, exist_ok=True)
    write_nrec(store / "data.nrec", recording)
    meta = {
        "channels": recording.channels,
        "rate_hz": recording.rate_hz,
        "length": recording.length,
        "bytes": int(recording.samples.size * 2),
        "fits_sram_budget": bool(recording.samples.size * 2 <= SRAM_BUDGET_BYTES),
    }
    with open(store / "meta.json", "w") as fh:
        json.dump(meta, fh, indent=2)
    return meta


def load_from_store(store_dir):
    return read_nrec(Path(store_dir) / "data.nrec")


def resolve_input(input_path, debug=False, store_dir=None):
    """Live mode reads the input file; debug mode reads the store instead."""
    if debug:
        if store_dir is None:
            raise ValueError("debug mode requires a store directory")
        return load_from_store(store_dir)
    if input_path is None:
        raise ValueError("an input recording is required")
    return read_nrec(input_path)


# --- raw streaming (C2), FIR (C5/C6), raster (C7), ATE (C8/C9) ---------------

def stream_raw(recording, channels=None):
    """Framed raw samples: per tick, per channel, a (channel u8, i16 LE) frame."""
    channels = _select_channels(recording, channels)
    frames = np.empty((recording.length, len(channels), 3), dtype=np.uint8)
    for col, ch in enumerate(channels):
        frames[:, col, 0] = ch
        le = recording.channel(ch).astype("<i2").view(np.uint8).reshape(-1, 2)
        frames[:, col, 1:] = le
    return frames.tobytes()


def run_fir(recording, coeffs, channels=None, out_shift=12):
    """C5/C6: filter up to 16 channels; returns int16 rows in channel order."""
    channels = _select_channels(recording, channels)
    if len(channels) > BANK_CHANNELS:
        raise ValueError(f"FIR bank processes at most {BANK_CHANNELS} channels")
    bank = FirBank(out_shift=out_shift)
    rows = np.empty((len(channels), recording.length), dtype=np.int16)
    for i, ch in enumerate(channels):
        bank.load_coeffs(i, coeffs[i])
        rows[i] = bank.process(i, recording.channel(ch))
    return rows


def run_raster(recording, config=None):
    """C7: one packet per tick over all 68 raster slots."""
    config = config or DetectorConfig()
    flags = np.zeros((68, recording.length), dtype=np.uint8)
    for ch in range(recording.channels):
        flags[ch], _ = detect_channel(recording.channel(ch), config)
    out = bytearray()
    per_tick = flags.T
    for tick in range(recording.length):
        out += raster_tick(per_tick[tick], tick)
    return bytes(out)


def run_ate_report(recording, config=None):
    """C8: final adaptive-threshold state per channel."""
    config = config or DetectorConfig()
    report = {}
    for ch in range(recording.channels):
        _, state = detect_channel(recording.channel(ch), config)
        thr_neo, thr_amp, ne_q, zc_log, zc_count, zc_pos = state
        report[ch] = {
            "thr_neo": int(thr_neo),
            "thr_amp": int(thr_amp),
            "ne_level": int(ne_q) >> 4,
            "zc_log": int(zc_log),
        }
    return report


def apply_ate_to_config(report, config_path):
    """C9: rewrite per-channel stage-1/stage-2 thresholds in a config file."""
    path = Path(config_path)
    lines = []
    if path.exists():
        with open(path) as fh:
            lines = [
                ln.rstrip("\n")
                for ln in fh
                if not ln.split("=")[0].strip().startswith("ch")
            ]
    for ch in sorted(report):
        lines.append(f"ch{ch}.thr_amp={report[ch]['thr_amp']}")
        lines.append(f"ch{ch}.thr_neo={report[ch]['thr_neo']}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_config(path):
    """key=value text config; later keys win."""
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#") or "=" not in line:
                continue
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


def detector_config_from(options):
    fields = {}
    for key in ("c0", "c1", "amp_mult", "refractory", "verify_window"):
        if key in options:
            fields[key] = int(options[key])
    return DetectorConfig(**fields)


# --- spike sorting flow -------------------------------------------------------

def align_trigger(x, t, back=4, forward=16):
    """Refine a trigger to the positive waveform peak near it.

    The detector stamps the rising-edge confirmation; sorting-quality windows
    want a stable anchor, so the trigger is moved to the maximum sample in a
    small neighbourhood (the 32-sample pre-buffer makes this free in
    hardware). Polarity follows the recording convention (positive peaks).
    """
    lo = max(t - back, 0)
    hi = min(t + forward, len(x))
    return lo + int(np.argmax(x[lo:hi]))


def extract_spike_windows(x, triggers, screen_floor=0.5):
    """Aligned 64-sample windows around triggers, with artifact screening.

    Windows whose peak falls below screen_floor times the median window peak
    are dropped; threshold-grazing noise events otherwise contaminate
    feature training.
    """
    aligned = sorted(set(align_trigger(x, int(t)) for t in triggers))
    aligned = [
        t for t in aligned if t >= SPIKE_PRE and t - SPIKE_PRE + SPIKE_WINDOW <= len(x)
    ]
    if not aligned:
        return [], np.zeros((0, SPIKE_WINDOW), dtype=np.int16)
    windows = np.stack(
        [x[t - SPIKE_PRE : t - SPIKE_PRE + SPIKE_WINDOW] for t in aligned]
    )
    if screen_floor and len(windows) > 2:
        peaks = np.abs(windows).max(axis=1)
        keep = peaks >= screen_floor * np.median(peaks)
        aligned = [t for t, k in zip(aligned, keep) if k]
        windows = windows[keep]
    return aligned, windows


def sort_channel(
    x,
    k,
    method="pca",
    p=3,
    seed=42,
    metric="euclidean",
    detector_config=None,
    triggers=None,
):
    """Detect, window, train features + clusters, classify.

    Returns (times, labels, feature_matrix, model).
    """
    if triggers is None:
        flags, _ = detect_channel(x, detector_config)
        triggers = ap_codec.merge_triggers(flags, len(x))
    times, windows = extract_spike_windows(x, triggers)
    if len(windows) < max(k, p + 1):
        raise ValueError("not enough spike windows to train the sorter")
    if method == "pca":
        fmatrix = pca_train(windows, p)
    elif method == "af":
        fmatrix = af_train(windows, k)
    else:
        raise ValueError(f"unknown feature method {method!r}")
    feats = mac_project_block(fmatrix, windows)
    model = kmeans_train(feats, k, seed=seed, metric=metric)
    labels = classify_block(model, feats)
    return times, labels, fmatrix, model


# --- benchmarks ---------------------------------------------------------------

@dataclass
class SsrRow:
    dataset: str
    mode: str
    coder: str
    ssr: float
    verified: bool
    detail: str = ""


def _verify_lossless(recording, decoded):
    return np.array_equal(recording.samples, decoded.samples)


def _verify_near_lossless(recording, decoded, info):
    for row, ch in enumerate(info["channels"]):
        x = recording.channel(ch)
        d = decoded.samples[row]
        mask = np.zeros(len(x), dtype=bool)
        for start in info["windows"][ch]:
            end = min(start + SPIKE_WINDOW, len(x))
            if not np.array_equal(d[start:end], x[start:end]):
                return False
            mask[start:end] = True
        if np.any(d[~mask] != 0):
            return False
    return True


def bench_ssr(
    datasets,
    modes=(ap_codec.MODE_LOSSLESS, ap_codec.MODE_NEAR_LOSSLESS),
    coders=(ap_codec.CODER_AC, ap_codec.CODER_GC),
    detections=None,
):
    """SSR table over datasets; every row is decode-verified before reporting.

    datasets is a list of (name, Recording) or (name, path) pairs;
    detections optionally maps name -> {channel: trigger times}.
    """
    rows = []
    for name, rec in datasets:
        if not isinstance(rec, Recording):
            rec = read_nrec(rec)
        base = original_bits(rec)
        for mode in modes:
            for coder in coders:
                det = detections.get(name) if detections else None
                data, stats = encode_ap(rec, mode=mode, coder=coder, detections=det)
                try:
                    decoded, info = decode_ap(data)
                    if mode == ap_codec.MODE_LOSSLESS:
                        ok = _verify_lossless(rec, decoded)
                    else:
                        ok = _verify_near_lossless(rec, decoded, info)
                except Exception:
                    ok = False
                value = ssr(base, 8 * len(data))
                detail = ""
                if mode == ap_codec.MODE_NEAR_LOSSLESS:
                    spikes = sum(len(v) for v in stats["windows"].values())
                    rate = spikes / rec.duration_s / rec.channels
                    detail = f"{rate:.1f} spikes/s/ch"
                rows.append(
                    SsrRow(
                        dataset=name,
                        mode=mode,
                        coder=coder,
                        ssr=value if ok else float("nan"),
                        verified=ok,
                        detail=detail,
                    )
                )
    return rows


def bench_lfp_ssr(recording, config=None):
    """CCE SSR with decode verification, plus the per-channel GC baseline."""
    from .decorrelate import dpcm2_forward_block, zigzag_block
    from .entropy import make_rice_state

    channels = list(range(recording.channels))[: lfp_codec.MAX_GROUP]
    data, _ = encode_lfp(recording, channels=channels, config=config)
    decoded, _ = decode_lfp(data)
    ok = np.array_equal(decoded.samples, recording.samples[channels])
    base = 9 * recording.length * len(channels)
    cce = ssr(base, 8 * len(data)) if ok else float("nan")
    baseline_bits = 0
    for ch in channels:
        w = BitWriter()
        rice = make_rice_state()
        rice.encode_block(
            zigzag_block(dpcm2_forward_block(recording.channel(ch))), w
        )
        baseline_bits += w.bit_length
    return {
        "cce_ssr": cce,
        "gc_baseline_ssr": ssr(base, baseline_bits),
        "verified": ok,
    }


def bench_accuracy(datasets, method="pca", p=3, k=None, seed=42, metric="euclidean"):
    """Detection + sorting accuracy per dataset; returns rows and the mean.

    datasets is a list of (name, nrec_path, gt_path).
    """
    rows = []
    for name, nrec_path, gt_path in datasets:
        rec = read_nrec(nrec_path) if not isinstance(nrec_path, Recording) else nrec_path
        gt_times, gt_classes = read_ground_truth(gt_path)
        n_classes = int(gt_classes.max()) + 1
        times, labels, _, _ = sort_channel(
            rec.channel(0), k=k or n_classes, method=method, p=p, seed=seed, metric=metric
        )
        res = accuracy_eval(times, labels, gt_times, gt_classes)
        rows.append(
            {
                "dataset": name,
                "accuracy": res.accuracy,
                "matched": res.matched,
                "spikes": len(gt_times),
            }
        )
    mean = float(np.mean([r["accuracy"] for r in rows])) if rows else float("nan")
    return rows, mean
