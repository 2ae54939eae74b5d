"""Command-line interface.

One subcommand per modeled hardware command plus benchmark and utility
commands. Shared flags: --input (recording or container), --debug with
--store (read the store instead of the live input), --channels, --seed,
--config (key=value detector settings).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import ap_codec, pipeline, sort, synth
from .core import Recording, original_bits, read_nrec, ssr, write_nrec
from .errors import NeurosigError
from .fir import load_coeff_file
from .kernels import BACKEND


def _parse_channels(text):
    if text is None:
        return None
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            lo, hi = part.split("-")
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return out


def _common_flags(p, needs_input=True):
    p.add_argument("--input", help="input .nrec recording", default=None)
    p.add_argument("--debug", action="store_true", help="read from the store instead of --input")
    p.add_argument("--store", default="store", help="store directory (C1 output / debug input)")
    p.add_argument("--channels", default=None, help="channel list, e.g. 0,1,4-7")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--config", default=None, help="key=value detector config file")


def _detector_config(args):
    if args.config:
        return pipeline.detector_config_from(pipeline.read_config(args.config))
    return None


def _load(args):
    return pipeline.resolve_input(args.input, debug=args.debug, store_dir=args.store)


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="neurosig",
        description="Neural-recording DSP chain: compression, detection, FIR, sorting",
    )
    parser.add_argument("--version", action="version", version=f"neurosig (kernels: {BACKEND})")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("info", help="validate a .nrec file and print its header")
    p.add_argument("path")

    p = subs.add_parser("record", help="C1: ingest a recording into the store")
    _common_flags(p)

    p = subs.add_parser("stream-raw", help="C2: emit framed raw samples")
    _common_flags(p)
    p.add_argument("--output", required=True)

    p = subs.add_parser("encode-ap", help="C3: AP compression to an NCS1 container")
    _common_flags(p)
    p.add_argument("--output", required=True)
    p.add_argument("--mode", choices=["lossless", "near_lossless"], default="lossless")
    p.add_argument("--coder", choices=["ac", "gc", "alternate"], default="gc")
    p.add_argument("--chunk-mode", type=int, choices=[2, 3], default=2)
    p.add_argument("--gt", default=None, help="ground-truth sidecar to use as triggers")

    p = subs.add_parser("decode-ap", help="decode an NCS1 AP container to .nrec")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)

    p = subs.add_parser("encode-lfp", help="C4: 8-channel cross-channel compression")
    _common_flags(p)
    p.add_argument("--output", required=True)
    p.add_argument("--window-n", type=int, default=2000)

    p = subs.add_parser("decode-lfp", help="decode an NCS1 LFP container to .nrec")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)

    p = subs.add_parser("fir", help="C5/C6: run the 16-channel FIR bank")
    _common_flags(p)
    p.add_argument("--coeffs", required=True, help="16x16 integer coefficient file")
    p.add_argument("--output", default=None, help="framed i16 output (C5)")
    p.add_argument("--to-store", action="store_true", help="store filtered rows (C6)")
    p.add_argument("--out-shift", type=int, default=12)

    p = subs.add_parser("raster", help="C7: spike-raster packet stream")
    _common_flags(p)
    p.add_argument("--output", required=True)

    p = subs.add_parser("ate", help="C8/C9: adaptive-threshold report / apply")
    _common_flags(p)
    p.add_argument("--apply", default=None, help="config file to rewrite with thresholds (C9)")

    p = subs.add_parser("sort-train", help="train features + clusters, save a model")
    _common_flags(p)
    p.add_argument("--model", required=True)
    p.add_argument("--method", choices=["pca", "af"], default="pca")
    p.add_argument("--p", type=int, default=3)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--metric", choices=["euclidean", "mahalanobis"], default="euclidean")
    p.add_argument("--gt", default=None, help="use ground-truth times as triggers")

    p = subs.add_parser("sort-infer", help="classify spikes with a trained model")
    _common_flags(p)
    p.add_argument("--model", required=True)
    p.add_argument("--output", default=None, help="labels file (time label per line)")
    p.add_argument("--gt", default=None, help="score against this sidecar")

    p = subs.add_parser("bench-ssr", help="SSR table with decode verification")
    p.add_argument("datasets", nargs="+", help=".nrec files")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--json", action="store_true")

    p = subs.add_parser("bench-accuracy", help="sorting accuracy over datasets with .gt sidecars")
    p.add_argument("datasets", nargs="+", help=".nrec files (sidecar = same name with .gt)")
    p.add_argument("--method", choices=["pca", "af"], default="pca")
    p.add_argument("--p", type=int, default=3)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--json", action="store_true")

    p = subs.add_parser("synth", help="generate the synthetic benchmark suite")
    p.add_argument("--outdir", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--duration", type=float, default=60.0)

    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except NeurosigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _dispatch(args):
    cmd = args.command
    if cmd == "info":
        rec = read_nrec(args.path)
        print(
            f"{args.path}: channels={rec.channels} rate_hz={rec.rate_hz} "
            f"length={rec.length} duration={rec.duration_s:.2f}s"
        )
        return 0

    if cmd == "record":
        rec = read_nrec(args.input)
        meta = pipeline.record_to_store(rec, args.store)
        budget = "fits" if meta["fits_sram_budget"] else "exceeds"
        print(f"stored {meta['bytes']} bytes ({budget} the 128 KiB SRAM budget)")
        return 0

    if cmd == "stream-raw":
        rec = _load(args)
        data = pipeline.stream_raw(rec, _parse_channels(args.channels))
        Path(args.output).write_bytes(data)
        print(f"wrote {len(data)} bytes")
        return 0

    if cmd == "encode-ap":
        rec = _load(args)
        detections = None
        if args.gt:
            times, _ = synth.read_ground_truth(args.gt)
            detections = {ch: times for ch in range(rec.channels)}
        data, stats = pipeline.encode_ap(
            rec,
            channels=_parse_channels(args.channels),
            mode=args.mode,
            coder=args.coder,
            chunk_mode=args.chunk_mode,
            detections=detections,
            detector_config=_detector_config(args),
        )
        Path(args.output).write_bytes(data)
        value = ssr(original_bits(rec), 8 * len(data))
        print(f"wrote {len(data)} bytes, SSR={value:.4f}")
        return 0

    if cmd == "decode-ap":
        rec, _ = pipeline.decode_ap(Path(args.input).read_bytes())
        write_nrec(args.output, rec)
        print(f"decoded {rec.channels} channels x {rec.length} samples")
        return 0

    if cmd == "encode-lfp":
        rec = _load(args)
        from .lfp_codec import CceTrainingConfig

        data, _ = pipeline.encode_lfp(
            rec,
            channels=_parse_channels(args.channels),
            config=CceTrainingConfig(window_n=args.window_n),
        )
        Path(args.output).write_bytes(data)
        value = ssr(original_bits(rec), 8 * len(data))
        print(f"wrote {len(data)} bytes, SSR={value:.4f}")
        return 0

    if cmd == "decode-lfp":
        rec, _ = pipeline.decode_lfp(Path(args.input).read_bytes())
        write_nrec(args.output, rec)
        print(f"decoded {rec.channels} channels x {rec.length} samples")
        return 0

    if cmd == "fir":
        rec = _load(args)
        coeffs = load_coeff_file(args.coeffs)
        rows = pipeline.run_fir(
            rec, coeffs, _parse_channels(args.channels), out_shift=args.out_shift
        )
        if args.to_store:
            out = Path(args.store)
            out.mkdir(parents=True, exist_ok=True)
            np.save(out / "fir_rows.npy", rows)
            print(f"stored filtered rows {rows.shape} in {out}")
        if args.output:
            Path(args.output).write_bytes(rows.astype("<i2").tobytes())
            print(f"wrote {rows.size * 2} bytes")
        return 0

    if cmd == "raster":
        rec = _load(args)
        data = pipeline.run_raster(rec, _detector_config(args))
        Path(args.output).write_bytes(data)
        print(f"wrote {len(data)} bytes ({rec.length} packets)")
        return 0

    if cmd == "ate":
        rec = _load(args)
        report = pipeline.run_ate_report(rec, _detector_config(args))
        print(json.dumps(report, indent=2))
        if args.apply:
            pipeline.apply_ate_to_config(report, args.apply)
            print(f"applied thresholds to {args.apply}")
        return 0

    if cmd == "sort-train":
        rec = _load(args)
        triggers = None
        if args.gt:
            triggers, _ = synth.read_ground_truth(args.gt)
        times, labels, fmatrix, model = pipeline.sort_channel(
            rec.channel(0),
            k=args.k,
            method=args.method,
            p=args.p,
            seed=args.seed,
            metric=args.metric,
            detector_config=_detector_config(args),
            triggers=triggers,
        )
        sort.save_model(args.model, fmatrix, model)
        print(f"trained on {len(times)} spikes, model written to {args.model}")
        return 0

    if cmd == "sort-infer":
        rec = _load(args)
        fmatrix, model = sort.load_model(args.model)
        flags, _ = pipeline.detect_channel(rec.channel(0), _detector_config(args))
        triggers = ap_codec.merge_triggers(flags, rec.length)
        times, windows = pipeline.extract_spike_windows(rec.channel(0), triggers)
        feats = sort.mac_project_block(fmatrix, windows)
        labels = sort.classify_block(model, feats)
        if args.output:
            with open(args.output, "w") as fh:
                for t, lb in zip(times, labels.tolist()):
                    fh.write(f"{t} {lb}\n")
        print(f"classified {len(times)} spikes")
        if args.gt:
            gt_times, gt_classes = synth.read_ground_truth(args.gt)
            res = sort.accuracy_eval(times, labels, gt_times, gt_classes)
            print(f"accuracy={res.accuracy:.4f} over {res.matched} matched spikes")
        return 0

    if cmd == "bench-ssr":
        datasets = [(Path(p).stem, p) for p in args.datasets]
        rows = pipeline.bench_ssr(datasets)
        failed = False
        if args.json:
            print(json.dumps([row.__dict__ for row in rows], indent=2))
        else:
            print(f"{'dataset':<14} {'mode':<14} {'coder':<6} {'SSR':>8} verify")
            for row in rows:
                status = "PASS" if row.verified else "FAILED"
                shown = f"{row.ssr:.4f}" if row.verified else "-"
                print(f"{row.dataset:<14} {row.mode:<14} {row.coder:<6} {shown:>8} {status} {row.detail}")
        failed = any(not row.verified for row in rows)
        return 1 if failed else 0

    if cmd == "bench-accuracy":
        datasets = []
        for path in args.datasets:
            gt = Path(path).with_suffix(".gt")
            datasets.append((Path(path).stem, path, gt))
        rows, mean = pipeline.bench_accuracy(
            datasets, method=args.method, p=args.p, k=args.k, seed=args.seed
        )
        if args.json:
            print(json.dumps({"rows": rows, "mean": mean}, indent=2))
        else:
            for row in rows:
                print(f"{row['dataset']:<14} accuracy={row['accuracy']:.4f} ({row['matched']} matched)")
            print(f"mean accuracy={mean:.4f}")
        return 0

    if cmd == "synth":
        manifest = synth.build_benchmark_suite(args.outdir, seed=args.seed, duration_s=args.duration)
        print(json.dumps(manifest, indent=2))
        return 0

    raise AssertionError(f"unhandled command {cmd}")


if __name__ == "__main__":
    sys.exit(main())
