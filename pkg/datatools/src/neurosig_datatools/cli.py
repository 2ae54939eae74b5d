"""Converter command line: convert-quiroga and convert-lfp."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .lfp import convert_lfp
from .quiroga import convert_quiroga


def _channels(text):
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


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="neurosig-data",
        description="Convert public MAT/binary datasets to .nrec (+ ground-truth sidecar)",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("convert-quiroga", help="single-channel spike dataset -> .nrec + .gt")
    p.add_argument("input", help="MAT file with data / spike_times / spike_class")
    p.add_argument("--output", default=None, help=".nrec path (default: input stem)")
    p.add_argument("--gt", default=None, help="sidecar path (default: output with .gt)")
    p.add_argument("--scale", type=float, default=None, help="quantization scale (default max|x|/255)")
    p.add_argument("--rate", type=int, default=None, help="override the sampling rate")
    p.add_argument("--times-unit", choices=["samples", "ms", "s"], default="samples")

    p = subs.add_parser("convert-lfp", help="multichannel recording -> .nrec")
    p.add_argument("input", help="MAT file or flat int16 .dat/.bin/.lfp")
    p.add_argument("--output", default=None)
    p.add_argument("--channels", default=None, help="channel list, e.g. 0,1,4-7")
    p.add_argument("--scale", type=float, default=None)
    p.add_argument("--rate", type=int, default=20_000)
    p.add_argument("--nch", type=int, default=None, help="channel count for binary input")
    p.add_argument("--var", default=None, help="MAT variable holding the signal matrix")

    args = parser.parse_args(argv)
    src = Path(args.input)
    out = Path(args.output) if args.output else src.with_suffix(".nrec")
    try:
        if args.command == "convert-quiroga":
            gt = Path(args.gt) if args.gt else out.with_suffix(".gt")
            summary = convert_quiroga(
                src, out, gt,
                scale=args.scale, rate_hz=args.rate, times_unit=args.times_unit,
            )
            summary["nrec"] = str(out)
            summary["gt"] = str(gt)
        else:
            summary = convert_lfp(
                src, out,
                channels=_channels(args.channels), scale=args.scale,
                rate_hz=args.rate, n_channels=args.nch, var=args.var,
            )
            summary["nrec"] = str(out)
    except (KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(json.dumps(summary, indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())
