"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 capacity error, 3 I/O or image
format error, 4 key or verification error.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

from . import bench as bench_mod
from .errors import CapacityError, DimensionError, ImageFormatError, KeyFormatError, MessageError
from .metrics import CLASSIC_PEAK_SQ, DEFAULT_PEAK_SQ, quality_report
from .pipeline import METHODS, EdgeParams, capacity_bits, embed_message, extract_message, select_pairs
from .raster import ChannelId, get_channel, load_image, save_image
from .region import qualifying_pairs, read_key, write_key

EXIT_OK, EXIT_USAGE, EXIT_CAPACITY, EXIT_IO, EXIT_KEY = range(5)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 1 << 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _odd(text: str) -> int:
    value = int(text)
    if value < 3 or value % 2 == 0:
        raise argparse.ArgumentTypeError("ksize must be odd and at least 3")
    return value


def _add_edge_flags(p, with_method: bool = True):
    if with_method:
        p.add_argument("--method", choices=METHODS, default="threshold")
    p.add_argument("--sigma", type=float, default=1.4)
    p.add_argument("--ksize", type=_odd, default=5)
    p.add_argument("--high-frac", type=float, default=0.20)
    p.add_argument("--low-ratio", type=float, default=0.40)
    p.add_argument("--magnitude", choices=("sqrt", "abs"), default="sqrt",
                   help="Sobel magnitude form")


def _add_metric_flags(p):
    p.add_argument("--psnr-denominator", choices=("paper", "classic"), default="paper",
                   help="paper: 256*256 numerator (default); classic: 255*255")
    p.add_argument("--channels", choices=("single", "all"), default="single")


def _params(args) -> EdgeParams:
    return EdgeParams(args.magnitude, args.sigma, args.ksize, args.high_frac, args.low_ratio)


def _peak(args) -> int:
    return DEFAULT_PEAK_SQ if args.psnr_denominator == "paper" else CLASSIC_PEAK_SQ


def _fmt_psnr(value: float) -> str:
    return "inf" if math.isinf(value) else f"{value:.6f}"


def _report(cover, stego, channel: ChannelId, args):
    if args.channels == "all":
        return quality_report(cover.pixels, stego.pixels, "all", _peak(args))
    return quality_report(get_channel(cover, channel), get_channel(stego, channel),
                          channel.name, _peak(args))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="threshsteg", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("embed", help="hide a message in a cover image")
    p.add_argument("--cover", required=True)
    msg = p.add_mutually_exclusive_group(required=True)
    msg.add_argument("--message")
    msg.add_argument("--message-file")
    p.add_argument("--stego", required=True, help="output image (.png or .bmp)")
    p.add_argument("--key", required=True, help="output key file")
    p.add_argument("--channel", choices=("r", "g", "b"), default="r")
    p.add_argument("--seed", type=_u64, default=0)
    _add_edge_flags(p)
    _add_metric_flags(p)

    p = sub.add_parser("extract", help="recover a message with its key")
    p.add_argument("--stego", required=True)
    p.add_argument("--key", required=True)
    p.add_argument("--out", help="write the message here instead of stdout")

    p = sub.add_parser("capacity", help="threshold and pair count a payload would need")
    p.add_argument("--cover", required=True)
    p.add_argument("--bits", type=int, required=True, help="payload size in bits")
    p.add_argument("--channel", choices=("r", "g", "b"), default="r")
    _add_edge_flags(p)

    p = sub.add_parser("metrics", help="MSE and PSNR between two images")
    p.add_argument("--cover", required=True)
    p.add_argument("--stego", required=True)
    p.add_argument("--channel", choices=("r", "g", "b"), default="r")
    _add_metric_flags(p)

    p = sub.add_parser("bench", help="benchmark a directory of images")
    p.add_argument("--corpus", required=True)
    p.add_argument("--payloads", default="400,600,900,1200",
                   help="comma-separated payload sizes in bits")
    p.add_argument("--channel", choices=("r", "g", "b"), default="r")
    p.add_argument("--seed", type=_u64, default=0)
    p.add_argument("--out", required=True, help="report directory")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--timings", action="store_true",
                   help="record wall-clock times (makes reruns differ)")
    # every method is benchmarked, so only the detector parameters apply
    _add_edge_flags(p, with_method=False)
    return parser


def cmd_embed(args) -> int:
    cover = load_image(args.cover)
    if args.message is not None:
        message = args.message.encode("utf-8")
    else:
        message = Path(args.message_file).read_bytes()
    if not message:
        raise UsageError("message is empty")
    channel = ChannelId.parse(args.channel)
    result = embed_message(cover, message, channel, args.method, args.seed, _params(args))
    save_image(result.stego, args.stego)
    write_key(result.key, args.key)
    rep = _report(cover, result.stego, channel, args)
    label = "threshold" if args.method == "threshold" else f"{args.method}_param"
    print(f"{label}: {result.parameter:g}")
    print(f"pairs: {len(result.key.pairs)}")
    print(f"bits: {result.key.message_bit_length}")
    print(f"mse: {rep.mse:.6f}")
    print(f"psnr: {_fmt_psnr(rep.psnr)}")
    return EXIT_OK


def cmd_extract(args) -> int:
    key = read_key(args.key)
    stego = load_image(args.stego)
    try:
        message = extract_message(stego, key)
    except DimensionError as exc:
        raise KeyFormatError(str(exc)) from exc
    if args.out:
        Path(args.out).write_bytes(message)
    else:
        sys.stdout.buffer.write(message)
        sys.stdout.flush()
    return EXIT_OK


def cmd_capacity(args) -> int:
    if args.bits < 1:
        raise UsageError("--bits must be at least 1")
    cover = load_image(args.cover)
    values = get_channel(cover, ChannelId.parse(args.channel))
    params = _params(args)
    sel = select_pairs(values, args.bits, args.method, params)
    if args.method == "threshold":
        available = len(qualifying_pairs(values, int(sel.parameter)))
        print(f"threshold: {int(sel.parameter)}")
    else:
        available = None
        print(f"{args.method}_param: {sel.parameter:g}")
    print(f"pairs_used: {len(sel.pairs)}")
    if available is not None:
        print(f"pairs_qualifying: {available}")
    print(f"max_bits: {capacity_bits(values, args.method, params)}")
    return EXIT_OK


def cmd_metrics(args) -> int:
    cover = load_image(args.cover)
    stego = load_image(args.stego)
    if (cover.width, cover.height) != (stego.width, stego.height):
        raise UsageError(
            f"image sizes differ: {cover.width}x{cover.height} vs {stego.width}x{stego.height}"
        )
    rep = _report(cover, stego, ChannelId.parse(args.channel), args)
    print(f"mse: {rep.mse:.6f}")
    print(f"psnr: {_fmt_psnr(rep.psnr)}")
    return EXIT_OK


def cmd_bench(args) -> int:
    try:
        payloads = [int(p) for p in args.payloads.split(",") if p.strip()]
    except ValueError:
        raise UsageError(f"bad payload list {args.payloads!r}") from None
    if not payloads or min(payloads) < 1:
        raise UsageError("payloads must be positive integers")
    try:
        summary = bench_mod.run_bench(args.corpus, payloads, args.channel, args.seed, args.out,
                                      params=_params(args), workers=args.workers,
                                      timings=args.timings)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    for row in summary.rows:
        extra = ""
        if row.method == "threshold" and row.mse_vs:
            extra = "  " + " ".join(
                f"mse_vs_{b}={row.mse_vs[b]:+.3f}% psnr_vs_{b}={row.psnr_vs[b]:+.4f}%"
                for b in row.mse_vs
            )
        print(f"{row.payload_bits:>6} {row.method:<9} mse={row.mean_mse:.6f} "
              f"psnr={_fmt_psnr(row.mean_psnr)}{extra}")
    if summary.skipped:
        print(f"skipped {len(summary.skipped)} cells for lack of capacity", file=sys.stderr)
    return EXIT_OK


COMMANDS = {
    "embed": cmd_embed, "extract": cmd_extract, "capacity": cmd_capacity,
    "metrics": cmd_metrics, "bench": cmd_bench,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (KeyFormatError, MessageError) as exc:
        print(f"key error: {exc}", file=sys.stderr)
        return EXIT_KEY
    except (ImageFormatError, OSError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
