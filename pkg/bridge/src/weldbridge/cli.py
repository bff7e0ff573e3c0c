"""Command-line entry point mirroring BridgeConfig."""

import argparse
import logging
import sys

from .config import DEFAULT_CHECKPOINT, WINDOW_FRAMES, BridgeConfig
from .errors import BridgeError, DecodeError
from .extract import extract_embeddings


def build_parser():
    parser = argparse.ArgumentParser(
        prog="weldbridge",
        description="extract per-frame video embeddings in the shared "
                    "embedding file format")
    parser.add_argument("--video", required=True, metavar="FILE")
    parser.add_argument("--output", required=True, metavar="FILE")
    parser.add_argument("--checkpoint", default=DEFAULT_CHECKPOINT,
                        help="backbone checkpoint identifier, a TorchScript "
                             "path, or projection:<seed> (default: "
                             "%(default)s)")
    parser.add_argument("--window-frames", dest="window_frames", type=int,
                        default=WINDOW_FRAMES)
    parser.add_argument("--stride", type=int, default=1)
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--sample-id", dest="sample_id", default="",
                        help="sample id stored in the header (default: the "
                             "video filename stem)")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(stream=sys.stderr,
                        level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = BridgeConfig(
            video=args.video, output=args.output, checkpoint=args.checkpoint,
            window_frames=args.window_frames, stride=args.stride,
            device=args.device, sample_id=args.sample_id)
        result = extract_embeddings(config)
        print(f"wrote {result.n_frames} frame vectors (dim {result.dim}, "
              f"fps {result.fps:g}) to {result.path}")
    except BridgeError as exc:
        print(f"weldbridge: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"weldbridge: {exc}", file=sys.stderr)
        return DecodeError.exit_code
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
