"""CLI: extract pretrained-classifier features into a feature container."""

import argparse
import json
import sys

from .registry import REGISTRY


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="latentprobe-extract",
        description="Export penultimate-layer classifier features into a "
        "latentprobe feature container.",
    )
    parser.add_argument("--model", required=True, choices=sorted(REGISTRY))
    parser.add_argument("--images", required=True, help="image directory; subdirs = classes")
    parser.add_argument("--out", required=True, help="output container path")
    parser.add_argument("--limit", type=int, default=None, help="cap on rows (default: all)")
    parser.add_argument("--batch-size", type=int, default=8)
    parser.add_argument("--device", default="cpu")
    parser.add_argument(
        "--pretrained",
        action="store_true",
        help="load published weights (needs network/cache); default is random init",
    )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    from .extract import extract  # deferred: torch import is slow

    try:
        summary = extract(
            args.model,
            args.images,
            args.out,
            limit=args.limit,
            batch_size=args.batch_size,
            device=args.device,
            pretrained=args.pretrained,
        )
    except Exception as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1
    print(json.dumps(summary, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
