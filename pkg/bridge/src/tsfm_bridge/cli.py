"""Command-line entry point.

    tsfm-bridge serve --model chronos --variant small --device cuda
    tsfm-bridge selftest --model mock

serve speaks the JSON-lines protocol on stdio and is meant to sit behind a
consumer's exec-style oracle selector; selftest loads the model, runs one
canned request, and reports latency.
"""

from __future__ import annotations

import argparse
import sys

from .config import POINT_ESTIMATES, SUPPORTED_MODELS, BridgeConfig, BridgeError
from .server import selftest, serve

__all__ = ["build_parser", "main"]


def _add_model_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--model", required=True, choices=SUPPORTED_MODELS, help="model family"
    )
    parser.add_argument(
        "--variant", default="", help="size or checkpoint tag within the family"
    )
    parser.add_argument("--device", default="cpu", help="inference device token")
    parser.add_argument(
        "--point",
        default="median",
        choices=POINT_ESTIMATES,
        help="reduction of sampled paths to one forecast",
    )
    parser.add_argument(
        "--max-context",
        type=int,
        default=2048,
        dest="max_context",
        help="keep at most this many most recent history values",
    )
    parser.add_argument(
        "--samples", type=int, default=20, help="sample paths per request"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tsfm-bridge",
        description="Serve a pretrained time-series model over stdio JSON lines.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_serve = sub.add_parser("serve", help="answer requests on stdin until EOF")
    _add_model_flags(p_serve)

    p_self = sub.add_parser("selftest", help="run one canned request and exit")
    _add_model_flags(p_self)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = BridgeConfig(
            model_name=args.model,
            variant=args.variant,
            device=args.device,
            point_estimate=args.point,
            max_context=args.max_context,
            samples=args.samples,
        )
    except BridgeError as exc:
        print(f"tsfm-bridge: {exc}", file=sys.stderr)
        return 2
    if args.command == "serve":
        return serve(config)
    return selftest(config)


if __name__ == "__main__":
    sys.exit(main())
