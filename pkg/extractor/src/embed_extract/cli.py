"""Command line for the embedding extractor.

Exit codes: 0 success, 1 encoder load failure or bad input.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .extract import extract


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="embed-extract",
        description="encode node texts into a binary embedding file",
    )
    p.add_argument("--nodes", required=True,
                   help="text file, one node surface text per line in id order")
    p.add_argument("--encoder", default="pseudo",
                   help="'pseudo' or a pretrained model id")
    p.add_argument("--revision", default="main")
    p.add_argument("--pooling", choices=("cls", "mean"), default="mean")
    p.add_argument("--dim", type=int, default=None,
                   help="output dimension (required for the pseudo encoder)")
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--out", required=True)
    return p


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        manifest = extract(
            args.nodes,
            encoder_id=args.encoder,
            pooling=args.pooling,
            batch_size=args.batch_size,
            dim=args.dim,
            out_path=args.out,
            revision=args.revision,
        )
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"{manifest['node_count']} x {manifest['dim']} -> {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
