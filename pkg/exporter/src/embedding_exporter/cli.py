"""Command-line entry: ``embedding-exporter export --model <id> --dataset <id> --split <name> --out <dir>``."""

from __future__ import annotations

import argparse
import sys

from .exporter import ExportError, export


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embedding-exporter",
        description="Export token embeddings and dataset token streams "
                    "into the analysis toolkit's file formats",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    p = sub.add_parser("export", help="run one extraction")
    p.add_argument("--model", required=True, help="model hub id or local directory")
    p.add_argument("--dataset", required=True, help="dataset hub id or local JSONL file")
    p.add_argument("--split", default="test")
    p.add_argument("--out", required=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        manifest = export(args.model, args.dataset, args.split, args.out)
    except ExportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(
        f"exported {manifest.rows}x{manifest.cols} embeddings, "
        f"{manifest.n_tokens} tokens over {manifest.n_prompts} prompts -> {args.out}"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
