"""CLI wrapper: `embedding-exporter export --checkpoint <id> --out table.tsv`."""

from __future__ import annotations

import argparse
import sys

from .export import export_table


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="embedding-exporter")
    sub = parser.add_subparsers(dest="command", required=True)
    export = sub.add_parser("export", help="write the k-mer embedding TSV and manifest")
    export.add_argument("--checkpoint", required=True, help="checkpoint directory or hub id")
    export.add_argument("--out", required=True, help="output TSV path")
    export.add_argument("--k", type=int, default=6, help="k-mer length (default 6)")
    export.add_argument("--manifest", help="manifest path (default: manifest.json beside --out)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        manifest = export_table(
            checkpoint=args.checkpoint,
            out_path=args.out,
            k=args.k,
            manifest_path=args.manifest,
        )
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(
        f"wrote {manifest.count} rows (dim {manifest.dim}, k={manifest.k}) "
        f"sha256 {manifest.sha256[:12]}..."
    )
    if manifest.missing:
        print(f"{len(manifest.missing)} canonical k-mers absent from the vocabulary")
    return 0


if __name__ == "__main__":
    sys.exit(main())
