#!/usr/bin/env python3
"""Convert a point file to the pairs format the CLI consumes.

Accepts dense CSV (one row per point) or triplets (row col val lines);
writes sparse index:value lines, dropping zeros. A .gz suffix on either
side is handled transparently.

    python3 scripts/convert_to_pairs.py dense.csv points.txt
    python3 scripts/convert_to_pairs.py --format triplets --dim 1000 t.txt p.txt.gz
"""

import argparse
import sys

from kmcoreset import ParseError, StreamFormat, read_points, write_points


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("src", help="input file (dense CSV or triplets; gzip ok)")
    ap.add_argument("dst", help="output pairs file (.gz compresses)")
    ap.add_argument("--format", default="dense_csv",
                    choices=["dense_csv", "triplets"])
    ap.add_argument("--dim", type=int, default=None,
                    help="dimension (required for triplets, inferred for CSV)")
    ap.add_argument("--index-base", type=int, default=0, choices=[0, 1],
                    help="index origin of the input file")
    args = ap.parse_args()

    try:
        fmt = StreamFormat(args.format, dim=args.dim, index_base=args.index_base)
    except ValueError as exc:
        ap.error(str(exc))
    try:
        count = 0

        def counted():
            nonlocal count
            for item in read_points(args.src, fmt):
                count += 1
                yield item

        write_points(counted(), args.dst)
    except (OSError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {count} points to {args.dst}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
