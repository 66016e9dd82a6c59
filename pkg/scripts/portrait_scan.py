"""Classify n=3 quartic phase portraits over a grid on the hemisphere of (e1, e2, e3).

    python3 scripts/portrait_scan.py --resolution 200 --workers 4
"""

import argparse
from collections import Counter
from pathlib import Path

from sphere_reduction import io as sio
from sphere_reduction.topology import portrait_scan


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--resolution", type=int, default=200)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", type=Path, default=Path("results/portrait_scan"))
    args = ap.parse_args()

    rows = portrait_scan(args.resolution, args.workers)
    counts = Counter(t for *_, t in rows)
    sio.atomic_write(args.out / "scan.csv", sio.scan_csv(rows))
    sio.write_json(args.out / "summary.json", {"resolution": args.resolution, "counts": dict(counts)})
    for t, c in sorted(counts.items()):
        print(f"{t:>9s} {c:7d}  ({c / len(rows):.3f})")


if __name__ == "__main__":
    main()
