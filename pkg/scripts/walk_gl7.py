"""Run Voronoi's walk in rank 7 until a class count or a time budget is hit.

Usage: python scripts/walk_gl7.py [--classes 10] [--budget 3600] [--out forms_7.txt]

The full rank-7 classification has 33 classes; this only exercises the
machinery and writes whatever was found.
"""

import argparse
import logging
import time

from voronoi_complex.forms import minimal_vectors, write_forms
from voronoi_complex.voronoi import classify_perfect_forms


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--classes", type=int, default=10)
    ap.add_argument("--budget", type=float, default=3600.0)
    ap.add_argument("--out", default="forms_7.txt")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    t0 = time.perf_counter()
    forms = classify_perfect_forms(7, max_classes=args.classes, time_budget=args.budget)
    dt = time.perf_counter() - t0
    for h in forms:
        _, pairs = minimal_vectors(h)
        print(f"{h.name}\tpairs={len(pairs)}\tdet={h.det()}")
    with open(args.out, "w") as fh:
        fh.write(write_forms(forms, header=f"partial rank-7 walk, {len(forms)} classes"))
    print(f"{len(forms)} classes in {dt:.0f}s, written to {args.out}")


if __name__ == "__main__":
    main()
