"""Rebuild the cardinality and differential tables for SL4, GL5, GL6 and SL6.

Usage: python scripts/reproduce_tables.py [--out results] [--skip-rank6]

Complexes are cached as VORCPX files in the output directory, so a second
run only redoes the linear algebra.  The rank-6 builds take about 25 minutes on one core.
"""

import argparse
import logging
import time

from voronoi_complex.cli import get_complex
from voronoi_complex.config import RunConfig
from voronoi_complex.homology import cohomology_report, differential_table, homology
from voronoi_complex.validation import cardinality_csv, differential_csv, mass_formula


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results")
    ap.add_argument("--skip-rank6", action="store_true")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    targets = [(4, "SL"), (5, "GL"), (5, "SL")]
    if not args.skip_rank6:
        targets += [(6, "GL"), (6, "SL")]
    cfg = RunConfig(out=args.out)
    for rank, group in targets:
        t0 = time.perf_counter()
        cx = get_complex(cfg, rank, group)
        table = differential_table(cx)
        groups = homology(cx, table)
        name = f"{group}{rank}"
        (cfg.out_dir / f"{name}_cardinality.csv").write_text(cardinality_csv(cx))
        (cfg.out_dir / f"{name}_differentials.csv").write_text(differential_csv(table))
        print(f"== {name} ({time.perf_counter() - t0:.0f}s)")
        print(cardinality_csv(cx), end="")
        print(differential_csv(table), end="")
        print("free homology:", {g.n: g.free_rank for g in groups if g.free_rank})
        print("cohomology degrees:", [(c.degree, c.rank, c.coefficients) for c in cohomology_report(cx, groups)])
        print("mass total:", mass_formula(cx).total)


if __name__ == "__main__":
    main()
