"""Command line interface.

Exit codes: 0 success, 1 validation failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .cells import VoronoiComplex, enumerate_cells, read_complex, write_complex
from .config import RunConfig, load_config
from .exact_linalg import write_matrix_market
from .forms import GramForm, minimal_vectors, read_forms, write_forms
from .homology import (
    all_differentials,
    cohomology_caveat,
    cohomology_report,
    differential_table,
    homology,
    small_primes_only,
    verify_chain,
)
from .validation import (
    cardinality_csv,
    differential_csv,
    inflation_negative_control,
    mass_formula,
    prime_audit,
    splitting_check,
    top_class,
)
from .voronoi import classify_perfect_forms

log = logging.getLogger("voronoi_complex")

OK, FAILED, USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    p.add_argument("--rank", type=int)
    p.add_argument("--group", choices=["GL", "SL"])
    p.add_argument("--threads", type=int)
    p.add_argument("--faces", choices=["dd", "intersect"])
    p.add_argument("--backend", choices=["auto", "cdd", "dd", "brute"])
    p.add_argument("--out")
    p.add_argument("--config")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="voronoi-complex", parents=[common], description="Voronoi complexes of GL_N(Z) and SL_N(Z)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("perfect-forms", parents=[common], help="classify perfect forms")
    p.add_argument("--output")
    p.add_argument("--max-classes", type=int)
    p.add_argument("--time-budget", type=float)

    p = sub.add_parser("complex", parents=[common], help="build the cell complex")
    p.add_argument("--forms")
    p.add_argument("--output")

    p = sub.add_parser("differentials", parents=[common], help="write differential matrices and their table")
    p.add_argument("--complex")
    p.add_argument("--out-dir")

    p = sub.add_parser("homology", parents=[common], help="homology and cohomology degree report")
    p.add_argument("--complex")

    p = sub.add_parser("validate", parents=[common], help="global consistency checks")
    p.add_argument("check", choices=["mass", "chain", "topclass", "splitting", "primes"])
    p.add_argument("--complex")
    p.add_argument("--negative-control", action="store_true")

    p = sub.add_parser("report", parents=[common], help="all tables for one complex")
    p.add_argument("--complex")
    return parser


def _config(args) -> RunConfig:
    cfg = load_config(getattr(args, "config", None))
    return cfg.with_overrides(
        rank=getattr(args, "rank", None),
        group=getattr(args, "group", None),
        threads=getattr(args, "threads", None),
        faces=getattr(args, "faces", None),
        backend=getattr(args, "backend", None),
        out=getattr(args, "out", None),
        time_budget=getattr(args, "time_budget", None),
    )


def _forms(cfg: RunConfig, rank: int, path: str | None = None) -> list[GramForm]:
    p = Path(path) if path else cfg.out_dir / f"forms_{rank}.txt"
    if p.exists():
        return read_forms(p.read_text())
    if path:
        raise UsageError(f"forms file {path} not found")
    forms = classify_perfect_forms(rank, backend=cfg.backend, max_iter=cfg.walk_max_iter)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    p.write_text(write_forms(forms, header=f"perfect forms of rank {rank}"))
    return forms


def get_complex(cfg: RunConfig, rank: int | None = None, group: str | None = None, path: str | None = None) -> VoronoiComplex:
    """Load a complex file, or build it and cache it under the output directory."""
    rank = rank or cfg.rank
    group = group or cfg.group
    if path:
        p = Path(path)
        if not p.exists():
            raise UsageError(f"complex file {path} not found")
        return read_complex(p.read_text())
    p = cfg.out_dir / f"{group}{rank}.vcx"
    if p.exists():
        return read_complex(p.read_text())
    cx = enumerate_cells(_forms(cfg, rank), group, faces=cfg.faces, backend=cfg.backend, threads=cfg.threads, progress=log.info)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    p.write_text(write_complex(cx))
    return cx


def cmd_perfect_forms(cfg: RunConfig, args) -> int:
    forms = classify_perfect_forms(
        cfg.rank,
        cfg.group,
        backend=cfg.backend,
        max_classes=getattr(args, "max_classes", None),
        time_budget=cfg.time_budget,
        max_iter=cfg.walk_max_iter,
    )
    out = Path(args.output) if getattr(args, "output", None) else cfg.out_dir / f"forms_{cfg.rank}.txt"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(write_forms(forms, header=f"perfect forms of rank {cfg.rank}"))
    for h in forms:
        m, pairs = minimal_vectors(h)
        print(f"{h.name}\tpairs={len(pairs)}\tmin={m}\tdet={h.det()}")
    print(f"{len(forms)} classes written to {out}")
    return OK


def cmd_complex(cfg: RunConfig, args) -> int:
    forms = _forms(cfg, cfg.rank, getattr(args, "forms", None))
    cx = enumerate_cells(forms, cfg.group, faces=cfg.faces, backend=cfg.backend, threads=cfg.threads, progress=log.info)
    out = Path(args.output) if getattr(args, "output", None) else cfg.out_dir / f"{cfg.group}{cfg.rank}.vcx"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(write_complex(cx))
    sys.stdout.write(cardinality_csv(cx))
    return OK


def cmd_differentials(cfg: RunConfig, args) -> int:
    cx = get_complex(cfg, path=getattr(args, "complex", None))
    out = Path(getattr(args, "out_dir", None) or cfg.out_dir / f"{cx.group}{cx.N}_differentials")
    out.mkdir(parents=True, exist_ok=True)
    diffs = all_differentials(cx)
    for n, d in diffs.items():
        if d.matrix.nrows or d.matrix.ncols:
            (out / f"d_{n}.mtx").write_text(write_matrix_market(d.matrix))
    text = differential_csv(differential_table(cx, diffs))
    (out / "summary.csv").write_text(text)
    sys.stdout.write(text)
    return OK


def cmd_homology(cfg: RunConfig, args) -> int:
    cx = get_complex(cfg, path=getattr(args, "complex", None))
    groups = homology(cx)
    for g in groups:
        print(f"H_{g.n} = {g}")
    for line in cohomology_report(cx, groups):
        print(f"H_{line.vor_degree}(Vor) -> H^{line.degree}({cx.group}_{cx.N}(Z), {line.coefficients}) rank {line.rank}")
    print(cohomology_caveat(cx.N))
    return OK if small_primes_only(groups, cx.N + 1) else FAILED


def cmd_validate(cfg: RunConfig, args) -> int:
    check = args.check
    if check == "splitting":
        if cfg.rank < 3:
            raise UsageError("splitting needs rank at least 3")
        small = get_complex(cfg, cfg.rank - 1, "GL")
        large = get_complex(cfg, cfg.rank, "GL")
        rep = splitting_check(small, large)
        print(f"matched={rep.matched} orientable={rep.orientable} incidences={rep.incidences_match} direct_factor={rep.direct_factor}")
        print(f"components: GL{cfg.rank - 1}={rep.components_small} GL{cfg.rank}={rep.components_large}")
        for m in rep.messages[:20]:
            print(m)
        ok = rep.ok
        if getattr(args, "negative_control", False):
            nc = inflation_negative_control(get_complex(cfg, 3, "GL"), get_complex(cfg, 4, "GL"), get_complex(cfg, 5, "GL"))
            print(f"negative control: once_orientable={nc.once_orientable} twice_orientable={nc.twice_orientable} swap_sign={nc.swap_sign}")
            ok = ok and nc.ok
        return OK if ok else FAILED
    cx = get_complex(cfg, path=getattr(args, "complex", None))
    if check == "mass":
        rep = mass_formula(cx)
        for n, v in rep.partial.items():
            print(f"{n}\t{v}")
        print(f"total\t{rep.total}")
        return OK if rep.ok else FAILED
    if check == "chain":
        ok = verify_chain(cx)
        print("d o d = 0" if ok else "d o d != 0")
        return OK if ok else FAILED
    if check == "topclass":
        tc = top_class(cx)
        print(f"coefficients={tc.coefficients} kernel_rank={tc.kernel_rank} in_kernel={tc.in_kernel} proportional={tc.proportional} structural={tc.structural}")
        for m in tc.messages:
            print(m)
        return OK if tc.ok else FAILED
    bad = prime_audit(cx)
    for n, i, order in bad:
        print(f"cell {i} in dim {n}: order {order}")
    print("all stabilizer orders have primes <= N+1" if not bad else f"{len(bad)} violations")
    return OK if not bad else FAILED


def cmd_report(cfg: RunConfig, args) -> int:
    cx = get_complex(cfg, path=getattr(args, "complex", None))
    out = cfg.out_dir / f"{cx.group}{cx.N}_report"
    out.mkdir(parents=True, exist_ok=True)
    diffs = all_differentials(cx)
    table = differential_table(cx, diffs)
    groups = homology(cx, table)
    (out / "cardinality.csv").write_text(cardinality_csv(cx))
    (out / "differentials.csv").write_text(differential_csv(table))
    hom = "degree,free_rank,torsion\n" + "".join(f"{g.n},{g.free_rank},{g.torsion}\n" for g in groups)
    (out / "homology.csv").write_text(hom)
    coh = [f"{cx.group}_{cx.N}: H_m(Vor) -> H^(v(N)+N-1-m)"]
    coh += [f"m={c.vor_degree} degree={c.degree} rank={c.rank} coefficients={c.coefficients}" for c in cohomology_report(cx, groups)]
    coh.append(cohomology_caveat(cx.N))
    (out / "cohomology.txt").write_text("\n".join(coh) + "\n")
    mass = mass_formula(cx)
    chain = verify_chain(cx, diffs)
    sys.stdout.write(cardinality_csv(cx))
    sys.stdout.write(differential_csv(table))
    sys.stdout.write(hom)
    print("\n".join(coh))
    print(f"chain={chain} mass_total={mass.total}")
    return OK if chain and mass.ok else FAILED


COMMANDS = {
    "perfect-forms": cmd_perfect_forms,
    "complex": cmd_complex,
    "differentials": cmd_differentials,
    "homology": cmd_homology,
    "validate": cmd_validate,
    "report": cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING, format="%(message)s")
    try:
        cfg = _config(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE
    try:
        return COMMANDS[args.command](cfg, args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
