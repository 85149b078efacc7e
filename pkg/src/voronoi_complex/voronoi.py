"""Perfect cones, their facets, and Voronoi's neighbour walk."""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Sequence

from .exact_linalg import independent_subset, solve_rational
from .forms import (
    GramForm,
    a_n_form,
    is_perfect,
    is_positive_definite,
    minimal_vectors,
    primitive_integral,
    short_vectors,
    vhat_coords,
)
from .isometry import automorphisms, perfect_forms_equivalent

log = logging.getLogger(__name__)

try:  # optional exact backend (cddlib, GMP rationals)
    import cdd as _cdd
except ImportError:  # pragma: no cover
    _cdd = None


class DegenerateCone(ValueError):
    pass


class WalkDiverged(RuntimeError):
    pass


@dataclass(frozen=True)
class Facet:
    """Facet of a cone: inward primitive integral normal and incident rays."""

    normal: tuple[int, ...]
    incident: frozenset[int]

    @property
    def mask(self) -> int:
        m = 0
        for i in self.incident:
            m |= 1 << i
        return m


def _primitive(vec: Sequence) -> tuple[int, ...]:
    fr = [Fraction(x) for x in vec]
    den = 1
    for x in fr:
        den = den * x.denominator // gcd(den, x.denominator)
    ints = [int(x * den) for x in fr]
    g = 0
    for x in ints:
        g = gcd(g, x)
    return tuple(x // g for x in ints) if g > 1 else tuple(ints)


def _dot(a: Sequence[int], b: Sequence[int]) -> int:
    return sum(x * y for x, y in zip(a, b))


def _project(rays: Sequence[Sequence[int]]) -> tuple[list[tuple[int, ...]], list[int]]:
    """Restrict rays to coordinates on which their span projects isomorphically."""
    piv = independent_subset(list(zip(*rays)))
    return [tuple(r[p] for p in piv) for r in rays], piv


def _lift(normal: Sequence[int], piv: Sequence[int], dim: int) -> tuple[int, ...]:
    out = [0] * dim
    for x, p in zip(normal, piv):
        out[p] = x
    return tuple(out)


def cone_facets(rays: Sequence[Sequence[int]], backend: str = "auto") -> list[Facet]:
    """All facets of the cone spanned by ``rays`` (exact).

    Works in the linear span of the rays; normals are lifted back as
    functionals vanishing outside a set of pivot coordinates.  Facets come
    out sorted by their incidence sets.
    """
    rays = [tuple(int(x) for x in r) for r in rays]
    if not rays or any(not any(r) for r in rays):
        raise DegenerateCone("rays must be nonzero")
    proj, piv = _project(rays)
    d = len(piv)
    if d < 2:
        raise DegenerateCone("rays span dimension < 2")
    if backend == "auto":
        backend = "cdd" if _cdd is not None else "dd"
    if backend == "cdd":
        normals = _facets_cdd(proj)
    elif backend == "dd":
        normals = _facets_dd(proj)
    elif backend == "brute":
        normals = _facets_brute(proj)
    else:
        raise ValueError(f"unknown backend {backend!r}")
    dim = len(rays[0])
    out = []
    for a in normals:
        inc = frozenset(i for i, r in enumerate(proj) if _dot(a, r) == 0)
        out.append(Facet(_lift(a, piv, dim), inc))
    out.sort(key=lambda f: (sorted(f.incident), f.normal))
    return out


def _insertion_order(rays: Sequence[tuple[int, ...]]) -> list[int]:
    # rays here are projected; order by "trace-like" sum then lexicographic
    return sorted(range(len(rays)), key=lambda i: (sum(rays[i]), rays[i]))


def _facets_dd(rays: Sequence[tuple[int, ...]]) -> list[tuple[int, ...]]:
    """Double description on the polar cone {a : a.r >= 0 for all rays}."""
    d = len(rays[0])
    order = _insertion_order(rays)
    init = [order[i] for i in independent_subset([rays[i] for i in order])]
    if len(init) != d:
        raise DegenerateCone("rays do not span their coordinate space")
    # extreme rays of the simplicial polar cone: columns of R^{-1}
    rmat = [list(rays[i]) for i in init]
    ident = [[int(i == j) for j in range(d)] for i in range(d)]
    inv = solve_rational(rmat, ident)
    assert inv is not None
    gens: list[tuple[tuple[int, ...], int]] = []  # (vector, zero-set bitmask over ray indices)
    for j in range(d):
        col = _primitive([inv[i][j] for i in range(d)])
        zs = 0
        for i in init:
            if _dot(col, rays[i]) == 0:
                zs |= 1 << i
        gens.append((col, zs))
    processed = set(init)
    for k in order:
        if k in processed:
            continue
        r = rays[k]
        vals = [_dot(a, r) for a, _ in gens]
        pos = [i for i, v in enumerate(vals) if v > 0]
        neg = [i for i, v in enumerate(vals) if v < 0]
        zer = [i for i, v in enumerate(vals) if v == 0]
        new: list[tuple[tuple[int, ...], int]] = []
        for i in pos:
            new.append(gens[i])
        for i in zer:
            a, zs = gens[i]
            new.append((a, zs | (1 << k)))
        if neg:
            zsets = [zs for _, zs in gens]
            for i in pos:
                ai, zi = gens[i]
                for j in neg:
                    aj, zj = gens[j]
                    common = zi & zj
                    if bin(common).count("1") < d - 2:
                        continue
                    # combinatorial adjacency: no third generator contains common
                    adjacent = True
                    for t, zt in enumerate(zsets):
                        if t != i and t != j and (zt & common) == common:
                            adjacent = False
                            break
                    if not adjacent:
                        continue
                    vi, vj = vals[i], vals[j]
                    comb = _primitive([vi * y - vj * x for x, y in zip(ai, aj)])
                    new.append((comb, common | (1 << k)))
        gens = new
        processed.add(k)
    return [a for a, _ in gens]


def _facets_cdd(rays: Sequence[tuple[int, ...]]) -> list[tuple[int, ...]]:
    mat = _cdd.Matrix([[0] + list(r) for r in rays], number_type="fraction")
    mat.rep_type = _cdd.RepType.GENERATOR
    poly = _cdd.Polyhedron(mat)
    ineq = poly.get_inequalities()
    if ineq.lin_set:
        raise DegenerateCone("projected cone is not full dimensional")
    out = []
    for row in ineq:
        a = _primitive(row[1:])
        if any(a):
            out.append(a)
    return out


def _facets_brute(rays: Sequence[tuple[int, ...]]) -> list[tuple[int, ...]]:
    """Reference: normals of all hyperplanes through d-1 independent rays that support the cone."""
    from itertools import combinations

    d = len(rays[0])
    found = {}
    for sub in combinations(range(len(rays)), d - 1):
        rows = [list(rays[i]) for i in sub]
        normal = _nullvector(rows, d)
        if normal is None:
            continue
        vals = [_dot(normal, r) for r in rays]
        if all(v >= 0 for v in vals):
            a = normal
        elif all(v <= 0 for v in vals):
            a = tuple(-x for x in normal)
        else:
            continue
        found[a] = True
    return list(found)


def _nullvector(rows: list[list[int]], d: int) -> tuple[int, ...] | None:
    """Primitive generator of a one-dimensional right kernel, else None."""
    from .exact_linalg import SparseIntMatrix, kernel_basis

    ker = kernel_basis(SparseIntMatrix.from_dense(rows, d))
    if len(ker) != 1:
        return None
    return tuple(ker[0])


# ---------------------------------------------------------------- perfect cones


@dataclass
class PerfectCone:
    form: GramForm
    pairs: tuple[tuple[int, ...], ...]
    rays: list[tuple[int, ...]]
    facets: list[Facet]


def perfect_cone(h: GramForm, backend: str = "auto") -> PerfectCone:
    _, pairs = minimal_vectors(h)
    rays = [vhat_coords(v) for v in pairs]
    return PerfectCone(h, pairs, rays, cone_facets(rays, backend))


def normal_matrix(normal: Sequence[int], n: int) -> list[list[Fraction]]:
    """Symmetric matrix F with ``F(v) = normal . vhat_coords(v)``."""
    f = [[Fraction(0)] * n for _ in range(n)]
    k = 0
    for i in range(n):
        for j in range(i, n):
            if i == j:
                f[i][i] = Fraction(normal[k])
            else:
                f[i][j] = f[j][i] = Fraction(normal[k], 2)
            k += 1
    return f


def _scaled(h: GramForm, f: list[list[Fraction]], rho: Fraction) -> tuple[list[list[int]], int]:
    """Integral K and scale s with h + rho*F = K / s."""
    n = h.dim
    mat = [[h.gram[i][j] + rho * f[i][j] for j in range(n)] for i in range(n)]
    s = 1
    for row in mat:
        for x in row:
            s = s * x.denominator // gcd(s, x.denominator)
    return [[int(x * s) for x in row] for row in mat], s


def contiguous_form(h: GramForm, facet: Facet, max_iter: int = 200) -> GramForm:
    """The perfect neighbour of ``h`` across ``facet`` (normalised primitive)."""
    n = h.dim
    m = h.min
    f = normal_matrix(facet.normal, n)

    def status(rho: Fraction):
        k, s = _scaled(h, f, rho)
        if not is_positive_definite(k):
            return "notpd", None
        below = short_vectors(k, m * s, strict=True)
        return ("below", below) if below else ("ok", None)

    lo, hi = Fraction(0), Fraction(1)
    found = None
    for _ in range(max_iter):
        st, below = status(hi)
        if st == "below":
            found = below
            break
        if st == "ok":
            lo, hi = hi, 2 * hi
        else:
            hi = (lo + hi) / 2
    if found is None:
        raise WalkDiverged("neighbour search exceeded the iteration bound")

    def fval(x):
        return sum(f[i][j] * x[i] * x[j] for i in range(n) for j in range(n))

    rho = min(Fraction(h.value(x) - m) / (-fval(x)) for _, x in found)
    k = primitive_integral([[h.gram[i][j] + rho * f[i][j] for j in range(n)] for i in range(n)])
    nb = GramForm(k)
    if not is_perfect(nb):
        raise WalkDiverged("neighbour is not perfect")
    return nb


# ---------------------------------------------------------------- classification


def _perm_mask(mask: int, perm: Sequence[int]) -> int:
    out = 0
    i = 0
    while mask:
        if mask & 1:
            out |= 1 << perm[i]
        mask >>= 1
        i += 1
    return out


def facet_orbits(masks: Sequence[int], pair_perms: Sequence[Sequence[int]]) -> list[list[int]]:
    """Partition facet indices into orbits under pair permutations."""
    index = {m: i for i, m in enumerate(masks)}
    seen = [False] * len(masks)
    orbits = []
    for start in range(len(masks)):
        if seen[start]:
            continue
        orb = [start]
        seen[start] = True
        stack = [start]
        while stack:
            cur = stack.pop()
            for p in pair_perms:
                j = index[_perm_mask(masks[cur], p)]
                if not seen[j]:
                    seen[j] = True
                    orb.append(j)
                    stack.append(j)
        orbits.append(sorted(orb))
    return orbits


def form_sort_key(h: GramForm) -> tuple:
    """Densest first: det/min^N ascending, then more minimal vectors first."""
    _, pairs = minimal_vectors(h)
    return (Fraction(h.det(), h.min ** h.dim), -len(pairs), h.gram)


def classify_perfect_forms(
    n: int,
    group: str = "GL",
    *,
    backend: str = "auto",
    max_classes: int | None = None,
    time_budget: float | None = None,
    max_iter: int = 200,
) -> list[GramForm]:
    """Representatives of the perfect forms of rank ``n`` by Voronoi's walk.

    Starts at A_n and closes under contiguity; new forms are deduplicated by
    isometry.  ``max_classes``/``time_budget`` stop early (partial result).
    """
    import time

    if not 2 <= n <= 8:
        raise ValueError("rank must be between 2 and 8")
    t0 = time.monotonic()
    seed = a_n_form(n)
    reps: list[GramForm] = [seed]
    queue = deque([0])
    while queue:
        idx = queue.popleft()
        h = reps[idx]
        cone = perfect_cone(h, backend)
        aut = automorphisms(h, cone.pairs)
        orbits = facet_orbits([fc.mask for fc in cone.facets], aut.pair_permutations())
        log.info("form %d: %d facets in %d orbits", idx, len(cone.facets), len(orbits))
        for orb in orbits:
            nb = contiguous_form(h, cone.facets[orb[0]], max_iter)
            if any(perfect_forms_equivalent(nb, r, group) is not None for r in reps):
                continue
            reps.append(nb)
            queue.append(len(reps) - 1)
            if max_classes is not None and len(reps) >= max_classes:
                return _finish(reps)
            if time_budget is not None and time.monotonic() - t0 > time_budget:
                return _finish(reps)
        if time_budget is not None and time.monotonic() - t0 > time_budget:
            break
    return _finish(reps)


def _finish(reps: list[GramForm]) -> list[GramForm]:
    out = sorted(reps, key=form_sort_key)
    n = out[0].dim
    return [GramForm(h.gram, name=f"P{n}_{i + 1}") for i, h in enumerate(out)]
