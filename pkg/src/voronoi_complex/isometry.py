"""Isometries and automorphism groups of vector configurations.

Everything reduces to one problem: given finite spanning configurations
``S`` and ``T`` in Z^N (closed under negation) with integral pairings ``P``
and ``Q``, find unimodular ``M`` with ``M S = T`` and
``(Mx)^t Q (My) = x^t P y``.  The search picks images for a rational basis
drawn from ``S`` (backtracking, pruned by pairing values and per-vector
fingerprints) and then checks integrality and that every vector lands in
``T``.

* perfect forms ``h, h'``: ``S = ±m(h)``, ``P = h``; ``M = γ^{-1}`` for
  ``γ^t h γ = h'``.
* cells: ``S = ±m(σ)``, ``P = adj(Σ v v^t)``; ``M = γ^t`` for ``σ' = σ·γ``.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from math import prod
from typing import Iterator, Sequence

from .exact_linalg import bareiss_det
from .forms import GramForm, Vector, short_vectors, spans

IntMatrix = tuple[tuple[int, ...], ...]


class DimensionMismatch(ValueError):
    pass


class SpanDeficient(ValueError):
    pass


def mat_mul(a: Sequence[Sequence[int]], b: Sequence[Sequence[int]]) -> IntMatrix:
    bt = list(zip(*b))
    return tuple(tuple(sum(x * y for x, y in zip(row, col)) for col in bt) for row in a)


def transpose(a: Sequence[Sequence[int]]) -> IntMatrix:
    return tuple(zip(*a))


def identity(n: int) -> IntMatrix:
    return tuple(tuple(int(i == j) for j in range(n)) for i in range(n))


def mat_vec(a: Sequence[Sequence[int]], v: Sequence[int]) -> tuple[int, ...]:
    return tuple(sum(x * y for x, y in zip(row, v)) for row in a)


def adjugate(a: Sequence[Sequence[int]]) -> IntMatrix:
    """Integer adjugate (``det(a) a^{-1}``) via cofactors."""
    n = len(a)
    if n == 1:
        return ((1,),)
    cof = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [row[:j] + row[j + 1 :] for k, row in enumerate(map(list, a)) if k != i]
            cof[i][j] = (-1) ** (i + j) * bareiss_det(minor)
    return tuple(tuple(cof[j][i] for j in range(n)) for i in range(n))


def inverse_unimodular(a: Sequence[Sequence[int]]) -> IntMatrix:
    d = bareiss_det(a)
    if d not in (1, -1):
        raise ValueError("matrix is not unimodular")
    adj = adjugate(a)
    return tuple(tuple(x * d for x in row) for row in adj)


@dataclass(frozen=True)
class IsometryWitness:
    matrix: IntMatrix
    det: int


@dataclass
class PermGroup:
    """Finite matrix group recorded as permutations of a signed vector list.

    Point ``2i`` is the pair representative ``v_i`` and ``2i+1`` is ``-v_i``,
    so the action is faithful (``-Id`` is the permutation swapping each
    ``2i`` with ``2i+1``).  ``pair_degree`` is the number of ± pairs.
    """

    pair_degree: int
    generators: list[tuple[int, ...]] = field(default_factory=list)
    matrices: list[IntMatrix] = field(default_factory=list)
    order: int = 1
    generator_dets: list[int] = field(default_factory=list)
    generator_orientation_signs: list[int] = field(default_factory=list)

    @property
    def degree(self) -> int:
        return 2 * self.pair_degree

    def pair_permutations(self) -> list[tuple[int, ...]]:
        return [tuple(p[2 * i] // 2 for i in range(self.pair_degree)) for p in self.generators]

    def has_det_minus_one(self) -> bool:
        return any(d == -1 for d in self.generator_dets)


class Configuration:
    """Signed vector list with pairing values and fingerprints."""

    def __init__(self, pairs: Sequence[Sequence[int]], pairing: Sequence[Sequence[int]]):
        self.pairs = [tuple(v) for v in pairs]
        self.n = len(pairing)
        vecs: list[tuple[int, ...]] = []
        for v in self.pairs:
            vecs.append(v)
            vecs.append(tuple(-x for x in v))
        self.vecs = vecs
        self.index = {v: i for i, v in enumerate(vecs)}
        if len(self.index) != len(vecs):
            raise ValueError("configuration has repeated vectors")
        pv = [mat_vec(pairing, v) for v in vecs]
        self.gram = [[sum(a * b for a, b in zip(pv[i], w)) for w in vecs] for i in range(len(vecs))]
        self.fingerprint = [(row[i], tuple(sorted(Counter(row).items()))) for i, row in enumerate(self.gram)]

    def invariant(self) -> tuple:
        return tuple(sorted(Counter(self.fingerprint).items()))


class _Search:
    """Backtracking over images of a fixed rational basis of ``src``."""

    def __init__(self, src: Configuration, dst: Configuration):
        self.src = src
        self.dst = dst
        self.base = _choose_base(src)
        n = src.n
        self.bmat = tuple(tuple(src.vecs[b][r] for b in self.base) for r in range(n))
        self.bdet = bareiss_det(self.bmat)
        self.badj = adjugate(self.bmat)
        by_fp: dict = {}
        for i, fp in enumerate(dst.fingerprint):
            by_fp.setdefault(fp, []).append(i)
        self.cands = [by_fp.get(src.fingerprint[b], []) for b in self.base]

    def level_candidates(self, k: int, images: Sequence[int]) -> Iterator[int]:
        sg = self.src.gram
        dg = self.dst.gram
        bk = self.base[k]
        want = [sg[bk][self.base[j]] for j in range(k)]
        for t in self.cands[k]:
            row = dg[t]
            if all(row[images[j]] == want[j] for j in range(k)) and t not in images:
                yield t

    def complete(self, images: Sequence[int]) -> tuple[IntMatrix, tuple[int, ...]] | None:
        n = self.src.n
        tmat = [[self.dst.vecs[t][r] for t in images] for r in range(n)]
        prod_ = mat_mul(tmat, self.badj)
        d = self.bdet
        if any(x % d for row in prod_ for x in row):
            return None
        m = tuple(tuple(x // d for x in row) for row in prod_)
        if abs(bareiss_det(m)) != 1:
            return None
        perm = []
        idx = self.dst.index
        for v in self.src.vecs:
            j = idx.get(mat_vec(m, v))
            if j is None:
                return None
            perm.append(j)
        return m, tuple(perm)

    def first(self, prefix: Sequence[int] = ()) -> tuple[IntMatrix, tuple[int, ...]] | None:
        images = list(prefix)
        nb = len(self.base)
        if len(images) > nb:
            raise ValueError("prefix longer than base")

        def rec(k: int):
            if k == nb:
                return self.complete(images)
            for t in self.level_candidates(k, images):
                images.append(t)
                res = rec(k + 1)
                if res is not None:
                    return res
                images.pop()
            return None

        # the prefix itself must be consistent
        for k in range(len(images)):
            if images[k] not in set(self.level_candidates(k, images[:k])):
                return None
        return rec(len(images))


def _choose_base(cfg: Configuration) -> list[int]:
    """Greedy base: independent vectors with the fewest compatible images."""
    n = cfg.n
    classes = Counter(cfg.fingerprint)
    chosen: list[int] = []
    candidates = list(range(0, len(cfg.vecs), 2))
    while len(chosen) < n:
        best = None
        for i in candidates:
            if i in chosen:
                continue
            if not _independent([cfg.vecs[j] for j in chosen] + [cfg.vecs[i]]):
                continue
            fp = cfg.fingerprint[i]
            # images must share the fingerprint and the pairings to the base
            cnt = sum(
                1
                for t in range(len(cfg.vecs))
                if cfg.fingerprint[t] == fp and all(cfg.gram[t][j] == cfg.gram[i][j] for j in chosen)
            )
            key = (cnt, classes[fp], i)
            if best is None or key < best[0]:
                best = (key, i)
        if best is None:
            raise SpanDeficient("configuration does not span")
        chosen.append(best[1])
    return chosen


def _independent(vecs: Sequence[Sequence[int]]) -> bool:
    from .exact_linalg import dense_rank

    return dense_rank([list(v) for v in vecs]) == len(vecs)


def configuration_isometry(src: Configuration, dst: Configuration) -> tuple[IntMatrix, tuple[int, ...]] | None:
    """Some ``M`` mapping ``src`` onto ``dst`` preserving pairings, or None."""
    if src.n != dst.n:
        raise DimensionMismatch("configurations live in different dimensions")
    if len(src.vecs) != len(dst.vecs) or src.invariant() != dst.invariant():
        return None
    return _Search(src, dst).first()


def configuration_automorphisms(cfg: Configuration) -> tuple[list[tuple[IntMatrix, tuple[int, ...]]], int]:
    """Generators and order of the pairing-preserving automorphism group.

    Stabilizer-chain backtrack: level ``k`` works in the pointwise stabilizer
    of the first ``k`` base vectors; the order is the product of the basic
    orbit lengths.
    """
    search = _Search(cfg, cfg)
    base = search.base
    nb = len(base)
    gens: list[tuple[IntMatrix, tuple[int, ...]]] = []
    orbit_sizes = [1] * nb
    for k in range(nb - 1, -1, -1):
        fixed = base[:k]
        level_gens = [g for g in gens if all(g[1][b] == b for b in fixed)]
        orbit = _orbit(base[k], [g[1] for g in level_gens])
        excluded: set[int] = set()
        for t in search.level_candidates(k, fixed):
            if t in orbit or t in excluded:
                continue
            found = search.first(list(fixed) + [t])
            if found is None:
                excluded |= _orbit(t, [g[1] for g in level_gens])
                continue
            gens.append(found)
            level_gens.append(found)
            orbit = _orbit(base[k], [g[1] for g in level_gens])
        orbit_sizes[k] = len(orbit)
    return gens, prod(orbit_sizes)


def _orbit(point: int, perms: Sequence[Sequence[int]]) -> set[int]:
    seen = {point}
    stack = [point]
    while stack:
        x = stack.pop()
        for p in perms:
            y = p[x]
            if y not in seen:
                seen.add(y)
                stack.append(y)
    return seen


# ---------------------------------------------------------------- Schreier–Sims


def _perm_mul(p: Sequence[int], q: Sequence[int]) -> tuple[int, ...]:
    """Apply ``p`` then ``q``."""
    return tuple(q[x] for x in p)


def _perm_inv(p: Sequence[int]) -> tuple[int, ...]:
    inv = [0] * len(p)
    for i, x in enumerate(p):
        inv[x] = i
    return tuple(inv)


def group_order(generators: Sequence[Sequence[int]]) -> int:
    """Order of a permutation group by the deterministic Schreier–Sims algorithm."""
    gens = [tuple(g) for g in generators if any(i != x for i, x in enumerate(g))]
    if not gens:
        return 1
    degree = len(gens[0])
    if any(len(g) != degree for g in gens):
        raise ValueError("permutations of unequal degree")
    ident = tuple(range(degree))
    base: list[int] = []
    strong: list[list[tuple[int, ...]]] = []  # generators per level
    transversals: list[dict[int, tuple[int, ...]]] = []

    def moved(g):
        return next(i for i, x in enumerate(g) if x != i)

    def sift(g):
        for lvl, b in enumerate(base):
            img = g[b]
            t = transversals[lvl].get(img)
            if t is None:
                return g, lvl
            g = _perm_mul(g, _perm_inv(t))
        return g, len(base)

    def build_transversal(lvl):
        b = base[lvl]
        tr = {b: ident}
        queue = [b]
        while queue:
            x = queue.pop()
            for s in strong[lvl]:
                y = s[x]
                if y not in tr:
                    tr[y] = _perm_mul(tr[x], s)
                    queue.append(y)
        transversals[lvl] = tr

    def add_level(point):
        base.append(point)
        strong.append([])
        transversals.append({point: ident})

    add_level(moved(gens[0]))
    strong[0].extend(gens)
    build_transversal(0)

    levels_todo = [0]
    while levels_todo:
        lvl = levels_todo.pop()
        restart = False
        for x, tx in list(transversals[lvl].items()):
            for s in list(strong[lvl]):
                y = s[x]
                schreier = _perm_mul(_perm_mul(tx, s), _perm_inv(transversals[lvl][y]))
                h, j = sift(schreier)
                if h != ident:
                    if j == len(base):
                        add_level(moved(h))
                    for k in range(lvl + 1, j + 1):
                        strong[k].append(h)
                        build_transversal(k)
                    levels_todo.append(lvl)
                    levels_todo.extend(range(lvl + 1, j + 1))
                    restart = True
                    break
            if restart:
                break
    return prod(len(t) for t in transversals)


# ---------------------------------------------------------------- public API


def _full_config_for_form(h: GramForm, bound: int) -> Configuration:
    vecs = [x for _, x in short_vectors(h.gram, bound)]
    return Configuration(vecs, h.gram)


def forms_equivalent(b: GramForm, b2: GramForm, group: str = "GL") -> IsometryWitness | None:
    """``γ`` with ``γ^t b γ = b2`` (``det γ = 1`` for SL), or None."""
    if b.dim != b2.dim:
        raise DimensionMismatch("forms of different dimension")
    if b.det() != b2.det():
        return None
    bound = max(max(b.gram[i][i] for i in range(b.dim)), max(b2.gram[i][i] for i in range(b2.dim)))
    src = _full_config_for_form(b, bound)
    dst = _full_config_for_form(b2, bound)
    return _equivalence_from_configs(src, dst, group, form_action=True)


def perfect_forms_equivalent(h: GramForm, h2: GramForm, group: str = "GL") -> IsometryWitness | None:
    """Equivalence test for well-rounded forms through their minimal vectors only."""
    if h.dim != h2.dim:
        raise DimensionMismatch("forms of different dimension")
    if h.min != h2.min or h.det() != h2.det():
        return None
    from .forms import minimal_vectors

    src = Configuration(minimal_vectors(h)[1], h.gram)
    dst = Configuration(minimal_vectors(h2)[1], h2.gram)
    return _equivalence_from_configs(src, dst, group, form_action=True)


def _equivalence_from_configs(src: Configuration, dst: Configuration, group: str, form_action: bool) -> IsometryWitness | None:
    found = configuration_isometry(src, dst)
    if found is None:
        return None
    m, _ = found
    d = bareiss_det(m)
    if group == "SL" and d == -1:
        gens, _ = configuration_automorphisms(src)
        flip = next((g for g, _ in gens if bareiss_det(g) == -1), None)
        if flip is None:
            return None
        m = mat_mul(m, flip)
        d = 1
    gamma = inverse_unimodular(m) if form_action else transpose(m)
    return IsometryWitness(gamma, d)


def automorphisms(b: GramForm | Sequence[Sequence[int]], pairs: Sequence[Vector], group: str = "GL", *, pairing=None) -> PermGroup:
    """Automorphism group of the configuration ``±pairs`` preserving the form.

    ``b`` is either a perfect form with ``m(b) = pairs`` (its Gram matrix is
    the pairing) or the configuration form ``sum v v^t``, in which case the
    invariant pairing is its adjugate.  Matrices act on vectors; their
    transposes act on forms by ``q -> γ^t q γ`` when ``b`` is a configuration
    form.
    """
    n = len(pairs[0]) if pairs else 0
    if not pairs or not spans(pairs, n):
        raise SpanDeficient("vectors do not span")
    if pairing is None:
        gram = b.gram if isinstance(b, GramForm) else tuple(map(tuple, b))
        pairing = gram if isinstance(b, GramForm) else adjugate(gram)
    cfg = Configuration(pairs, pairing)
    gens, order = configuration_automorphisms(cfg)
    grp = PermGroup(len(pairs))
    for m, perm in gens:
        grp.generators.append(perm)
        grp.matrices.append(m)
        grp.generator_dets.append(bareiss_det(m))
    grp.order = order
    if group == "SL":
        grp = sl_subgroup(grp)
    return grp


def sl_subgroup(grp: PermGroup) -> PermGroup:
    """Generators of the determinant-one subgroup (index 1 or 2)."""
    pivot = next((i for i, d in enumerate(grp.generator_dets) if d == -1), None)
    if pivot is None:
        return grp
    g0p, g0m = grp.generators[pivot], grp.matrices[pivot]
    g0p_inv, g0m_inv = _perm_inv(g0p), inverse_unimodular(g0m)
    out = PermGroup(grp.pair_degree, order=grp.order // 2)
    seen = set()

    def add(p, m):
        if p not in seen and any(i != x for i, x in enumerate(p)):
            seen.add(p)
            out.generators.append(p)
            out.matrices.append(m)
            out.generator_dets.append(1)

    # matrix A·B acts as B first, i.e. permutation _perm_mul(perm_B, perm_A)
    for p, m, d in zip(grp.generators, grp.matrices, grp.generator_dets):
        if d == 1:
            add(p, m)
            add(_perm_mul(_perm_mul(g0p_inv, p), g0p), mat_mul(mat_mul(g0m, m), g0m_inv))
        else:
            add(_perm_mul(g0p_inv, p), mat_mul(m, g0m_inv))
            add(_perm_mul(p, g0p), mat_mul(g0m, m))
    return out
