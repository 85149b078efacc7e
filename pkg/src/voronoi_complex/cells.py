"""Voronoi cell complex: representatives modulo Γ, stabilizers, orientations, incidences.

A cell is stored through its set of minimal-vector pairs.  Matrices ``M``
act on vectors; the corresponding element of Γ acting on forms is
``γ = M^t`` (``m(σ·γ) = {γ^t v}``).  Each face orbit of a representative
records one face, its representative and the witness ``γ``, together with
the summed sign ``η·ε`` over all faces in the orbit.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .exact_linalg import RestrictionFrame, bareiss_det, dense_rank, independent_subset
from .forms import GramForm, Vector, minimal_vectors, normalize_vector, vhat_coords
from .isometry import (
    Configuration,
    IntMatrix,
    IsometryWitness,
    PermGroup,
    adjugate,
    automorphisms,
    configuration_isometry,
    identity,
    mat_mul,
    mat_vec,
    sl_subgroup,
    transpose,
)
from .voronoi import cone_facets

log = logging.getLogger(__name__)


class NotStabilizing(ValueError):
    pass


class NotAFace(ValueError):
    pass


class WitnessInvalid(ValueError):
    pass


class IncompleteClassification(RuntimeError):
    pass


def top_dim(n: int) -> int:
    """d(N) = N(N+1)/2 - 1, the dimension of the perfect cells."""
    return n * (n + 1) // 2 - 1


def config_form(vectors: Sequence[Sequence[int]]) -> IntMatrix:
    n = len(vectors[0])
    return tuple(tuple(sum(v[i] * v[j] for v in vectors) for j in range(n)) for i in range(n))


@dataclass(eq=False)
class Cell:
    """A cell given by its minimal-vector pairs (normalized, sorted)."""

    vectors: tuple[Vector, ...]
    dim: int
    config_form: IntMatrix
    key: tuple
    orientation_basis: tuple[int, ...]
    well_rounded: bool = True
    stabilizer: PermGroup | None = None
    orientable: bool = True
    order: int = 0
    parent: int = -1
    mask: int = 0
    # a determinant -1 element of the GL stabilizer (vector action), if any
    flip: IntMatrix | None = field(default=None, repr=False)

    @property
    def N(self) -> int:
        return len(self.vectors[0])

    @property
    def rays(self) -> list[tuple[int, ...]]:
        return [vhat_coords(v) for v in self.vectors]

    def basis_rays(self) -> list[tuple[int, ...]]:
        return [vhat_coords(self.vectors[i]) for i in self.orientation_basis]

    def frame(self) -> RestrictionFrame:
        """Pivot data for orientation signs, rebuilt when the basis changes."""
        cached = self.__dict__.get("_frame")
        if cached is None or cached[0] != self.orientation_basis:
            cached = (self.orientation_basis, RestrictionFrame(self.basis_rays()))
            self.__dict__["_frame"] = cached
        return cached[1]


def canonical_key(vectors: Sequence[Sequence[int]], dim: int | None = None) -> tuple:
    """``(dim, det b, sorted x^t adj(b) x)`` with ``b = sum v v^t``.

    Equal keys are necessary for equivalence.  The adjugate is used because
    ``adj(γ^t b γ) = γ^{-1} adj(b) γ^{-t}`` makes the values invariant.
    """
    b = config_form(vectors)
    if dim is None:
        dim = dense_rank([vhat_coords(v) for v in vectors]) - 1
    a = adjugate(b)
    vals = sorted(sum(x * y for x, y in zip(mat_vec(a, v), v)) for v in vectors)
    return (dim, bareiss_det(b), tuple(vals))


def make_cell(vectors: Sequence[Sequence[int]], *, parent: int = -1, mask: int = 0) -> Cell:
    vecs = tuple(sorted(normalize_vector(v) for v in vectors))
    if len(set(vecs)) != len(vecs):
        raise ValueError("repeated vector pairs")
    rays = [vhat_coords(v) for v in vecs]
    basis = tuple(independent_subset(rays))
    dim = len(basis) - 1
    b = config_form(vecs)
    return Cell(
        vectors=vecs,
        dim=dim,
        config_form=b,
        key=canonical_key(vecs, dim),
        orientation_basis=basis,
        well_rounded=dense_rank([list(v) for v in vecs]) == len(vecs[0]),
        parent=parent,
        mask=mask,
    )


def act(cell: Cell, m: Sequence[Sequence[int]]) -> Cell:
    """The cell with vectors ``M v`` (i.e. ``cell·γ`` for ``γ = M^t``)."""
    return make_cell([mat_vec(m, v) for v in cell.vectors])


def inflate_cell(cell: Cell) -> Cell:
    """Vectors ``(v, 0)`` together with the new basis vector ``e_{N+1}``."""
    n = cell.N
    return make_cell([tuple(v) + (0,) for v in cell.vectors] + [(0,) * n + (1,)])


# ---------------------------------------------------------------- orientation


def _orientation_sign_vec(m: Sequence[Sequence[int]], cell: Cell) -> int:
    images = [vhat_coords(mat_vec(m, cell.vectors[i])) for i in cell.orientation_basis]
    return cell.frame().sign(images)


def orientation_sign(gamma: Sequence[Sequence[int]], cell: Cell) -> int:
    """Sign of ``q -> γ^t q γ`` restricted to R(σ), for ``γ`` stabilizing the cell."""
    m = transpose(gamma)
    vs = set(cell.vectors)
    if any(normalize_vector(mat_vec(m, v)) not in vs for v in cell.vectors):
        raise NotStabilizing("element does not stabilize the cell")
    return _orientation_sign_vec(m, cell)


def attach_stabilizer(cell: Cell, group: str = "GL") -> Cell:
    """Compute the stabilizer, its orientation characters and orientability."""
    grp = automorphisms(cell.config_form, cell.vectors)
    cell.flip = next((m for m, d in zip(grp.matrices, grp.generator_dets) if d == -1), None)
    if group == "SL":
        grp = sl_subgroup(grp)
    grp.generator_orientation_signs = [_orientation_sign_vec(m, cell) for m in grp.matrices]
    cell.stabilizer = grp
    cell.order = grp.order
    cell.orientable = all(s == 1 for s in grp.generator_orientation_signs)
    return cell


# ---------------------------------------------------------------- equivalence


def _config(cell: Cell) -> Configuration:
    cfg = getattr(cell, "_cfg", None)
    if cfg is None:
        cfg = Configuration(cell.vectors, adjugate(cell.config_form))
        cell._cfg = cfg  # type: ignore[attr-defined]
    return cfg


def _isometry_vec(c1: Cell, c2: Cell, group: str) -> IntMatrix | None:
    """``M`` with ``±M m(c1) = ±m(c2)``; ``det M = 1`` if group is SL."""
    if c1.key != c2.key:
        return None
    found = configuration_isometry(_config(c1), _config(c2))
    if found is None:
        return None
    m = found[0]
    if group == "SL" and bareiss_det(m) == -1:
        if c1.stabilizer is None:
            attach_stabilizer(c1, "SL")
        if c1.flip is None:
            if len(m) % 2:
                return tuple(tuple(-x for x in row) for row in m)
            return None
        m = mat_mul(m, c1.flip)
    return m


def cells_equivalent(c1: Cell, c2: Cell, group: str = "GL") -> IsometryWitness | None:
    """``γ`` with ``c2 = c1·γ`` (vectors ``γ^t v``), or None."""
    if c1.dim != c2.dim or c1.N != c2.N:
        return None
    m = _isometry_vec(c1, c2, group)
    if m is None:
        return None
    return IsometryWitness(transpose(m), bareiss_det(m))


# ---------------------------------------------------------------- complex


@dataclass
class FaceOrbit:
    """A Γ_σ-orbit of codimension-one faces of ``sigma``.

    ``face`` is a bitmask over ``sigma``'s pairs, ``witness`` is ``γ`` with
    ``face = rep·γ``, ``signed`` the sum of ``η·ε`` over the orbit (only
    meaningful when both cells are orientable).
    """

    sigma: int
    face: int
    tau: int
    witness: IntMatrix
    size: int
    signed: int


@dataclass
class Incidence:
    sigma: int
    tau: int
    count: int
    signed: int


@dataclass
class VoronoiComplex:
    N: int
    group: str
    levels: dict[int, list[Cell]] = field(default_factory=dict)
    incidences: dict[int, list[Incidence]] = field(default_factory=dict)
    face_orbits: dict[int, list[FaceOrbit]] = field(default_factory=dict)

    @property
    def dims(self) -> list[int]:
        return sorted(self.levels, reverse=True)

    def sigma_star(self, n: int) -> list[Cell]:
        return self.levels.get(n, [])

    def sigma(self, n: int) -> list[int]:
        """Indices of the orientable representatives in dimension ``n``."""
        return [i for i, c in enumerate(self.levels.get(n, [])) if c.orientable]

    def counts(self) -> dict[int, tuple[int, int]]:
        return {n: (len(cs), sum(c.orientable for c in cs)) for n, cs in self.levels.items()}


def _bits(mask: int) -> list[int]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


def _perm_mask(mask: int, perm: Sequence[int]) -> int:
    out = 0
    for i in _bits(mask):
        out |= 1 << perm[i]
    return out


def _orbits_with_chars(masks: Sequence[int], perms: Sequence[Sequence[int]], chars: Sequence[int]) -> list[list[tuple[int, int]]]:
    """Orbits of masks; each member paired with the character of the element reaching it."""
    index = {m: i for i, m in enumerate(masks)}
    seen = [False] * len(masks)
    out = []
    for start in range(len(masks)):
        if seen[start]:
            continue
        seen[start] = True
        orb = [(start, 1)]
        stack = [(start, 1)]
        while stack:
            cur, chi = stack.pop()
            for p, c in zip(perms, chars):
                j = index[_perm_mask(masks[cur], p)]
                if not seen[j]:
                    seen[j] = True
                    orb.append((j, chi * c))
                    stack.append((j, chi * c))
        out.append([(masks[j], chi) for j, chi in sorted(orb)])
    return out


def _spans(vectors: Sequence[Sequence[int]], n: int) -> bool:
    return dense_rank([list(v) for v in vectors]) == n


def facet_masks_dd(cell: Cell, backend: str = "auto") -> list[int]:
    """Facets of the cell's cone as bitmasks over its pairs."""
    return [f.mask for f in cone_facets(cell.rays, backend)]


def _maximal(masks: set[int]) -> list[int]:
    ms = sorted(masks, key=lambda m: -bin(m).count("1"))
    out: list[int] = []
    for m in ms:
        if not any(m | o == o for o in out):
            out.append(m)
    return out


def facet_masks_intersect(cell: Cell, top_facets: Sequence[int]) -> list[int]:
    """Facets of a face of a perfect cone from the facets of that cone.

    ``top_facets`` are masks over the parent form's pairs; faces of the
    cell are its intersections with them, the facets are the maximal ones.
    """
    f = cell.mask
    cand = {f & g for g in top_facets if f & g != f}
    pos = _bits(f)
    local = {p: i for i, p in enumerate(pos)}
    out = []
    for m in _maximal(cand):
        lm = 0
        for p in _bits(m):
            lm |= 1 << local[p]
        out.append(lm)
    return out


def _incidence_sign(tau: Cell, m: IntMatrix, sigma: Cell, face: int) -> int:
    """``η(τ,τ')·ε(τ',σ)`` for the face ``τ' = M τ`` of ``σ``."""
    images = [vhat_coords(mat_vec(m, tau.vectors[i])) for i in tau.orientation_basis]
    outside = next(i for i in range(len(sigma.vectors)) if not face >> i & 1)
    images.append(vhat_coords(sigma.vectors[outside]))
    return sigma.frame().sign(images)


def _local_to_parent(sigma: Cell, local: int) -> int:
    pos = _bits(sigma.mask)
    out = 0
    for i in _bits(local):
        out |= 1 << pos[i]
    return out


def _well_rounded_facets(args) -> list[int]:
    cell, faces, backend, top_facets = args
    if faces == "intersect":
        masks = facet_masks_intersect(cell, top_facets)
    else:
        masks = facet_masks_dd(cell, backend)
    n = cell.N
    keep = [m for m in masks if _spans([cell.vectors[i] for i in _bits(m)], n)]
    return sorted(keep, key=_bits)


def enumerate_cells(
    forms: Sequence[GramForm],
    group: str = "GL",
    *,
    faces: str = "dd",
    backend: str = "auto",
    threads: int = 1,
    progress: Callable[[str], None] | None = None,
) -> VoronoiComplex:
    """Build the Voronoi complex of GL_N(Z) or SL_N(Z) from its perfect forms.

    Levels are built top-down from the perfect cells; each representative's
    well-rounded facets are split into stabilizer orbits and each orbit is
    matched against the representatives found so far (first found wins).
    """
    if group not in ("GL", "SL"):
        raise ValueError("group must be GL or SL")
    if faces not in ("dd", "intersect"):
        raise ValueError("faces must be dd or intersect")
    n_rank = forms[0].dim
    if group == "SL" and n_rank % 2:
        return _sl_from_gl_odd(enumerate_cells(forms, "GL", faces=faces, backend=backend, threads=threads, progress=progress))

    cx = VoronoiComplex(n_rank, group)
    top = top_dim(n_rank)
    tops = []
    for i, h in enumerate(forms):
        _, pairs = minimal_vectors(h)
        c = make_cell(pairs, parent=i, mask=(1 << len(pairs)) - 1)
        if c.dim != top:
            raise ValueError(f"form {h.name or i} is not perfect")
        tops.append(attach_stabilizer(c, group))
    cx.levels[top] = tops

    top_facets: list[list[int]] = []
    if faces == "intersect":
        top_facets = [facet_masks_dd(c, backend) for c in tops]

    pool = ProcessPoolExecutor(threads) if threads > 1 else None
    try:
        for n in range(top, n_rank - 1, -1):
            level = cx.levels[n]
            jobs = [(c, faces, backend, top_facets[c.parent] if top_facets else None) for c in level]
            facet_lists = list(pool.map(_well_rounded_facets, jobs, chunksize=4)) if pool else [_well_rounded_facets(j) for j in jobs]
            new, orbits = _reduce_level(level, facet_lists, group)
            cx.levels[n - 1] = new
            cx.face_orbits[n] = orbits
            cx.incidences[n] = _aggregate(orbits)
            if progress:
                progress(f"dim {n - 1}: {len(new)} cells, {sum(c.orientable for c in new)} orientable")
    finally:
        if pool:
            pool.shutdown()
    return cx


def _reduce_level(level: Sequence[Cell], facet_lists: Sequence[list[int]], group: str) -> tuple[list[Cell], list[FaceOrbit]]:
    registry: dict[tuple, list[int]] = {}
    new: list[Cell] = []
    orbits: list[FaceOrbit] = []
    for si, (sigma, masks) in enumerate(zip(level, facet_lists)):
        grp = sigma.stabilizer
        perms = grp.pair_permutations()
        chars = grp.generator_orientation_signs
        for orb in _orbits_with_chars(masks, perms, chars):
            f0 = orb[0][0]
            cand = make_cell([sigma.vectors[i] for i in _bits(f0)], parent=sigma.parent, mask=_local_to_parent(sigma, f0))
            tau_idx, m = None, None
            for idx in registry.get(cand.key, ()):
                m = _isometry_vec(new[idx], cand, group)
                if m is not None:
                    tau_idx = idx
                    break
                log.debug("key collision without equivalence at dim %d", cand.dim)
            if tau_idx is None:
                attach_stabilizer(cand, group)
                new.append(cand)
                tau_idx = len(new) - 1
                registry.setdefault(cand.key, []).append(tau_idx)
                m = identity(cand.N)
            total = sum(chi for _, chi in orb)
            signed = _incidence_sign(new[tau_idx], m, sigma, f0) * total if total else 0
            orbits.append(FaceOrbit(si, f0, tau_idx, transpose(m), len(orb), signed))
    return new, orbits


def _aggregate(orbits: Sequence[FaceOrbit]) -> list[Incidence]:
    acc: dict[tuple[int, int], list[int]] = {}
    for o in orbits:
        a = acc.setdefault((o.sigma, o.tau), [0, 0])
        a[0] += o.size
        a[1] += o.signed
    return [Incidence(s, t, c, g) for (s, t), (c, g) in sorted(acc.items())]


def _sl_from_gl_odd(cx: VoronoiComplex) -> VoronoiComplex:
    """For odd N, SL and GL orbits agree (``-Id`` has determinant -1)."""
    out = VoronoiComplex(cx.N, "SL", incidences=cx.incidences)
    for n, cells in cx.levels.items():
        new = []
        for c in cells:
            d = Cell(c.vectors, c.dim, c.config_form, c.key, c.orientation_basis, c.well_rounded, parent=c.parent, mask=c.mask, flip=c.flip)
            grp = sl_subgroup(c.stabilizer)
            grp.generator_orientation_signs = [_orientation_sign_vec(m, d) for m in grp.matrices]
            d.stabilizer, d.order = grp, grp.order
            d.orientable = all(s == 1 for s in grp.generator_orientation_signs)
            new.append(d)
        out.levels[n] = new
    for n, orbs in cx.face_orbits.items():
        fixed = []
        for o in orbs:
            w = o.witness
            if bareiss_det(w) == -1:
                w = tuple(tuple(-x for x in row) for row in w)
            fixed.append(FaceOrbit(o.sigma, o.face, o.tau, w, o.size, o.signed))
        out.face_orbits[n] = fixed
    return out


# ---------------------------------------------------------------- direct checks


def face_cells(cx: VoronoiComplex, n: int, si: int) -> list[tuple[int, Cell]]:
    """All well-rounded facets of representative ``si`` in dimension ``n`` (mask, cell)."""
    sigma = cx.levels[n][si]
    masks = _well_rounded_facets((sigma, "dd", "auto", None))
    return [(m, make_cell([sigma.vectors[i] for i in _bits(m)])) for m in masks]


def direct_incidences(cx: VoronoiComplex, n: int, si: int) -> dict[int, tuple[int, int]]:
    """Incidences of one cell computed face by face with a witness search each.

    Returns ``tau -> (count, signed)``; used to cross-check the orbit-based
    bookkeeping of the builder.
    """
    sigma = cx.levels[n][si]
    reps = cx.levels[n - 1]
    out: dict[int, list[int]] = {}
    for mask, face in face_cells(cx, n, si):
        for ti, tau in enumerate(reps):
            m = _isometry_vec(tau, face, cx.group)
            if m is not None:
                acc = out.setdefault(ti, [0, 0])
                acc[0] += 1
                acc[1] += _incidence_sign(tau, m, sigma, mask)
                break
        else:
            raise IncompleteClassification(f"face of cell {si} in dim {n} matches no representative")
    return {t: (c, s) for t, (c, s) in out.items()}


def stabilizer_order_table(cx: VoronoiComplex) -> dict[tuple[int, int], int]:
    return {(n, i): c.order for n, cells in cx.levels.items() for i, c in enumerate(cells)}


# ---------------------------------------------------------------- file format


def write_complex(cx: VoronoiComplex) -> str:
    lines = [f"VORCPX 1 N={cx.N} group={cx.group}"]
    ids: dict[tuple[int, int], int] = {}
    for n in cx.dims:
        cells = cx.levels[n]
        lines.append(f"level {n} count {len(cells)}")
        for i, c in enumerate(cells):
            cid = len(ids)
            ids[(n, i)] = cid
            basis = " ".join(str(b) for b in c.orientation_basis)
            lines.append(f"cell {cid} pairs {len(c.vectors)} order {c.order} orientable {int(c.orientable)} basis {basis}")
            for v in c.vectors:
                lines.append(" ".join(str(x) for x in v))
    for n in cx.dims:
        for inc in cx.incidences.get(n, []):
            lines.append(f"incidence {ids[(n, inc.sigma)]} {ids[(n - 1, inc.tau)]} {inc.count} {inc.signed}")
    return "\n".join(lines) + "\n"


def read_complex(text: str) -> VoronoiComplex:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    head = lines[0].split()
    if head[:2] != ["VORCPX", "1"]:
        raise ValueError("not a VORCPX 1 file")
    fields = dict(f.split("=", 1) for f in head[2:])
    cx = VoronoiComplex(int(fields["N"]), fields["group"])
    where: dict[int, tuple[int, int]] = {}
    i = 1
    n = None
    while i < len(lines):
        tok = lines[i].split()
        if tok[0] == "level":
            n = int(tok[1])
            cx.levels[n] = []
            i += 1
        elif tok[0] == "cell":
            cid, k = int(tok[1]), int(tok[3])
            order, orientable = int(tok[5]), tok[7] == "1"
            basis = tuple(int(x) for x in tok[9:])
            vecs = tuple(tuple(int(x) for x in lines[i + 1 + j].split()) for j in range(k))
            c = make_cell(vecs)
            c.orientation_basis = basis
            c.order, c.orientable = order, orientable
            where[cid] = (n, len(cx.levels[n]))
            cx.levels[n].append(c)
            i += 1 + k
        elif tok[0] == "incidence":
            (ns, s), (_, t) = where[int(tok[1])], where[int(tok[2])]
            cx.incidences.setdefault(ns, []).append(Incidence(s, t, int(tok[3]), int(tok[4])))
            i += 1
        else:
            raise ValueError(f"unexpected line {lines[i]!r}")
    return cx
