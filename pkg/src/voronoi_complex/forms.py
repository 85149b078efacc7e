"""Integral positive definite quadratic forms on Z^N.

Gram matrices are kept integral.  Short vectors are enumerated with a
Fincke–Pohst branch and bound over an exact rational LDL^T decomposition.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from math import gcd
from typing import Iterable, Sequence

from .exact_linalg import bareiss_det, dense_rank

Vector = tuple[int, ...]


class NotPositiveDefinite(ValueError):
    pass


class ZeroVector(ValueError):
    pass


class NotWellRounded(ValueError):
    pass


def _as_gram(rows: Sequence[Sequence[int]]) -> tuple[tuple[int, ...], ...]:
    g = tuple(tuple(int(x) for x in r) for r in rows)
    n = len(g)
    if any(len(r) != n for r in g):
        raise ValueError("Gram matrix must be square")
    for i in range(n):
        for j in range(i):
            if g[i][j] != g[j][i]:
                raise ValueError("Gram matrix must be symmetric")
    return g


@dataclass(frozen=True, eq=False)
class GramForm:
    """Symmetric positive definite integral Gram matrix with a lazy minimum."""

    gram: tuple[tuple[int, ...], ...]
    name: str = ""
    _cache: dict = field(default_factory=dict, repr=False, compare=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def __init__(self, gram, name: str = ""):
        object.__setattr__(self, "gram", _as_gram(gram))
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "_cache", {})
        object.__setattr__(self, "_lock", threading.Lock())
        if not is_positive_definite(self.gram):
            raise NotPositiveDefinite(f"form {name or self.gram} is not positive definite")

    @property
    def dim(self) -> int:
        return len(self.gram)

    def __eq__(self, other):
        return isinstance(other, GramForm) and self.gram == other.gram

    def __hash__(self):
        return hash(self.gram)

    def __repr__(self):
        return f"GramForm({[list(r) for r in self.gram]}{', ' + repr(self.name) if self.name else ''})"

    def value(self, x: Sequence[int]) -> int:
        g = self.gram
        n = len(g)
        return sum(g[i][j] * x[i] * x[j] for i in range(n) for j in range(n))

    def det(self) -> int:
        return bareiss_det(self.gram)

    def _minimal(self) -> tuple[int, tuple[Vector, ...]]:
        with self._lock:
            if "min" not in self._cache:
                self._cache["min"] = _compute_minimal_vectors(self.gram)
            return self._cache["min"]

    @property
    def min(self) -> int:
        return self._minimal()[0]


def is_positive_definite(gram: Sequence[Sequence[int]]) -> bool:
    """Sylvester's criterion on the leading principal minors."""
    n = len(gram)
    return all(bareiss_det([row[:k] for row in gram[:k]]) > 0 for k in range(1, n + 1))


def ldl(gram: Sequence[Sequence[int]]) -> tuple[list[Fraction], list[list[Fraction]]]:
    """Exact decomposition ``h(x) = sum_i q_i (x_i + sum_{j>i} mu_ij x_j)^2``."""
    n = len(gram)
    a = [[Fraction(x) for x in row] for row in gram]
    q = [Fraction(0)] * n
    mu = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        q[i] = a[i][i]
        if q[i] <= 0:
            raise NotPositiveDefinite("form is not positive definite")
        for j in range(i + 1, n):
            mu[i][j] = a[i][j] / q[i]
        for j in range(i + 1, n):
            for k in range(j, n):
                a[j][k] -= q[i] * mu[i][j] * mu[i][k]
                a[k][j] = a[j][k]
    return q, mu


def _int_range(center: Fraction, radius_sq: Fraction) -> tuple[int, int]:
    """Integers x with (x - center)^2 <= radius_sq, as an inclusive range."""
    r = math.sqrt(float(radius_sq)) if radius_sq > 0 else 0.0
    lo = math.ceil(float(center) - r) - 1
    hi = math.floor(float(center) + r) + 1
    while (lo - center) ** 2 > radius_sq and lo <= hi:
        lo += 1
    while (lo - 1 - center) ** 2 <= radius_sq:
        lo -= 1
    while (hi - center) ** 2 > radius_sq and hi >= lo:
        hi -= 1
    while (hi + 1 - center) ** 2 <= radius_sq:
        hi += 1
    return lo, hi


def short_vectors(gram: Sequence[Sequence[int]], bound, *, strict: bool = False) -> list[tuple[int, Vector]]:
    """All ``(h(x), x)`` with ``0 < h(x) <= bound`` (``< bound`` if strict).

    One representative per ± pair, first nonzero coordinate positive.
    """
    n = len(gram)
    q, mu = ldl(gram)
    bound = Fraction(bound)
    out: list[tuple[int, Vector]] = []
    x = [0] * n
    g = gram

    def rec(i: int, remaining: Fraction):
        c = -sum((mu[i][j] * x[j] for j in range(i + 1, n)), Fraction(0))
        lo, hi = _int_range(c, remaining / q[i])
        # top coordinate: only the nonnegative half, the sign is fixed later
        if all(x[j] == 0 for j in range(i + 1, n)):
            lo = max(lo, 0)
        for xi in range(lo, hi + 1):
            x[i] = xi
            rem = remaining - q[i] * (xi - c) ** 2
            if i == 0:
                if any(x):
                    v = sum(g[a][b] * x[a] * x[b] for a in range(n) for b in range(n))
                    if v < bound or (not strict and v == bound):
                        out.append((v, _normalize(x)))
            else:
                rec(i - 1, rem)
        x[i] = 0

    rec(n - 1, bound)
    out.sort(key=lambda t: (t[0], t[1]))
    return out


def _normalize(x: Sequence[int]) -> Vector:
    for v in x:
        if v:
            return tuple(x) if v > 0 else tuple(-a for a in x)
    raise ZeroVector("zero vector")


def normalize_vector(x: Sequence[int]) -> Vector:
    """Representative of ±x whose first nonzero coordinate is positive."""
    return _normalize(x)


def _compute_minimal_vectors(gram) -> tuple[int, tuple[Vector, ...]]:
    n = len(gram)
    bound = min(gram[i][i] for i in range(n))
    vecs = short_vectors(gram, bound)
    m = min(v for v, _ in vecs)
    pairs = tuple(sorted(x for v, x in vecs if v == m))
    return m, pairs


def minimal_vectors(h: GramForm) -> tuple[int, tuple[Vector, ...]]:
    """Arithmetical minimum and one representative per ± pair of minimal vectors."""
    return h._minimal()


def vhat(v: Sequence[int]) -> tuple[tuple[int, ...], ...]:
    """The rank-one form x -> (v|x)^2 as the matrix v v^t."""
    if not any(v):
        raise ZeroVector("vhat of the zero vector")
    return tuple(tuple(a * b for b in v) for a in v)


def vhat_coords(v: Sequence[int]) -> tuple[int, ...]:
    """Upper-triangular coordinates of ``vhat(v)``."""
    n = len(v)
    return tuple(v[i] * v[j] for i in range(n) for j in range(i, n))


def sym_dim(n: int) -> int:
    return n * (n + 1) // 2


def is_perfect(h: GramForm) -> bool:
    _, pairs = minimal_vectors(h)
    return dense_rank([vhat_coords(v) for v in pairs]) == sym_dim(h.dim)


def spans(vectors: Iterable[Sequence[int]], n: int) -> bool:
    return dense_rank([list(v) for v in vectors]) == n


def is_well_rounded(h: GramForm) -> bool:
    _, pairs = minimal_vectors(h)
    return spans(pairs, h.dim)


def inflate(h: GramForm) -> GramForm:
    """Block form ``diag(A, m(A))`` in one more variable."""
    if not is_well_rounded(h):
        raise NotWellRounded("only well-rounded forms can be inflated")
    m = h.min
    n = h.dim
    rows = [list(r) + [0] for r in h.gram] + [[0] * n + [m]]
    return GramForm(rows, name=f"{h.name}~" if h.name else "")


def primitive_integral(mat: Sequence[Sequence[Fraction]]) -> list[list[int]]:
    """Rescale a rational symmetric matrix to a primitive integral one."""
    dens = [Fraction(x).denominator for row in mat for x in row]
    lcm = reduce(lambda a, b: a * b // gcd(a, b), dens, 1)
    ints = [[int(Fraction(x) * lcm) for x in row] for row in mat]
    g = reduce(gcd, (abs(x) for row in ints for x in row), 0)
    if g > 1:
        ints = [[x // g for x in row] for row in ints]
    return ints


def a_n_form(n: int) -> GramForm:
    """The root lattice A_N: 2 on the diagonal, 1 elsewhere."""
    return GramForm([[2 if i == j else 1 for j in range(n)] for i in range(n)], name=f"A{n}")


# ---------------------------------------------------------------- forms file


def write_forms(forms: Sequence[GramForm], header: str = "") -> str:
    lines = []
    for ln in header.splitlines():
        lines.append(f"# {ln}" if ln else "#")
    for i, h in enumerate(forms):
        lines.append(f"form {h.name or f'P{h.dim}_{i + 1}'}")
        lines.append(f"dim {h.dim}")
        for row in h.gram:
            lines.append(" ".join(str(x) for x in row))
    return "\n".join(lines) + "\n"


def read_forms(text: str) -> list[GramForm]:
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    forms = []
    i = 0
    while i < len(lines):
        tag, _, name = lines[i].partition(" ")
        if tag != "form":
            raise ValueError(f"expected 'form', got {lines[i]!r}")
        tag, _, dim = lines[i + 1].partition(" ")
        if tag != "dim":
            raise ValueError(f"expected 'dim', got {lines[i + 1]!r}")
        n = int(dim)
        rows = [[int(x) for x in lines[i + 2 + k].split()] for k in range(n)]
        forms.append(GramForm(rows, name=name.strip()))
        i += 2 + n
    return forms
