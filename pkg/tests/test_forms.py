import itertools

import pytest
from hypothesis import given, settings, strategies as st

from voronoi_complex.forms import (
    GramForm,
    NotPositiveDefinite,
    NotWellRounded,
    a_n_form,
    inflate,
    is_perfect,
    is_positive_definite,
    is_well_rounded,
    minimal_vectors,
    normalize_vector,
    primitive_integral,
    read_forms,
    short_vectors,
    vhat,
    vhat_coords,
    write_forms,
)
from voronoi_complex.isometry import mat_mul, transpose

D5 = [[2, 1, 1, 1, 0], [1, 2, 1, 1, 1], [1, 1, 2, 1, 1], [1, 1, 1, 2, 1], [0, 1, 1, 1, 2]]


def brute_short(gram, bound, box=4):
    n = len(gram)
    out = set()
    for x in itertools.product(range(-box, box + 1), repeat=n):
        if any(x):
            v = sum(gram[i][j] * x[i] * x[j] for i in range(n) for j in range(n))
            if v <= bound:
                out.add((v, normalize_vector(x)))
    return sorted(out)


def random_unimodular(draw_ops, n):
    g = [[int(i == j) for j in range(n)] for i in range(n)]
    for i, j, c in draw_ops:
        i, j = i % n, j % n
        if i != j:
            e = [[int(a == b) for b in range(n)] for a in range(n)]
            e[i][j] = c
            g = mat_mul(g, e)
    return [list(r) for r in g]


ops = st.lists(st.tuples(st.integers(0, 5), st.integers(0, 5), st.integers(-1, 1)), max_size=6)


def test_d5_minimal_vectors():
    h = GramForm(D5)
    m, pairs = minimal_vectors(h)
    assert m == 2 and len(pairs) == 20
    assert is_perfect(h)


def test_not_perfect_and_not_well_rounded():
    assert not is_perfect(GramForm([[2, 0], [0, 2]]))
    assert is_well_rounded(GramForm([[2, 0], [0, 2]]))
    assert not is_well_rounded(GramForm([[2, 0], [0, 4]]))
    with pytest.raises(NotWellRounded):
        inflate(GramForm([[2, 0], [0, 4]]))


def test_rejects_indefinite():
    with pytest.raises(NotPositiveDefinite):
        GramForm([[1, 2], [2, 1]])
    with pytest.raises(ValueError):
        GramForm([[1, 0], [1, 1]])


@pytest.mark.parametrize("n", [2, 3, 4])
def test_short_vectors_match_brute_force(n):
    g = a_n_form(n).gram
    assert short_vectors(g, 4) == brute_short(g, 4, box=3)


@given(ops, st.integers(2, 4))
@settings(max_examples=40, deadline=None)
def test_minimum_is_invariant(op_list, n):
    h = a_n_form(n)
    g = random_unimodular(op_list, n)
    h2 = GramForm(mat_mul(mat_mul(transpose(g), h.gram), g))
    m1, p1 = minimal_vectors(h)
    m2, p2 = minimal_vectors(h2)
    assert m1 == m2 and len(p1) == len(p2)
    assert h.det() == h2.det()


@given(st.lists(st.integers(-3, 3), min_size=2, max_size=5).filter(any))
def test_vhat_rank_one(v):
    vh = vhat(v)
    assert vh == tuple(tuple(a * b for b in v) for a in v)
    n = len(v)
    assert len(vhat_coords(v)) == n * (n + 1) // 2
    assert vhat(normalize_vector(v)) == vh


def test_inflate_a2():
    h = inflate(a_n_form(2))
    assert h.gram == ((2, 1, 0), (1, 2, 0), (0, 0, 2))
    assert len(minimal_vectors(h)[1]) == 4


def test_primitive_integral():
    from fractions import Fraction

    assert primitive_integral([[Fraction(1, 2), Fraction(1, 4)], [Fraction(1, 4), 1]]) == [[2, 1], [1, 4]]


def test_forms_file_roundtrip():
    forms = [a_n_form(3), GramForm(D5, name="P5_1")]
    text = write_forms(forms, header="two forms")
    back = read_forms(text)
    assert [f.gram for f in back] == [f.gram for f in forms]
    assert back[1].name == "P5_1"
    assert write_forms(back, header="two forms") == text


def test_sylvester():
    assert is_positive_definite([[2, 1], [1, 2]])
    assert not is_positive_definite([[1, 1], [1, 1]])
