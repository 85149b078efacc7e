import itertools

import pytest
from hypothesis import given, settings, strategies as st
from sympy.combinatorics import Permutation, PermutationGroup

from voronoi_complex.exact_linalg import bareiss_det
from voronoi_complex.forms import GramForm, a_n_form, minimal_vectors
from voronoi_complex.isometry import (
    DimensionMismatch,
    SpanDeficient,
    automorphisms,
    forms_equivalent,
    group_order,
    mat_mul,
    mat_vec,
    perfect_forms_equivalent,
    sl_subgroup,
    transpose,
)
from voronoi_complex.voronoi import classify_perfect_forms
from test_forms import D5, ops, random_unimodular


def check_automorphisms(b, pairs, grp):
    ps = set(pairs)
    for m, det in zip(grp.matrices, grp.generator_dets):
        assert abs(bareiss_det(m)) == 1 and bareiss_det(m) == det
        for v in pairs:
            w = mat_vec(m, v)
            assert w in ps or tuple(-x for x in w) in ps


def test_group_order_small():
    assert group_order([]) == 1
    assert group_order([(1, 2, 0)]) == 3
    assert group_order([(1, 0, 2, 3), (0, 1, 3, 2)]) == 4


@given(st.lists(st.permutations(list(range(7))), min_size=1, max_size=3))
@settings(max_examples=60, deadline=None)
def test_group_order_matches_sympy(perms):
    expected = PermutationGroup([Permutation(p) for p in perms]).order()
    assert group_order([tuple(p) for p in perms]) == expected


def test_identity_form_rank2():
    grp = automorphisms(GramForm([[1, 0], [0, 1]]), [(0, 1), (1, 0)])
    # brute force over all integer matrices with entries in {-1, 0, 1}
    count = 0
    for a, b, c, d in itertools.product((-1, 0, 1), repeat=4):
        m = ((a, b), (c, d))
        if abs(a * d - b * c) == 1 and mat_mul(transpose(m), m) == ((1, 0), (0, 1)):
            count += 1
    assert grp.order == count == 8


def test_d5_orders():
    h = GramForm(D5)
    pairs = minimal_vectors(h)[1]
    grp = automorphisms(h, pairs)
    assert grp.order == 3840
    assert group_order(grp.generators) == 3840
    check_automorphisms(h.gram, pairs, grp)
    sl = sl_subgroup(grp)
    assert sl.order == 1920
    assert group_order(sl.generators) == 1920
    assert all(bareiss_det(m) == 1 for m in sl.matrices)


def test_rank5_top_orders():
    orders = sorted(automorphisms(h, minimal_vectors(h)[1]).order for h in classify_perfect_forms(5))
    assert orders == [1440, 1440, 3840]


def test_span_deficient():
    with pytest.raises(SpanDeficient):
        automorphisms([[1, 0], [0, 0]], [(1, 0)])


def test_reflexive():
    h = a_n_form(3)
    w = forms_equivalent(h, h)
    assert w is not None
    assert mat_mul(mat_mul(transpose(w.matrix), h.gram), w.matrix) == h.gram


def test_determinant_obstruction():
    assert forms_equivalent(a_n_form(2), GramForm([[2, 0], [0, 2]])) is None
    with pytest.raises(DimensionMismatch):
        forms_equivalent(a_n_form(2), a_n_form(3))


@given(ops, st.sampled_from(["GL", "SL"]))
@settings(max_examples=30, deadline=None)
def test_random_equivalence(op_list, group):
    h = GramForm(D5)
    g = random_unimodular(op_list, 5)
    h2 = GramForm(mat_mul(mat_mul(transpose(g), h.gram), g))
    for fn in (forms_equivalent, perfect_forms_equivalent):
        w = fn(h, h2, group)
        assert w is not None
        assert mat_mul(mat_mul(transpose(w.matrix), h.gram), w.matrix) == h2.gram
        if group == "SL":
            assert w.det == 1 == bareiss_det(w.matrix)


def test_equivalence_symmetric_transitive():
    h = a_n_form(4)
    g1 = random_unimodular([(0, 1, 1), (2, 3, -1)], 4)
    g2 = random_unimodular([(1, 2, 1), (3, 0, 1)], 4)
    h1 = GramForm(mat_mul(mat_mul(transpose(g1), h.gram), g1))
    h2 = GramForm(mat_mul(mat_mul(transpose(g2), h1.gram), g2))
    a = forms_equivalent(h, h1)
    b = forms_equivalent(h1, h2)
    c = forms_equivalent(h2, h)
    assert a and b and c
    comp = mat_mul(mat_mul(a.matrix, b.matrix), c.matrix)
    assert mat_mul(mat_mul(transpose(comp), h.gram), comp) == h.gram
