import pytest

from voronoi_complex.forms import GramForm, a_n_form, is_perfect, minimal_vectors, vhat_coords
from voronoi_complex.isometry import automorphisms, perfect_forms_equivalent
from voronoi_complex.voronoi import (
    DegenerateCone,
    classify_perfect_forms,
    cone_facets,
    contiguous_form,
    facet_orbits,
    perfect_cone,
)
from test_forms import D5


def _dot(a, b):
    return sum(x * y for x, y in zip(a, b))


def test_simplicial_cone():
    facets = cone_facets([(1, 0, 0), (0, 1, 0), (0, 0, 1)])
    assert len(facets) == 3
    assert all(len(f.incident) == 2 for f in facets)


def test_degenerate():
    with pytest.raises(DegenerateCone):
        cone_facets([(1, 0), (2, 0)])
    with pytest.raises(DegenerateCone):
        cone_facets([(0, 0), (1, 0)])


@pytest.mark.parametrize("backend", ["dd", "cdd", "brute"])
def test_a2_cone(backend):
    cone = perfect_cone(a_n_form(2), backend)
    assert len(cone.rays) == 3 and len(cone.facets) == 3


@pytest.mark.parametrize("n", [3, 4])
def test_backends_agree(n):
    for h in classify_perfect_forms(n):
        rays = [vhat_coords(v) for v in minimal_vectors(h)[1]]
        brute = cone_facets(rays, "brute")
        for backend in ("dd", "cdd"):
            assert cone_facets(rays, backend) == brute


def test_facet_normals_are_supporting():
    h = GramForm(D5)
    rays = [vhat_coords(v) for v in minimal_vectors(h)[1]]
    facets = cone_facets(rays, "dd")
    assert [f.incident for f in facets] == [f.incident for f in cone_facets(rays, "cdd")]
    for f in facets:
        for i, r in enumerate(rays):
            val = _dot(f.normal, r)
            assert (val == 0) == (i in f.incident)
            assert val >= 0


def test_classification_counts():
    assert [len(classify_perfect_forms(n)) for n in (2, 3, 4, 5)] == [1, 1, 2, 3]


def test_rank5_classes():
    forms = classify_perfect_forms(5)
    counts = sorted(len(minimal_vectors(h)[1]) for h in forms)
    assert counts == [15, 15, 20]
    assert all(is_perfect(h) for h in forms)


def test_rank2_neighbors_equivalent():
    h = a_n_form(2)
    for f in perfect_cone(h).facets:
        nb = contiguous_form(h, f)
        assert perfect_forms_equivalent(nb, h) is not None


@pytest.mark.parametrize("n", [3, 4, 5])
def test_contiguity_is_symmetric(n):
    for h in classify_perfect_forms(n):
        cone = perfect_cone(h)
        aut = automorphisms(h, cone.pairs)
        for orb in facet_orbits([f.mask for f in cone.facets], aut.pair_permutations()):
            f = cone.facets[orb[0]]
            nb = contiguous_form(h, f)
            assert is_perfect(nb)
            shared = set(minimal_vectors(nb)[1]) & set(cone.pairs)
            # the facet's vectors stay minimal on the neighbour
            assert {cone.pairs[i] for i in f.incident} <= shared
            back_cone = perfect_cone(nb)
            back = [g for g in back_cone.facets if {back_cone.pairs[i] for i in g.incident} == {cone.pairs[i] for i in f.incident}]
            assert len(back) == 1
            assert perfect_forms_equivalent(contiguous_form(nb, back[0]), h) is not None


def test_d4_reaches_a4():
    forms = classify_perfect_forms(4)
    dets = sorted((h.det(), len(minimal_vectors(h)[1])) for h in forms)
    assert dets == [(4, 12), (5, 10)]
