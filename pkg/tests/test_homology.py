import copy
import random

import pytest

from voronoi_complex.cells import make_cell
from voronoi_complex.homology import (
    cohomology_report,
    differential,
    differential_table,
    epsilon,
    eta,
    homology,
    reorient,
    small_primes_only,
    v_dim,
    verify_chain,
)
from voronoi_complex.isometry import identity, transpose

SL4_TABLE = {
    4: (0, 1, 0, 0, 1, ""),
    5: (1, 1, 1, 1, 0, "1(1)"),
    6: (0, 1, 1, 0, 1, ""),
    7: (0, 0, 1, 0, 0, ""),
    8: (0, 1, 0, 0, 1, ""),
    9: (2, 2, 1, 1, 1, "2(1)"),
}
GL5_TABLE = {
    8: (0, 1, 0, 0, 1, ""),
    9: (2, 7, 1, 1, 6, "1(1)"),
    10: (18, 6, 7, 5, 1, "1(4), 2(1)"),
    11: (5, 1, 6, 1, 0, "1(1)"),
    12: (0, 0, 1, 0, 0, ""),
    13: (0, 2, 0, 0, 2, ""),
    14: (4, 3, 2, 2, 1, "5(1), 15(1)"),
}


def table(cx):
    return {r.n: r.as_tuple() for r in differential_table(cx)}


def test_sl4_table(sl4):
    got = table(sl4)
    assert {n: got[n] for n in SL4_TABLE} == SL4_TABLE


def test_gl5_table(gl5):
    got = table(gl5)
    assert {n: got[n] for n in GL5_TABLE} == GL5_TABLE


def test_chain(gl3, gl4, sl4, gl5, sl5):
    for cx in (gl3, gl4, sl4, gl5, sl5):
        assert verify_chain(cx)


def test_gl5_homology(gl5):
    groups = homology(gl5)
    free = {g.n: g.free_rank for g in groups if g.free_rank}
    assert free == {9: 1, 14: 1}
    assert small_primes_only(groups, 5)


def test_epsilon_independent_of_appended_vector(gl5):
    for n, orbs in gl5.face_orbits.items():
        for o in orbs:
            sigma = gl5.levels[n][o.sigma]
            face = make_cell([sigma.vectors[i] for i in range(len(sigma.vectors)) if o.face >> i & 1])
            epsilon(face, sigma, check_all=True)


def test_epsilon_eta_product(gl5):
    from voronoi_complex.cells import _incidence_sign

    for n, orbs in gl5.face_orbits.items():
        for o in orbs:
            sigma = gl5.levels[n][o.sigma]
            tau = gl5.levels[n - 1][o.tau]
            face = make_cell([sigma.vectors[i] for i in range(len(sigma.vectors)) if o.face >> i & 1])
            e = epsilon(face, sigma) * eta(tau, face, o.witness)
            assert e == _incidence_sign(tau, transpose(o.witness), sigma, o.face)


def test_eta_identity_and_prefix(gl5):
    tau = gl5.levels[13][0]
    assert eta(tau, tau, identity(5)) == 1
    sigma = gl5.levels[14][0]
    face = make_cell(sigma.vectors[:3])
    assert face.dim == 2
    with pytest.raises(Exception):
        epsilon(face, sigma)


def test_epsilon_flips_with_basis_swap(gl5):
    o = gl5.face_orbits[14][0]
    sigma = gl5.levels[14][o.sigma]
    face = make_cell([sigma.vectors[i] for i in range(len(sigma.vectors)) if o.face >> i & 1])
    e = epsilon(face, sigma)
    b = list(face.orientation_basis)
    b[0], b[1] = b[1], b[0]
    face.orientation_basis = tuple(b)
    assert epsilon(face, sigma) == -e


def test_random_reorientation_keeps_homology(gl5):
    base = table(gl5)
    rng = random.Random(7)
    for _ in range(3):
        cx = copy.deepcopy(gl5)
        for n in cx.levels:
            for i in cx.sigma(n):
                if rng.random() < 0.5:
                    reorient(cx, n, i)
        assert verify_chain(cx)
        got = table(cx)
        assert {n: got[n][3:] for n in got} == {n: base[n][3:] for n in base}


def test_cohomology_degrees(gl5, sl4):
    lines = cohomology_report(gl5, homology(gl5))
    assert [(c.vor_degree, c.degree) for c in lines] == [(14, 0), (9, 5)]
    assert all(c.coefficients == "Z" for c in lines)
    assert v_dim(5) + 5 - 1 - 14 == 0
    assert [c.degree for c in cohomology_report(sl4, homology(sl4))] == [0, 3]


def test_differential_shape(gl5):
    d = differential(gl5, 10)
    assert (d.matrix.nrows, d.matrix.ncols) == (7, 6)
    assert d.row_labels == gl5.sigma(9)
