import itertools
import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hypertpca.errors import CapacityError, ShapeError
from hypertpca.hypergraph import (
    Hypergraph,
    automorphisms,
    automorphisms_fixing,
    canonical_class,
    degree,
    format_hypergraph,
    induced,
    induced_without,
    is_connected,
    is_group,
    is_isomorphic,
    leaf_orbits,
    leaves,
    parse_hypergraph,
    vertex_orbits,
)

from oracles import automorphism_count

PATH = Hypergraph("abcd", [("a", "b", "c"), ("b", "c", "d")])


@st.composite
def small_hypergraphs(draw, max_vertices=7):
    nv = draw(st.integers(1, max_vertices))
    p = draw(st.integers(1, min(3, nv)))
    all_edges = list(itertools.combinations(range(nv), p))
    edges = draw(st.lists(st.sampled_from(all_edges), unique=True, max_size=6))
    return Hypergraph(range(nv), edges)


def shuffled(H, rng):
    verts = list(H.vertices)
    perm = verts[:]
    rng.shuffle(perm)
    return H.relabel(dict(zip(verts, perm)))


def test_degree_and_leaves():
    assert degree(PATH, "b") == 2
    assert leaves(PATH) == {"a", "d"}
    with pytest.raises(KeyError):
        degree(PATH, "z")


def test_connectivity_basics():
    assert is_connected(Hypergraph([0]))
    assert not is_connected(Hypergraph(range(6), [(0, 1, 2), (3, 4, 5)]))
    assert is_connected(PATH)


def test_induced_truncates_edges():
    H = induced_without(PATH, "a")
    assert set(H.edges) == {("b", "c"), ("b", "c", "d")}
    assert is_connected(H)
    assert induced(PATH, PATH.vertices).edges == PATH.edges
    assert induced(PATH, []).num_vertices == 0


def test_bad_edges_are_rejected():
    with pytest.raises(ShapeError):
        Hypergraph([0, 1], [(0, 2)])
    with pytest.raises(ShapeError):
        Hypergraph([0, 1, 2], [(0, 1), (1, 0)])
    with pytest.raises(ShapeError):
        Hypergraph([0, 1], [(0, 0)])


def test_path_automorphisms():
    assert len(automorphisms(PATH)) == 4
    assert len(automorphisms_fixing(PATH, ["a"])) == 2
    assert automorphism_count("abcd", PATH.edges) == 4
    assert automorphism_count("abcd", PATH.edges, fixed="a") == 2


def test_empty_hypergraph_has_full_symmetric_group():
    H = Hypergraph(range(5))
    assert len(automorphisms(H)) == 120
    assert canonical_class(H).aut_size == 120


def test_path_leaf_orbits():
    orb = leaf_orbits(PATH)
    assert orb.orbits == (("a", "d"),)
    assert orb.stabilizer_sizes == (2,)


def test_rigid_hypergraph_has_singleton_leaf_orbits():
    H = Hypergraph(range(6), [(0, 3, 4), (1, 3, 5), (1, 4, 5), (2, 3, 5)])
    assert automorphism_count(range(6), H.edges) == 1
    orb = leaf_orbits(H)
    assert all(len(o) == 1 for o in orb.orbits)
    assert sum(len(o) for o in orb.orbits) == len(leaves(H))


def test_distinct_two_edge_shapes_get_distinct_keys():
    share_two = Hypergraph(range(4), [(0, 1, 2), (1, 2, 3)])
    share_one = Hypergraph(range(5), [(0, 1, 2), (2, 3, 4)])
    assert canonical_class(share_two).key != canonical_class(share_one).key
    same_size = Hypergraph(range(5), [(0, 1, 2), (1, 2, 3)])
    assert canonical_class(same_size).key != canonical_class(share_one).key


def test_key_is_invariant_under_100_relabelings():
    H = Hypergraph(range(9), [(0, 1, 2), (1, 2, 3), (3, 4, 5), (4, 5, 6), (6, 7, 8), (7, 8, 0)])
    key = canonical_class(H).key
    rng = random.Random(0)
    for _ in range(100):
        assert canonical_class(shuffled(H, rng)).key == key


def test_capacity_bound():
    with pytest.raises(CapacityError):
        canonical_class(Hypergraph(range(5)), max_vertices=4)


@settings(max_examples=60, deadline=None)
@given(small_hypergraphs(), st.randoms(use_true_random=False))
def test_canonical_key_properties(H, rng):
    cc = canonical_class(H)
    assert canonical_class(shuffled(H, rng)).key == cc.key
    assert canonical_class(cc.representative).key == cc.key
    assert is_isomorphic(cc.representative, H)
    assert math.factorial(H.num_vertices) % cc.aut_size == 0


@settings(max_examples=40, deadline=None)
@given(small_hypergraphs(max_vertices=6))
def test_automorphism_list_matches_permutation_oracle(H):
    auts = automorphisms(H)
    assert len(auts) == automorphism_count(H.vertices, H.edges)
    assert canonical_class(H).aut_size == len(auts)
    assert is_group(auts, H.vertices)


@settings(max_examples=40, deadline=None)
@given(small_hypergraphs(max_vertices=6))
def test_orbit_stabilizer(H):
    data = vertex_orbits(H)
    for orbit, stab in zip(data.orbits, data.stabilizer_sizes):
        assert len(orbit) * stab == data.aut_size


@settings(max_examples=30, deadline=None)
@given(small_hypergraphs(max_vertices=6), small_hypergraphs(max_vertices=6))
def test_key_equality_agrees_with_bijection_search(A, B):
    if (A.num_vertices, A.num_edges) != (B.num_vertices, B.num_edges):
        return
    EB = {frozenset(e) for e in B.edges}
    brute = any(
        {frozenset(perm[v] for v in e) for e in A.edges} == EB
        for perm in itertools.permutations(range(A.num_vertices))
    )
    assert (canonical_class(A).key == canonical_class(B).key) == brute


def test_text_format_round_trip():
    H = Hypergraph(range(4), [(0, 1, 2), (1, 2, 3)])
    text = format_hypergraph(H)
    assert text.splitlines()[0] == "3 4 2"
    assert parse_hypergraph(text) == H
    with pytest.raises(ShapeError):
        parse_hypergraph("3 4 3\n0 1 2\n")
