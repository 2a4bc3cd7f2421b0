"""Brute-force reference computations, written without any library code.

Everything here enumerates permutations or subsets directly; it is slow and
only meant for the tiny instances the tests use.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np


def degrees(vertices, edges):
    deg = {v: 0 for v in vertices}
    for e in edges:
        for v in e:
            deg[v] += 1
    return deg


def connected(vertices, edges):
    vertices = list(vertices)
    if len(vertices) <= 1:
        return True
    seen, stack = {vertices[0]}, [vertices[0]]
    while stack:
        v = stack.pop()
        for e in edges:
            if v in e:
                for u in e:
                    if u not in seen:
                        seen.add(u)
                        stack.append(u)
    return len(seen) == len(vertices)


def without(vertices, edges, v):
    rest = [u for u in vertices if u != v]
    trimmed = [set(e) - {v} for e in edges]
    return rest, [e for e in trimmed if e]


def is_block(vertices, edges, m, p):
    """Degrees in {1, 2}, exactly two leaves, connected, and still connected after any single deletion."""
    if len(vertices) != m * p + 1 or len(edges) != 2 * m:
        return False
    deg = degrees(vertices, edges)
    if any(d not in (1, 2) for d in deg.values()):
        return False
    if sum(1 for d in deg.values() if d == 1) != 2:
        return False
    if not connected(vertices, edges):
        return False
    return all(connected(*without(vertices, edges, v)) for v in vertices)


def automorphism_count(vertices, edges, fixed=()):
    vertices = list(vertices)
    E = frozenset(frozenset(e) for e in edges)
    count = 0
    for perm in itertools.permutations(vertices):
        pi = dict(zip(vertices, perm))
        if any(pi[v] != v for v in fixed):
            continue
        if frozenset(frozenset(pi[v] for v in e) for e in E) == E:
            count += 1
    return count


def relabelings(vertices, edges):
    """Every edge set obtained from ``edges`` by a permutation of ``vertices``."""
    vertices = list(vertices)
    out = set()
    for perm in itertools.permutations(vertices):
        pi = dict(zip(vertices, perm))
        out.add(frozenset(frozenset(pi[v] for v in e) for e in edges))
    return out


def block_classes(m, p):
    """All isomorphism classes of blocks on m*p+1 vertices, with automorphism data."""
    N = m * p + 1
    verts = list(range(N))
    seen, reps = set(), []
    for E in itertools.combinations(itertools.combinations(verts, p), 2 * m):
        key = frozenset(frozenset(e) for e in E)
        if key in seen or not is_block(verts, E, m, p):
            continue
        orbit = relabelings(verts, E)
        seen |= orbit
        reps.append((E, len(orbit)))
    out = []
    for E, orbit_size in reps:
        deg = degrees(verts, E)
        a, _ = [v for v in verts if deg[v] == 1]
        aut = automorphism_count(verts, E)
        assert aut * orbit_size == math.factorial(N)
        stab_a = automorphism_count(verts, E, fixed=(a,))
        out.append({"edges": E, "aut": aut, "stab_a": stab_a, "leaves_in_one_orbit": aut == 2 * stab_a})
    return out


def beta_diamond(classes):
    """Sum over block classes and leaf orbits of 1/|Aut_v(U)|."""
    total = Fraction(0)
    for c in classes:
        aut = c["aut"]
        if c["leaves_in_one_orbit"]:
            total += Fraction(1, aut // 2)
        else:
            total += 2 * Fraction(1, aut)
    return total


def labeled_copies(vertices, edges, n):
    """Number of distinct edge sets in K_n isomorphic to the given hypergraph."""
    vertices = list(vertices)
    seen = set()
    for image in itertools.permutations(range(n), len(vertices)):
        pi = dict(zip(vertices, image))
        seen.add(frozenset(frozenset(pi[v] for v in e) for e in edges))
    return len(seen)


def copies_with_leaves(vertices, edges, n, leaf_pair):
    """Distinct copies in K_n whose two leaves map onto the given vertex pair."""
    vertices = list(vertices)
    deg = degrees(vertices, edges)
    leaves = [v for v in vertices if deg[v] == 1]
    seen = set()
    for image in itertools.permutations(range(n), len(vertices)):
        pi = dict(zip(vertices, image))
        if {pi[v] for v in leaves} != set(leaf_pair):
            continue
        seen.add(frozenset(frozenset(pi[v] for v in e) for e in edges))
    return seen


def colorful_sum(dense, vertices, edges, colors, leaf_pair=None):
    """Sum of prod Y_e over distinct copies in K_n with pairwise distinct vertex colors."""
    n = dense.shape[0]
    vertices = list(vertices)
    deg = degrees(vertices, edges)
    leaves = [v for v in vertices if deg[v] == 1]
    seen = {}
    for image in itertools.permutations(range(n), len(vertices)):
        if len({colors[u] for u in image}) != len(image):
            continue
        pi = dict(zip(vertices, image))
        if leaf_pair is not None and {pi[v] for v in leaves} != set(leaf_pair):
            continue
        key = frozenset(frozenset(pi[v] for v in e) for e in edges)
        if key not in seen:
            seen[key] = math.prod(dense[tuple(sorted(e))] for e in key)
    return float(sum(seen.values()))


def surjective_coloring(n, K, seed):
    """Random colors in [K] with every color used at least once (n >= K)."""
    rng = np.random.default_rng(seed)
    c = rng.integers(0, K, size=n)
    c[rng.permutation(n)[:K]] = np.arange(K)
    return c


def necklace_of_triangles(ell):
    """ell copies of the two-edge 3-uniform block glued leaf-to-leaf in a cycle."""
    edges = []
    N = 3 * ell
    for i in range(ell):
        a, b, c, d = 3 * i, 3 * i + 1, 3 * i + 2, (3 * i + 3) % N
        edges += [(a, b, c), (b, c, d)]
    return list(range(N)), edges


def chain_of_triangles(ell):
    edges = []
    for i in range(ell):
        a, b, c, d = 3 * i, 3 * i + 1, 3 * i + 2, 3 * i + 3
        edges += [(a, b, c), (b, c, d)]
    return list(range(3 * ell + 1)), edges


def automorphism_count_backtrack(vertices, edges, fixed=(), swap=None):
    """|Aut| by extending a vertex map one vertex at a time.

    A partial map is abandoned as soon as some edge lying inside the mapped
    vertices has a non-edge as its image.  ``swap=(a, b)`` counts only the
    automorphisms sending a to b and b to a.
    """
    vertices = list(vertices)
    E = {frozenset(e) for e in edges}
    inc = {v: [e for e in E if v in e] for v in vertices}
    # breadth-first order keeps each new vertex adjacent to mapped ones
    order, seen = [], set()
    for root in vertices:
        if root in seen:
            continue
        queue = [root]
        seen.add(root)
        while queue:
            v = queue.pop(0)
            order.append(v)
            for e in inc[v]:
                for u in sorted(e):
                    if u not in seen:
                        seen.add(u)
                        queue.append(u)
    forced = {v: v for v in fixed}
    if swap is not None:
        a, b = swap
        forced.update({a: b, b: a})
    deg = {v: len(inc[v]) for v in vertices}
    phi, used = {}, set()

    def consistent(v):
        for e in inc[v]:
            if all(u in phi for u in e) and frozenset(phi[u] for u in e) not in E:
                return False
        return True

    def rec(i):
        if i == len(order):
            return 1
        v = order[i]
        choices = [forced[v]] if v in forced else vertices
        total = 0
        for u in choices:
            if u in used or deg[u] != deg[v]:
                continue
            phi[v] = u
            used.add(u)
            if consistent(v):
                total += rec(i + 1)
            del phi[v]
            used.discard(u)
        return total

    return rec(0)
