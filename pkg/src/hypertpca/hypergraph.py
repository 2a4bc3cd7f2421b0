"""Labeled hypergraphs, canonical forms and automorphism groups.

Canonical labeling is individualization-refinement on the vertex/edge
incidence structure: colors are refined until stable, the first smallest
non-singleton cell is branched on, and the lexicographically least edge list
over all leaves of the search tree is the certificate.  Automorphisms found
along the way prune sibling branches.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Hashable, Iterable, Sequence

from hypertpca.errors import CapacityError, ShapeError

CANON_MAX_VERTICES = 64
VERIFY_MAX_VERTICES = 20


@dataclass(frozen=True)
class Hypergraph:
    """Vertex tuple plus a tuple of edges, each edge a sorted vertex tuple.

    Edges need not share one arity (induced subhypergraphs truncate edges),
    but every edge is a nonempty set of distinct vertices of the hypergraph.
    """

    vertices: tuple
    edges: tuple

    def __init__(self, vertices: Iterable[Hashable], edges: Iterable[Iterable[Hashable]] = ()):
        verts = tuple(vertices)
        if len(set(verts)) != len(verts):
            raise ShapeError("duplicate vertex ids")
        vset = set(verts)
        es = []
        for e in edges:
            e = tuple(sorted(e))
            if not e:
                raise ShapeError("empty edge")
            if len(set(e)) != len(e):
                raise ShapeError(f"edge {e} repeats a vertex")
            if not vset.issuperset(e):
                raise ShapeError(f"edge {e} uses vertices outside the vertex set")
            es.append(e)
        es.sort()
        if len(set(es)) != len(es):
            raise ShapeError("duplicate edges")
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "edges", tuple(es))

    @classmethod
    def from_edges(cls, edges):
        edges = [tuple(e) for e in edges]
        return cls(sorted({v for e in edges for v in e}), edges)

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @property
    def uniformity(self):
        """The common edge size, or None if edges differ in size (or no edges)."""
        sizes = {len(e) for e in self.edges}
        return sizes.pop() if len(sizes) == 1 else None

    def incidence(self) -> dict:
        inc = {v: [] for v in self.vertices}
        for e in self.edges:
            for v in e:
                inc[v].append(e)
        return inc

    def relabel(self, mapping) -> "Hypergraph":
        return Hypergraph([mapping[v] for v in self.vertices], [[mapping[v] for v in e] for e in self.edges])

    def edge_set(self) -> frozenset:
        return frozenset(self.edges)


def degree(H: Hypergraph, v) -> int:
    if v not in set(H.vertices):
        raise KeyError(f"vertex {v!r} not in hypergraph")
    return sum(1 for e in H.edges if v in e)


def degrees(H: Hypergraph) -> dict:
    deg = {v: 0 for v in H.vertices}
    for e in H.edges:
        for v in e:
            deg[v] += 1
    return deg


def leaves(H: Hypergraph) -> frozenset:
    return frozenset(v for v, d in degrees(H).items() if d == 1)


def is_connected(H: Hypergraph) -> bool:
    """Connectivity of the projected graph; the empty hypergraph counts as connected."""
    if H.num_vertices <= 1:
        return True
    inc = H.incidence()
    start = H.vertices[0]
    seen = {start}
    queue = deque([start])
    while queue:
        v = queue.popleft()
        for e in inc[v]:
            for u in e:
                if u not in seen:
                    seen.add(u)
                    queue.append(u)
    return len(seen) == H.num_vertices


def induced(H: Hypergraph, X) -> Hypergraph:
    """H restricted to X, keeping every nonempty truncated edge e & X."""
    X = [v for v in H.vertices if v in set(X)]
    keep = set(X)
    es = {tuple(v for v in e if v in keep) for e in H.edges}
    return Hypergraph(X, [e for e in es if e])


def induced_without(H: Hypergraph, v) -> Hypergraph:
    return induced(H, [u for u in H.vertices if u != v])


# --- refinement ------------------------------------------------------------


def _refine(verts, inc, colors: dict) -> dict:
    """Equitable refinement: split cells by the multiset of edge color-profiles."""
    ncolors = len(set(colors.values()))
    while True:
        sig = {}
        for v in verts:
            prof = sorted(tuple(sorted(colors[u] for u in e)) for e in inc[v])
            sig[v] = (colors[v], tuple(prof))
        ranks = {s: i for i, s in enumerate(sorted(set(sig.values())))}
        new = {v: ranks[sig[v]] for v in verts}
        k = len(ranks)
        colors = new
        if k == ncolors:
            return colors
        ncolors = k


def _initial_colors(H: Hypergraph) -> dict:
    deg = degrees(H)
    inc = H.incidence()
    sizes = {v: tuple(sorted(len(e) for e in inc[v])) for v in H.vertices}
    keys = {v: (deg[v], sizes[v]) for v in H.vertices}
    ranks = {s: i for i, s in enumerate(sorted(set(keys.values())))}
    return {v: ranks[keys[v]] for v in H.vertices}


def _individualize(colors: dict, v) -> dict:
    return {u: 2 * c + (0 if u == v else 1) for u, c in colors.items()}


def _cells(colors: dict) -> dict:
    cells = {}
    for v, c in colors.items():
        cells.setdefault(c, []).append(v)
    return cells


class _UnionFind:
    def __init__(self, items):
        self.parent = {x: x for x in items}

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


@dataclass(frozen=True)
class CanonicalClass:
    key: bytes
    aut_size: int
    representative: Hypergraph
    generators: tuple = ()

    @property
    def hex(self) -> str:
        return self.key.hex()


def _certificate(H: Hypergraph, lab: dict) -> tuple:
    return (H.num_vertices, tuple(sorted(tuple(sorted(lab[u] for u in e)) for e in H.edges)))


def _encode(cert) -> bytes:
    nv, edges = cert
    body = ";".join(",".join(str(i) for i in e) for e in edges)
    return f"{nv}|{body}".encode()


def canonical_class(H: Hypergraph, max_vertices: int = CANON_MAX_VERTICES) -> CanonicalClass:
    """Isomorphism-invariant key, automorphism group order and canonical representative."""
    if H.num_vertices > max_vertices:
        raise CapacityError(f"canonical labeling capped at {max_vertices} vertices, got {H.num_vertices}")
    verts = H.vertices
    inc = H.incidence()
    state = {"best": None, "best_lab": None, "seen": {}, "auts": []}

    def orbit_rep(prefix, explored, v):
        usable = [g for g in state["auts"] if all(g[u] == u for u in prefix)]
        if not usable or not explored:
            return False
        uf = _UnionFind(verts)
        for g in usable:
            for a, b in g.items():
                uf.union(a, b)
        rv = uf.find(v)
        return any(uf.find(u) == rv for u in explored)

    def search(colors, prefix):
        colors = _refine(verts, inc, colors)
        cells = _cells(colors)
        if len(cells) == len(verts):
            cert = _certificate(H, colors)
            seen = state["seen"]
            if cert in seen:
                other = seen[cert]
                back = {c: u for u, c in other.items()}
                g = {v: back[colors[v]] for v in verts}
                if any(g[v] != v for v in verts):
                    state["auts"].append(g)
            else:
                seen[cert] = colors
            if state["best"] is None or cert < state["best"]:
                state["best"], state["best_lab"] = cert, colors
            return
        target = min((len(c), col) for col, c in cells.items() if len(c) > 1)[1]
        explored = []
        for v in cells[target]:
            if orbit_rep(prefix, explored, v):
                continue
            search(_individualize(colors, v), prefix + [v])
            explored.append(v)

    if verts:
        search(_initial_colors(H), [])
        lab = state["best_lab"]
        rep = H.relabel(lab)
        rep = Hypergraph(range(H.num_vertices), rep.edges)
        cert = state["best"]
    else:
        rep, cert = H, (0, ())
    gens = tuple(tuple(g[v] for v in verts) for g in state["auts"])
    return CanonicalClass(_encode(cert), _group_order(len(verts), verts, state["auts"]), rep, gens)


def _group_order(nv, verts, gens) -> int:
    if not gens:
        return 1
    from sympy.combinatorics import Permutation, PermutationGroup

    pos = {v: i for i, v in enumerate(verts)}
    perms = [Permutation([pos[g[v]] for v in verts]) for g in gens]
    return int(PermutationGroup(perms).order())


def is_isomorphic(H1: Hypergraph, H2: Hypergraph) -> bool:
    if (H1.num_vertices, H1.num_edges) != (H2.num_vertices, H2.num_edges):
        return False
    return canonical_class(H1).key == canonical_class(H2).key


# --- automorphisms and isomorphisms ----------------------------------------


def _search_order(H: Hypergraph, first: Sequence) -> list:
    """Vertices in BFS order over the projected graph, seeded by ``first``."""
    inc = H.incidence()
    order, seen = [], set()
    seeds = list(first) + list(H.vertices)
    for s in seeds:
        if s in seen:
            continue
        seen.add(s)
        queue = deque([s])
        while queue:
            v = queue.popleft()
            order.append(v)
            for e in inc[v]:
                for u in e:
                    if u not in seen:
                        seen.add(u)
                        queue.append(u)
    return order


def isomorphisms(H1: Hypergraph, H2: Hypergraph, fixed: dict | None = None, limit: int | None = None) -> list:
    """All bijections V(H1) -> V(H2) carrying E(H1) onto E(H2) that extend ``fixed``.

    Candidates are restricted by jointly refined colors of the disjoint union,
    and partial maps are rejected as soon as an edge of H1 lands off E(H2).
    """
    fixed = dict(fixed or {})
    if (H1.num_vertices, H1.num_edges) != (H2.num_vertices, H2.num_edges):
        return []
    if sorted(degrees(H1).values()) != sorted(degrees(H2).values()):
        return []
    # refine the disjoint union so colors are comparable across the two sides
    verts = [(0, v) for v in H1.vertices] + [(1, v) for v in H2.vertices]
    inc = {}
    for side, H in ((0, H1), (1, H2)):
        for v, es in H.incidence().items():
            inc[(side, v)] = [tuple((side, u) for u in e) for e in es]
    d1, d2 = degrees(H1), degrees(H2)
    colors = {(0, v): (d1[v], 0) for v in H1.vertices}
    colors.update({(1, v): (d2[v], 0) for v in H2.vertices})
    for k, (a, b) in enumerate(fixed.items()):
        if a not in d1 or b not in d2:
            raise KeyError(f"fixed pair {a!r}->{b!r} not in the vertex sets")
        colors[(0, a)] = colors[(1, b)] = (-1, k)
    ranks = {c: i for i, c in enumerate(sorted(set(colors.values())))}
    colors = _refine(verts, inc, {v: ranks[c] for v, c in colors.items()})

    edges2 = H2.edge_set()
    inc1 = H1.incidence()
    order = _search_order(H1, list(fixed))
    cand = {}
    for v in H1.vertices:
        cand[v] = [u for u in H2.vertices if colors[(1, u)] == colors[(0, v)]]
        if v in fixed:
            cand[v] = [fixed[v]] if fixed[v] in cand[v] else []
        if not cand[v]:
            return []
    out = []
    phi, used = {}, set()

    def ok(v):
        for e in inc1[v]:
            if all(u in phi for u in e):
                if tuple(sorted(phi[u] for u in e)) not in edges2:
                    return False
        return True

    def rec(i):
        if limit is not None and len(out) >= limit:
            return
        if i == len(order):
            out.append(dict(phi))
            return
        v = order[i]
        for u in cand[v]:
            if u in used:
                continue
            phi[v] = u
            used.add(u)
            if ok(v):
                rec(i + 1)
            del phi[v]
            used.discard(u)

    rec(0)
    return out


def automorphisms(H: Hypergraph, max_vertices: int = CANON_MAX_VERTICES) -> list:
    """Complete list of automorphisms as dicts vertex -> vertex."""
    if H.num_vertices > max_vertices:
        raise CapacityError(f"automorphism search capped at {max_vertices} vertices")
    return isomorphisms(H, H)


def automorphisms_fixing(H: Hypergraph, fixed: Sequence, max_vertices: int = CANON_MAX_VERTICES) -> list:
    """Automorphisms fixing every vertex of ``fixed`` pointwise."""
    if H.num_vertices > max_vertices:
        raise CapacityError(f"automorphism search capped at {max_vertices} vertices")
    return isomorphisms(H, H, {v: v for v in fixed})


@dataclass(frozen=True)
class VertexOrbitData:
    orbits: tuple
    stabilizer_sizes: tuple
    aut_size: int


def vertex_orbits(H: Hypergraph, auts: list | None = None, subset=None) -> VertexOrbitData:
    """Aut(H)-orbits of ``subset`` (default all vertices) and their stabilizer orders."""
    auts = automorphisms(H) if auts is None else auts
    pool = list(H.vertices if subset is None else [v for v in H.vertices if v in set(subset)])
    orbits, done = [], set()
    for v in pool:
        if v in done:
            continue
        orb = sorted({g[v] for g in auts}, key=H.vertices.index)
        orbits.append(tuple(orb))
        done.update(orb)
    stabs = tuple(sum(1 for g in auts if g[o[0]] == o[0]) for o in orbits)
    return VertexOrbitData(tuple(orbits), stabs, len(auts))


def leaf_orbits(H: Hypergraph, auts: list | None = None) -> VertexOrbitData:
    return vertex_orbits(H, auts, leaves(H))


def is_group(perms: list, vertices) -> bool:
    """Closure, identity and inverse membership for a list of permutation dicts."""
    keys = {tuple(g[v] for v in vertices) for g in perms}
    ident = tuple(vertices)
    if ident not in keys:
        return False
    for g in perms:
        inv = {b: a for a, b in g.items()}
        if tuple(inv[v] for v in vertices) not in keys:
            return False
        for h in perms:
            if tuple(g[h[v]] for v in vertices) not in keys:
                return False
    return True


def count_labeled_copies(H: Hypergraph, n: int, aut_size: int | None = None) -> int:
    """C(n, |V|) |V|! / |Aut(H)| -- labeled copies of H inside K_n."""
    k = H.num_vertices
    if n < k:
        return 0
    a = aut_size if aut_size is not None else len(automorphisms(H))
    return math.comb(n, k) * math.factorial(k) // a


# --- text format -----------------------------------------------------------


def format_hypergraph(H: Hypergraph) -> str:
    """First line ``p |V| |E|`` then one edge per line.  Vertices must be 0..|V|-1."""
    p = H.uniformity or 0
    lines = [f"{p} {H.num_vertices} {H.num_edges}"]
    lines += [" ".join(str(v) for v in e) for e in H.edges]
    return "\n".join(lines) + "\n"


def parse_hypergraph(text: str) -> Hypergraph:
    rows = [line.split() for line in text.strip().splitlines() if line.strip()]
    p, nv, ne = (int(x) for x in rows[0])
    edges = [tuple(int(x) for x in r) for r in rows[1:]]
    if len(edges) != ne:
        raise ShapeError(f"header announces {ne} edges, found {len(edges)}")
    if p and any(len(e) != p for e in edges):
        raise ShapeError(f"edge arity differs from header p={p}")
    return Hypergraph(range(nv), edges)
