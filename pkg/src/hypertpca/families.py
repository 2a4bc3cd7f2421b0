"""Block, necklace and chain hypergraph families and their weights.

A block is a connected p-uniform hypergraph on mp+1 vertices with 2m edges,
two leaves, every other vertex of degree 2, and no cut vertex.  Necklaces glue
l blocks leaf-to-leaf in a cycle; chains glue them in a path whose two end
leaves are fixed by every automorphism.

Blocks are referenced with an orientation: ``(index, 0)`` glues the block's
first stored leaf at the start junction, ``(index, 1)`` the second.  For a
block whose leaves are exchanged by an automorphism both orientations give the
same hypergraph and only orientation 0 is used.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path

from hypertpca.errors import CapacityError, FamilyError, ParameterError
from hypertpca.hypergraph import (
    CANON_MAX_VERTICES,
    Hypergraph,
    automorphisms,
    canonical_class,
    format_hypergraph,
    induced_without,
    is_connected,
    isomorphisms,
    leaf_orbits,
    leaves,
    parse_hypergraph,
)

# DFS nodes visited while enumerating blocks before giving up.
BLOCK_SEARCH_CAP = 20_000_000


@dataclass(frozen=True)
class BlockClass:
    representative: Hypergraph
    leaves: tuple  # (first, second) leaf of the representative
    aut_size: int
    leaf_orbit_count: int
    leaf_stabilizers: tuple
    both_leaf_stabilizer: int
    reversible: bool
    key: str = ""

    @property
    def interior(self) -> tuple:
        return tuple(v for v in self.representative.vertices if v not in self.leaves)

    def oriented_leaves(self, orientation: int) -> tuple:
        a, b = self.leaves
        return (a, b) if orientation == 0 else (b, a)


@dataclass(frozen=True)
class BlockFamily:
    m: int
    p: int
    classes: tuple

    @property
    def beta_u(self) -> Fraction:
        return sum((Fraction(1, c.aut_size) for c in self.classes), Fraction(0))

    @property
    def beta_diamond(self) -> Fraction:
        """Sum over classes and leaf orbits of 1/|Aut_v(U)|."""
        return sum(
            (Fraction(1, s) for c in self.classes for s in c.leaf_stabilizers),
            Fraction(0),
        )

    def oriented_refs(self) -> list:
        refs = []
        for i, c in enumerate(self.classes):
            refs.append((i, 0))
            if not c.reversible:
                refs.append((i, 1))
        return refs

    def normalize(self, ref) -> tuple:
        i, o = ref
        return (i, 0) if self.classes[i].reversible else (i, o)


def _satisfies_block_conditions(U: Hypergraph, m: int, p: int) -> bool:
    if U.num_vertices != m * p + 1 or U.num_edges != 2 * m:
        return False
    if any(len(e) != p for e in U.edges):
        return False
    deg = {v: 0 for v in U.vertices}
    for e in U.edges:
        for v in e:
            deg[v] += 1
    if any(d not in (1, 2) for d in deg.values()):
        return False
    if not is_connected(U):
        return False
    return all(is_connected(induced_without(U, v)) for v in U.vertices)


def _raw_block_candidates(m: int, p: int, cap: int):
    """Connected edge sets with degrees in {1, 2} rooted at a leaf (vertex 0).

    Vertices are labelled in order of first use and the lowest vertex that can
    still take an edge is always extended next, so every isomorphism class is
    reached at least once.
    """
    N, E = m * p + 1, 2 * m
    deg = [0] * N
    closed = [False] * N
    edges: list = []
    present: set = set()
    st = {"used": 1, "leaves": 0, "nodes": 0}
    out = []

    def capacity():
        used = st["used"]
        room = sum(2 - deg[i] for i in range(used) if not closed[i])
        return room + 2 * (N - used)

    def rec():
        st["nodes"] += 1
        if st["nodes"] > cap:
            raise CapacityError(f"block enumeration for m={m}, p={p} exceeded {cap} search nodes")
        if len(edges) == E:
            if st["used"] == N:
                out.append(tuple(edges))
            return
        if p * (E - len(edges)) > capacity():
            return
        used = st["used"]
        v = next((i for i in range(used) if not closed[i] and deg[i] < 2), None)
        if v is None:
            return
        if deg[v] == 1 and st["leaves"] < 2:
            closed[v] = True
            st["leaves"] += 1
            rec()
            st["leaves"] -= 1
            closed[v] = False
        if v == 0 and deg[0] == 1:
            return  # vertex 0 is the root leaf
        active = [u for u in range(v + 1, used) if not closed[u] and deg[u] < 2]
        for j in range(0, min(p - 1, N - used) + 1):
            fresh = list(range(used, used + j))
            for old in itertools.combinations(active, p - 1 - j):
                e = tuple(sorted((v, *old, *fresh)))
                if e in present:
                    continue
                edges.append(e)
                present.add(e)
                for u in e:
                    deg[u] += 1
                st["used"] = used + j
                rec()
                st["used"] = used
                for u in e:
                    deg[u] -= 1
                present.discard(e)
                edges.pop()

    rec()
    return out


def _make_block(U: Hypergraph, key: str) -> BlockClass:
    auts = automorphisms(U)
    orb = leaf_orbits(U, auts)
    a, b = sorted(leaves(U))
    both = sum(1 for g in auts if g[a] == a and g[b] == b)
    reversible = any(g[a] == b for g in auts)
    return BlockClass(
        representative=U,
        leaves=(a, b),
        aut_size=len(auts),
        leaf_orbit_count=len(orb.orbits),
        leaf_stabilizers=orb.stabilizer_sizes,
        both_leaf_stabilizer=both,
        reversible=reversible,
        key=key,
    )


def enumerate_blocks(m: int, p: int, cap: int = BLOCK_SEARCH_CAP) -> BlockFamily:
    """All isomorphism classes of blocks with parameters (m, p)."""
    if m < 1 or p < 2:
        raise ParameterError(f"need m >= 1 and p >= 2, got m={m}, p={p}")
    N = m * p + 1
    seen = {}
    for edges in _raw_block_candidates(m, p, cap):
        U = Hypergraph(range(N), edges)
        if not _satisfies_block_conditions(U, m, p):
            continue
        cc = canonical_class(U)
        if cc.key not in seen:
            seen[cc.key] = cc.representative
    classes = [_make_block(rep, key.hex()) for key, rep in sorted(seen.items())]
    return BlockFamily(m, p, tuple(classes))


# --- assembly --------------------------------------------------------------


def _assemble(blocks: BlockFamily, seq, closed: bool):
    """Glue oriented blocks; returns (hypergraph, junctions, per-block vertex maps)."""
    mp = blocks.m * blocks.p
    ell = len(seq)
    total = mp * ell + (0 if closed else 1)
    junctions = [(i * mp) % total for i in range(ell + 1)]
    edges, maps = [], []
    for i, (ci, o) in enumerate(seq):
        cls = blocks.classes[ci]
        start, end = cls.oriented_leaves(o)
        vmap = {start: junctions[i], end: junctions[i + 1]}
        for k, v in enumerate(cls.interior):
            vmap[v] = i * mp + 1 + k
        maps.append(vmap)
        edges.extend(tuple(vmap[v] for v in e) for e in cls.representative.edges)
    H = Hypergraph(range(total), edges)
    return H, tuple(junctions[:ell] if closed else junctions), tuple(maps)


def _used(blocks: BlockFamily, seq) -> tuple:
    return tuple(blocks.classes[c] for c, _ in seq)


def _rotate(seq, k):
    return tuple(seq[(i + k) % len(seq)] for i in range(len(seq)))


def _reflect(blocks: BlockFamily, seq):
    return tuple(blocks.normalize((c, 1 - o)) for c, o in reversed(seq))


def dihedral_images(blocks: BlockFamily, seq):
    """Yield ((k, sense), transformed sequence) for the 2l cycle symmetries."""
    refl = _reflect(blocks, seq)
    for k in range(len(seq)):
        yield (k, +1), _rotate(seq, k)
    for k in range(len(seq)):
        yield (k, -1), _rotate(refl, k)


@dataclass(frozen=True)
class NecklaceClass:
    block_sequence: tuple
    representative: Hypergraph
    junctions: tuple
    block_maps: tuple
    aut_size: int
    a_plus: int
    a_minus: int
    key: str = ""
    blocks: tuple = ()  # BlockClass at each position of block_sequence

    @property
    def symmetry_factor(self) -> int:
        return self.a_plus + self.a_minus

    @property
    def beta(self) -> Fraction:
        return Fraction(1, self.aut_size)


@dataclass(frozen=True)
class ChainClass:
    block_sequence: tuple
    representative: Hypergraph
    junctions: tuple
    block_maps: tuple
    aut_size: int
    key: str = ""
    reversal_symmetric: bool = False
    blocks: tuple = ()  # BlockClass at each position of block_sequence

    @property
    def symmetry_factor(self) -> int:
        """2 when an automorphism swaps the two end leaves, else 1."""
        return 2 if self.reversal_symmetric else 1

    @property
    def endpoints(self) -> tuple:
        return (self.junctions[0], self.junctions[-1])

    @property
    def beta(self) -> Fraction:
        return Fraction(1, self.aut_size)


@dataclass(frozen=True)
class Family:
    """A list of necklace or chain classes together with the blocks they use."""

    kind: str
    blocks: BlockFamily
    ell: int
    classes: tuple = field(default=())

    @property
    def m(self):
        return self.blocks.m

    @property
    def p(self):
        return self.blocks.p

    @property
    def beta(self) -> Fraction:
        return sum((c.beta for c in self.classes), Fraction(0))

    @property
    def num_vertices(self) -> int:
        mpl = self.m * self.p * self.ell
        return mpl + 1 if self.kind == "chain" else mpl


def _block_subgraph(H: Hypergraph, vmap: dict, cls: BlockClass) -> Hypergraph:
    return cls.representative.relabel(vmap)


def necklace_isomorphism_sets(blocks: BlockFamily, H, junctions, maps, seq):
    """Per (k, sense): the per-block isomorphism lists used to build Aut(H).

    For rotation k block i goes to block i+k with its start junction to the
    start junction; for reflection k block i goes to block k-i-1 with its start
    junction sent to that block's end junction.
    """
    ell = len(seq)
    subs = [_block_subgraph(H, maps[i], blocks.classes[c]) for i, (c, _) in enumerate(seq)]
    out = {}
    for sense in (+1, -1):
        for k in range(ell):
            per_block = []
            for i in range(ell):
                if sense > 0:
                    t = (i + k) % ell
                    fixed = {junctions[i]: junctions[t], junctions[(i + 1) % ell]: junctions[(t + 1) % ell]}
                else:
                    t = (k - i - 1) % ell
                    fixed = {junctions[i]: junctions[(t + 1) % ell], junctions[(i + 1) % ell]: junctions[t]}
                isos = isomorphisms(subs[i], subs[t], fixed)
                per_block.append(isos)
                if not isos:
                    break
            out[(k, sense)] = per_block
    return out


def aut_necklace_alg7(cls: NecklaceClass, blocks: BlockFamily, limit: int | None = None) -> list:
    """Aut(H) assembled from per-block isomorphisms over all 2l cycle symmetries."""
    sets = necklace_isomorphism_sets(blocks, cls.representative, cls.junctions, cls.block_maps, cls.block_sequence)
    out = []
    for per_block in sets.values():
        if len(per_block) < len(cls.block_sequence) or not all(per_block):
            continue
        for combo in itertools.product(*per_block):
            g = {}
            for part in combo:
                g.update(part)
            out.append(g)
            if limit is not None and len(out) >= limit:
                return out
    return out


def _alg7_counts(blocks, H, junctions, maps, seq):
    sets = necklace_isomorphism_sets(blocks, H, junctions, maps, seq)
    ell = len(seq)
    total, a_plus, a_minus = 0, 0, 0
    for (k, sense), per_block in sets.items():
        if len(per_block) < ell or not all(per_block):
            continue
        total += math.prod(len(x) for x in per_block)
        if sense > 0:
            a_plus += 1
        else:
            a_minus += 1
    return total, a_plus, a_minus


def _check_distinct(keys, what):
    if len(set(keys)) != len(keys):
        raise FamilyError(f"two {what} sequences produced isomorphic hypergraphs")


def build_necklaces(blocks: BlockFamily, ell: int, confirm: bool = True) -> list:
    """Necklace classes, one per dihedral orbit of oriented block sequences."""
    if ell < 3:
        raise ParameterError("necklaces need ell >= 3: at ell = 2 the two gluing junctions coincide")
    refs = blocks.oriented_refs()
    out = []
    for seq in itertools.product(refs, repeat=ell):
        if min(s for _, s in dihedral_images(blocks, seq)) != seq:
            continue
        H, junctions, maps = _assemble(blocks, seq, closed=True)
        aut, a_plus, a_minus = _alg7_counts(blocks, H, junctions, maps, seq)
        key = ""
        if confirm and H.num_vertices <= CANON_MAX_VERTICES:
            key = canonical_class(H).hex
        out.append(NecklaceClass(seq, H, junctions, maps, aut, a_plus, a_minus, key, _used(blocks, seq)))
    if confirm:
        _check_distinct([c.key for c in out if c.key], "necklace")
    return out


def assemble_chain(blocks: BlockFamily, seq) -> ChainClass:
    """Glue an oriented block sequence into a path, without the rigidity filter.

    A sequence equal to its own reversal yields a chain whose end leaves are
    swapped by an automorphism; its automorphism count and symmetry factor
    carry the extra factor 2.
    """
    seq = tuple(blocks.normalize(tuple(r)) for r in seq)
    if not seq:
        raise ParameterError("a chain needs at least one block")
    H, junctions, maps = _assemble(blocks, seq, closed=False)
    sym = _reflect(blocks, seq) == seq
    aut = math.prod(blocks.classes[c].both_leaf_stabilizer for c, _ in seq) * (2 if sym else 1)
    return ChainClass(seq, H, junctions, maps, aut, "", sym, _used(blocks, seq))


def build_chains(blocks: BlockFamily, ell: int, confirm: bool = True, include_symmetric: bool = False) -> list:
    """Chain classes; sequences equal to their own reversal are excluded.

    ``include_symmetric`` keeps those sequences too (as leaf-swappable chains),
    which is outside the rigid family but useful when the rigid one is empty.
    """
    if ell < 1:
        raise ParameterError("chains need ell >= 1")
    refs = blocks.oriented_refs()
    out = []
    for seq in itertools.product(refs, repeat=ell):
        rev = _reflect(blocks, seq)
        if rev < seq or (rev == seq and not include_symmetric):
            continue
        J = assemble_chain(blocks, seq)
        if confirm and J.representative.num_vertices <= CANON_MAX_VERTICES:
            J = replace(J, key=canonical_class(J.representative).hex)
        out.append(J)
    if confirm:
        _check_distinct([c.key for c in out if c.key], "chain")
    return out


def build_family(
    m: int, p: int, ell: int, kind: str, blocks: BlockFamily | None = None,
    confirm: bool = True, include_symmetric: bool = False,
) -> Family:
    blocks = blocks or enumerate_blocks(m, p)
    if kind == "necklace":
        classes = build_necklaces(blocks, ell, confirm)
    elif kind == "chain":
        classes = build_chains(blocks, ell, confirm, include_symmetric)
    elif kind == "block":
        classes = ()
    else:
        raise ParameterError(f"unknown family kind {kind!r}")
    return Family(kind, blocks, ell, tuple(classes))


# --- manifest files --------------------------------------------------------


def _frac(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def family_to_dict(fam: Family) -> dict:
    blocks = fam.blocks
    d = {
        "kind": fam.kind,
        "m": fam.m,
        "p": fam.p,
        "ell": fam.ell,
        "beta_u": _frac(blocks.beta_u),
        "beta_diamond": _frac(blocks.beta_diamond),
        "blocks": [
            {
                "key": c.key,
                "aut_size": c.aut_size,
                "beta": _frac(Fraction(1, c.aut_size)),
                "leaves": list(c.leaves),
                "leaf_stabilizers": list(c.leaf_stabilizers),
                "both_leaf_stabilizer": c.both_leaf_stabilizer,
                "reversible": c.reversible,
                "representative": format_hypergraph(c.representative),
            }
            for c in blocks.classes
        ],
    }
    if fam.kind != "block":
        d["beta"] = _frac(fam.beta)
        d["classes"] = []
        for c in fam.classes:
            entry = {
                "key": c.key,
                "aut_size": c.aut_size,
                "beta": _frac(c.beta),
                "block_sequence": [list(r) for r in c.block_sequence],
                "representative": format_hypergraph(c.representative),
            }
            if fam.kind == "necklace":
                entry["symmetry_factor"] = c.symmetry_factor
            d["classes"].append(entry)
    return d


def write_manifest(fam: Family, path) -> None:
    Path(path).write_text(json.dumps(family_to_dict(fam), indent=2) + "\n")


def family_from_dict(d: dict) -> Family:
    kind, m, p, ell = d["kind"], int(d["m"]), int(d["p"]), int(d["ell"])
    classes = []
    for b in d["blocks"]:
        U = parse_hypergraph(b["representative"])
        classes.append(
            BlockClass(
                representative=U,
                leaves=tuple(b["leaves"]),
                aut_size=int(b["aut_size"]),
                leaf_orbit_count=len(b["leaf_stabilizers"]),
                leaf_stabilizers=tuple(b["leaf_stabilizers"]),
                both_leaf_stabilizer=int(b["both_leaf_stabilizer"]),
                reversible=bool(b["reversible"]),
                key=b.get("key", ""),
            )
        )
    blocks = BlockFamily(m, p, tuple(classes))
    members = []
    for c in d.get("classes", []):
        seq = tuple(tuple(r) for r in c["block_sequence"])
        if kind == "necklace":
            H, junctions, maps = _assemble(blocks, seq, closed=True)
            aut, a_plus, a_minus = _alg7_counts(blocks, H, junctions, maps, seq)
            members.append(NecklaceClass(seq, H, junctions, maps, aut, a_plus, a_minus, c.get("key", ""), _used(blocks, seq)))
        else:
            members.append(replace(assemble_chain(blocks, seq), key=c.get("key", "")))
        if members[-1].aut_size != int(c["aut_size"]):
            raise FamilyError(f"manifest aut_size {c['aut_size']} disagrees with recomputed {members[-1].aut_size}")
    return Family(kind, blocks, ell, tuple(members))


def read_manifest(path) -> Family:
    return family_from_dict(json.loads(Path(path).read_text()))
