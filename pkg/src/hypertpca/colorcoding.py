"""Color-coding approximations of the necklace and chain counts.

Vertices receive i.i.d. uniform colors from [K].  A copy whose vertices get
pairwise distinct colors is *colorful*; summing only colorful copies lets a
dynamic program over color subsets replace the injectivity constraint.

Table conventions (all colors are bits of an int mask):

* ``Λ[B][x, z]`` sums colorful copies of one oriented block with start leaf at
  x and end leaf at z, where B is the color set of every vertex except z.
* ``D_k[S][x, y]`` does the same for the sub-chain of blocks k..l running from
  x to y; S again excludes y's color.

A block's interior embeddings are enumerated once per tensor, reduced to
orbit representatives under the automorphisms fixing both leaves, and then
regrouped by interior color set for each coloring.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from hypertpca._kernels import accumulate_block, convolve_level
from hypertpca.counting import _classes, family_shape, recovery_scale
from hypertpca.errors import CapacityError, ParameterError
from hypertpca.hypergraph import automorphisms_fixing
from hypertpca.tensor_model import SymmetricTensor

MAX_COLORS = 20
# Interior embeddings enumerated per block class before refusing.
INTERIOR_LIMIT = 5_000_000
_COLOR_STREAM = 2


# --- colorings ---------------------------------------------------------------


@dataclass(frozen=True)
class Coloring:
    colors: np.ndarray
    K: int

    def __post_init__(self):
        c = np.asarray(self.colors, dtype=np.int64)
        if self.K < 1:
            raise ParameterError("a coloring needs K >= 1 colors")
        if c.ndim != 1 or (c.size and (c.min() < 0 or c.max() >= self.K)):
            raise ParameterError(f"colors must lie in [0, {self.K})")
        c.setflags(write=False)
        object.__setattr__(self, "colors", c)

    @property
    def n(self) -> int:
        return int(self.colors.shape[0])

    def __getitem__(self, v) -> int:
        return int(self.colors[v])


def sample_coloring(n: int, K: int, seed) -> Coloring:
    """Uniform i.i.d. colors; ``seed`` is anything numpy's default_rng accepts."""
    if K < 1:
        raise ParameterError("a coloring needs K >= 1 colors")
    return Coloring(np.random.default_rng(seed).integers(0, K, size=n), K)


def is_colorful(V, c: Coloring) -> bool:
    cols = [c[v] for v in V]
    return len(set(cols)) == len(cols)


def colorful_probability(K: int) -> float:
    """K!/K^K: chance that K given vertices all receive distinct colors."""
    return math.factorial(K) / float(K) ** K


@dataclass(frozen=True)
class ColorCodingPlan:
    K: int
    r: float
    t: int
    seed: int = 0

    def __post_init__(self):
        if self.t < 1:
            raise ParameterError("a plan needs t >= 1 colorings")
        if not 0 < self.r <= 1:
            raise ParameterError("colorful probability must lie in (0, 1]")
        if not 1 <= self.K <= MAX_COLORS:
            raise ParameterError(f"K must lie in [1, {MAX_COLORS}]")

    @classmethod
    def for_colors(cls, K: int, seed: int = 0, t_override: int | None = None) -> "ColorCodingPlan":
        r = colorful_probability(K)
        t = t_override if t_override is not None else math.ceil(1 / r)
        return cls(K, r, int(t), seed)

    @property
    def seeds(self) -> list:
        return [np.random.SeedSequence(self.seed, spawn_key=(_COLOR_STREAM, k)) for k in range(self.t)]

    def coloring(self, n: int, k: int) -> Coloring:
        ss = np.random.SeedSequence(self.seed, spawn_key=(_COLOR_STREAM, k))
        return sample_coloring(n, self.K, ss)

    def colorings(self, n: int):
        for k in range(self.t):
            yield self.coloring(n, k)


def detection_plan(m: int, p: int, ell: int, seed: int = 0, t_override: int | None = None) -> ColorCodingPlan:
    return ColorCodingPlan.for_colors(m * p * ell, seed, t_override)


def recovery_plan(m: int, p: int, ell: int, seed: int = 0, t_override: int | None = None) -> ColorCodingPlan:
    return ColorCodingPlan.for_colors(m * p * ell + 1, seed, t_override)


# --- color-subset bookkeeping -----------------------------------------------


@lru_cache(maxsize=None)
def _popcount(K: int) -> np.ndarray:
    x = np.arange(1 << K)
    out = np.zeros(1 << K, dtype=np.int64)
    for b in range(K):
        out += (x >> b) & 1
    return out


@lru_cache(maxsize=None)
def masks_of_size(K: int, k: int) -> np.ndarray:
    """Masks over K colors with exactly k bits, increasing."""
    return np.flatnonzero(_popcount(K) == k)


@lru_cache(maxsize=None)
def mask_index(K: int, k: int) -> np.ndarray:
    """Position of each k-bit mask inside masks_of_size(K, k); -1 elsewhere."""
    idx = np.full(1 << K, -1, dtype=np.int64)
    ms = masks_of_size(K, k)
    idx[ms] = np.arange(len(ms))
    return idx


@lru_cache(maxsize=None)
def mask_colors(K: int, k: int) -> np.ndarray:
    """Row i lists the colors of masks_of_size(K, k)[i], increasing."""
    ms = masks_of_size(K, k)
    out = np.zeros((len(ms), k), dtype=np.int64)
    for i, m in enumerate(ms):
        out[i] = [c for c in range(K) if m >> c & 1]
    return out


@lru_cache(maxsize=None)
def _splits(K: int, s: int, b: int):
    """For every b-bit B: indices of each (s-b)-bit R disjoint from B, and of S = B | R."""
    Bm, Rm = masks_of_size(K, b), masks_of_size(K, s - b)
    iS = mask_index(K, s)
    R_of, S_of = [], []
    for B in Bm:
        ok = np.flatnonzero((Rm & B) == 0)
        R_of.append(ok)
        S_of.append(iS[Rm[ok] | B])
    return np.array(R_of, dtype=np.int64), np.array(S_of, dtype=np.int64)


def _color_classes(tau: np.ndarray, K: int):
    order = np.argsort(tau, kind="stable").astype(np.int64)
    cstart = np.searchsorted(tau[order], np.arange(K + 1)).astype(np.int64)
    return order, cstart


# --- per-block kernel ---------------------------------------------------------


def _injective_tuples(n: int, k: int) -> np.ndarray:
    out = np.arange(n, dtype=np.int32)[:, None]
    for _ in range(k - 1):
        r = len(out)
        cand = np.repeat(out, n, axis=0)
        nxt = np.tile(np.arange(n, dtype=np.int32), r)
        keep = ~np.any(cand == nxt[:, None], axis=1)
        out = np.concatenate([cand[keep], nxt[keep, None]], axis=1)
    return out


def _orbit_minima(W: np.ndarray, perms) -> np.ndarray:
    """Rows of W that are lexicographically smallest in their orbit under perms."""
    keep = np.ones(len(W), dtype=bool)
    ar = np.arange(len(W))
    for g in perms:
        img = W[:, g]
        diff = W != img
        anyd = diff.any(axis=1)
        first = diff.argmax(axis=1)
        keep &= ~anyd | (W[ar, first] < img[ar, first])
    return W[keep]


class BlockKernel:
    """Interior embeddings of one block class into [n], with their edge products.

    ``W`` holds one representative per copy-with-pinned-leaves (orbits of the
    both-leaf stabilizer), ``P`` the product of Y over interior-only edges.
    """

    def __init__(self, T: SymmetricTensor, cls):
        U = cls.representative
        a, b = cls.leaves
        interior = list(cls.interior)
        k = len(interior)
        n = T.n
        if math.perm(n, k) > INTERIOR_LIMIT:
            raise CapacityError(
                f"block table needs (n)_(mp-1) = {math.perm(n, k)} interior embeddings (> {INTERIOR_LIMIT})"
            )
        pos = {v: q for q, v in enumerate(interior)}
        stab = automorphisms_fixing(U, [a, b])
        perms = [np.array([pos[g[v]] for v in interior]) for g in stab if any(g[v] != v for v in interior)]
        self.n, self.k = n, k
        self.dense = T.dense()
        self.W = _orbit_minima(_injective_tuples(n, k), perms) if n >= k else np.zeros((0, k), np.int32)
        self.P = np.ones(len(self.W))
        self.start_edge = self.end_edge = self.both_edge = None
        for e in U.edges:
            inner = [pos[v] for v in e if v in pos]
            if a in e and b in e:
                self.both_edge = inner
            elif a in e:
                self.start_edge = inner
            elif b in e:
                self.end_edge = inner
            else:
                self.P *= self._gather(self.W, inner)

    def _gather(self, W, inner, free: int = 0):
        """Y over edges made of W[:, inner] plus ``free`` leading open indices."""
        ar = np.arange(self.n)
        idx = []
        for f in range(free):
            shape = [1] * (free + 1)
            shape[f + 1] = self.n
            idx.append(ar.reshape(shape))
        for q in inner:
            idx.append(W[:, q].reshape((-1,) + (1,) * free))
        return self.dense[tuple(idx)]

    def colorful_rows(self, colors: np.ndarray, K: int):
        """Interior masks, embeddings and interior edge products of the colorful rows."""
        bits = np.left_shift(1, colors.astype(np.int64))
        I = np.bitwise_or.reduce(bits[self.W], axis=1) if len(self.W) else np.zeros(0, np.int64)
        rows = np.flatnonzero(_popcount(K)[I] == self.k)
        return I[rows], self.W[rows], self.P[rows]

    def pair_sums_joint(self, I, W, P):
        """Per distinct interior mask: sum_w P(w) Y[x, z, w...] for a block with a both-leaf edge."""
        order = np.argsort(I, kind="stable")
        I, W, P = I[order], W[order], P[order]
        uniq, starts = np.unique(I, return_index=True)
        ends = np.append(starts[1:], len(I))
        M = np.empty((len(uniq), self.n, self.n))
        for g, (s, e) in enumerate(zip(starts, ends)):
            M[g] = np.tensordot(P[s:e], self._gather(W[s:e], self.both_edge, free=2), axes=1)
        return uniq, M


class CountingContext:
    """Per-tensor cache of block kernels shared across colorings and classes."""

    def __init__(self, T: SymmetricTensor):
        self.T = T
        self._kernels = {}

    def kernel(self, cls) -> BlockKernel:
        key = _key(cls)
        if key not in self._kernels:
            self._kernels[key] = BlockKernel(self.T, cls)
        return self._kernels[key]

    def block_tables(self, coloring: Coloring, cls, orientations=(0,), order=None) -> dict:
        """Λ for one block class under one coloring, per requested orientation.

        Vertex axes are indexed by position in ``order`` (default: identity).
        """
        K, n = coloring.K, self.T.n
        order = np.arange(n) if order is None else order
        kern = self.kernel(cls)
        mp = kern.k + 1
        tau = coloring.colors[order]
        idx = mask_index(K, mp)
        nB = len(masks_of_size(K, mp))
        I, W, P = kern.colorful_rows(coloring.colors, K)
        out = {o: np.zeros((nB, n, n)) for o in orientations}
        if kern.both_edge is None:
            first = kern._gather(W, kern.start_edge, free=1)[:, order]
            second = kern._gather(W, kern.end_edge, free=1)[:, order]
            for o in orientations:
                # orientation 1 starts at the second leaf
                A, B = (first, second) if o == 0 else (second, first)
                accumulate_block(out[o], A * P[:, None], B, I, tau, idx)
            return out
        uniq, M = kern.pair_sums_joint(I, W, P)
        M = M[:, order][:, :, order]
        bit = np.left_shift(1, tau)
        inI = ((uniq[:, None] >> tau[None, :]) & 1).astype(bool)
        allowed = ~inI[:, None, :] & (tau[None, :, None] != tau[None, None, :])
        g_idx, x_idx = np.nonzero(~inI)
        Bpos = idx[uniq[g_idx] | bit[x_idx]]
        for o in orientations:
            Mo = M if o == 0 else M.transpose(0, 2, 1)
            out[o][Bpos, x_idx, :] = (Mo * allowed)[g_idx, x_idx, :]
        return out

    def tables_for(self, coloring: Coloring, classes) -> "ColorTables":
        """Λ for every (block, orientation) used by the classes, in color-sorted vertex order."""
        order, cstart = _color_classes(coloring.colors, coloring.K)
        need = {}
        for c in classes:
            for cls, (_, o) in zip(c.blocks, c.block_sequence):
                need.setdefault(_key(cls), (cls, set()))[1].add(o)
        lams = {}
        for key, (cls, os_) in need.items():
            for o, lam in self.block_tables(coloring, cls, sorted(os_), order).items():
                lams[key + (o,)] = lam
        return ColorTables(coloring, order, cstart, lams)


@dataclass
class ColorTables:
    """Block tables for one coloring; vertex axes follow ``order`` (sorted by color)."""

    coloring: Coloring
    order: np.ndarray
    cstart: np.ndarray
    lams: dict

    @property
    def tau(self) -> np.ndarray:
        return self.coloring.colors[self.order]

    @property
    def inverse(self) -> np.ndarray:
        return np.argsort(self.order)

    def sequence(self, H) -> list:
        return [self.lams[_key(cls) + (o,)] for cls, (_, o) in zip(H.blocks, H.block_sequence)]


def _key(cls):
    return (cls.representative.edges, cls.leaves)


def block_table(T: SymmetricTensor, c: Coloring, U, orientation: int = 0) -> np.ndarray:
    """Λ[B][x, z] for one block class, B indexed by masks_of_size(K, mp)."""
    return CountingContext(T).block_tables(c, U, (orientation,))[orientation]


# --- dynamic programs ------------------------------------------------------


def _suffix(lams: list, K: int, mp: int, cstart: np.ndarray, n: int) -> np.ndarray:
    """D for the sub-chain of the given oriented block tables (in path order)."""
    D = lams[-1]
    size = mp
    B_colors = mask_colors(K, mp)
    for lam in reversed(lams[:-1]):
        new = size + mp
        R_of, S_of = _splits(K, new, mp)
        out = np.zeros((len(masks_of_size(K, new)), n, n))
        convolve_level(lam, D, R_of, S_of, B_colors, mask_colors(K, size), cstart, out)
        out *= _outside(K, new, cstart)[:, None, :]
        D, size = out, new
    return D


def _outside(K: int, k: int, cstart: np.ndarray) -> np.ndarray:
    """For each k-bit mask S: 0/1 row over sorted vertices, 1 where the color is not in S."""
    tau = np.repeat(np.arange(K), np.diff(cstart))
    return (masks_of_size(K, k)[:, None] >> tau[None, :]) & 1 == 0


def _check_colors(coloring: Coloring, K: int, n: int) -> None:
    if coloring.K != K:
        raise ParameterError(f"coloring uses {coloring.K} colors, the program needs {K}")
    if coloring.n != n:
        raise ParameterError(f"coloring covers {coloring.n} vertices, tensor has n={n}")


def g_necklace_dp(T: SymmetricTensor, c: Coloring, H, ctx: CountingContext | None = None, tables=None) -> float:
    """Colorful signed count of necklace H: sum over copies S with V(S) colorful of f_S."""
    ell = len(H.block_sequence)
    mp = H.representative.num_vertices // ell
    K = mp * ell
    _check_colors(c, K, T.n)
    if T.n < K:
        return 0.0
    ctx = ctx or CountingContext(T)
    tables = tables or ctx.tables_for(c, [H])
    lams = tables.sequence(H)
    D2 = _suffix(lams[1:], K, mp, tables.cstart, T.n)
    full = (1 << K) - 1
    comp = mask_index(K, K - mp)[full ^ masks_of_size(K, mp)]
    total = np.einsum("bxy,byx->", lams[0], D2[comp])
    return float(total) / H.symmetry_factor


def h_chain_row(T: SymmetricTensor, c: Coloring, J, anchor: int, ctx=None, tables=None) -> np.ndarray:
    """h_J(i=anchor, j) for every j; entry ``anchor`` is 0."""
    ell = len(J.block_sequence)
    mp = (J.representative.num_vertices - 1) // ell
    K = mp * ell + 1
    _check_colors(c, K, T.n)
    if T.n < K:
        return np.zeros(T.n)
    ctx = ctx or CountingContext(T)
    tables = tables or ctx.tables_for(c, [J])
    D1 = _suffix(tables.sequence(J), K, mp, tables.cstart, T.n)
    tau = tables.tau
    a = tables.inverse[anchor]
    full = (1 << K) - 1
    idx = mask_index(K, K - 1)
    bit = np.left_shift(1, tau)
    cols = np.arange(T.n)
    row = D1[idx[full ^ bit], a, cols] + D1[idx[full ^ bit[a]], cols, a]
    row[tau == tau[a]] = 0.0
    return row[tables.inverse] / J.symmetry_factor


def h_chain_dp(T: SymmetricTensor, c: Coloring, J, i: int, j: int, ctx=None, tables=None) -> float:
    """Colorful signed count over copies of chain J whose end leaves are {i, j}."""
    if i == j:
        raise ParameterError("recovery scores need two distinct vertices")
    return float(h_chain_row(T, c, J, i, ctx, tables)[j])


# --- approximate statistics ---------------------------------------------------


def _family_beta(classes, beta):
    return float(beta if beta is not None else sum(c.beta for c in classes))


def f_tilde(T: SymmetricTensor, fam, plan: ColorCodingPlan, beta=None, ctx=None) -> float:
    """Color-coding estimate of the detection statistic."""
    classes = _classes(fam)
    _, _, _, mpl = family_shape(classes)
    if plan.K != mpl:
        raise ParameterError(f"detection plan must use K = mpl = {mpl} colors, got {plan.K}")
    ctx = ctx or CountingContext(T)
    total = 0.0
    for c in plan.colorings(T.n):
        tables = ctx.tables_for(c, classes)
        total += sum(g_necklace_dp(T, c, H, ctx, tables) for H in classes)
    scale = math.sqrt(float(T.n) ** mpl * _family_beta(classes, beta))
    return total / (plan.t * plan.r) / scale


def phi_tilde_row(T: SymmetricTensor, fam, plan: ColorCodingPlan, lam: float, anchor: int, beta_j=None, ctx=None) -> np.ndarray:
    """Color-coding estimates of Phi[anchor, j] for every j."""
    classes = _classes(fam)
    m, p, ell, mpl = family_shape(classes)
    if plan.K != mpl + 1:
        raise ParameterError(f"recovery plan must use K = mpl + 1 = {mpl + 1} colors, got {plan.K}")
    if lam <= 0:
        raise ParameterError("recovery scores need lambda > 0")
    ctx = ctx or CountingContext(T)
    row = np.zeros(T.n)
    for c in plan.colorings(T.n):
        tables = ctx.tables_for(c, classes)
        for J in classes:
            row += h_chain_row(T, c, J, anchor, ctx, tables)
    row[anchor] = 0.0
    return row / (plan.t * plan.r) / recovery_scale(T.n, m, p, ell, lam, _family_beta(classes, beta_j))


def phi_tilde(T: SymmetricTensor, fam, plan: ColorCodingPlan, lam: float, i: int, j: int, beta_j=None, ctx=None) -> float:
    if i == j:
        raise ParameterError("recovery scores need two distinct vertices")
    return float(phi_tilde_row(T, fam, plan, lam, i, beta_j, ctx)[j])
