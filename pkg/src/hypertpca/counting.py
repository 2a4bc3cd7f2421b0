"""Exact hypergraph-count statistics by exhaustive embedding enumeration.

Every distinct labelled copy of a class on a fixed vertex set is precomputed
once as a *template* (edges as position tuples); the sum over copies in K_n is
then a sum over vertex subsets of [n], evaluated with numpy gathers from the
dense tensor.  This is the brute-force oracle for the color-coding programs and
is only feasible at toy scale.
"""

from __future__ import annotations

import math
from functools import lru_cache
from itertools import combinations, permutations

import numpy as np

from hypertpca.errors import CapacityError, FamilyError, ParameterError
from hypertpca.tensor_model import SymmetricTensor, colex_subsets

# Exhaustive work guard: (vertex sets) x (copies per set) x (edges) above this is refused.
EXACT_WORK_LIMIT = 5e9
# Permutations materialised when building a template.
TEMPLATE_PERM_LIMIT = 4_000_000
_GATHER_CHUNK = 4_000_000


def _classes(fam) -> list:
    classes = list(getattr(fam, "classes", fam))
    if not classes:
        raise FamilyError("empty hypergraph family")
    return classes


def family_shape(classes) -> tuple:
    """(m, p, ell, mpl) read off the first class of a necklace or chain family."""
    c = classes[0]
    ell = len(c.block_sequence)
    H = c.representative
    m = H.num_edges // (2 * ell)
    p = H.uniformity
    return m, p, ell, m * p * ell


def _check_work(subsets: int, tpl: np.ndarray) -> None:
    work = float(subsets) * tpl.shape[0] * tpl.shape[1]
    if work > EXACT_WORK_LIMIT:
        raise CapacityError(
            f"exact enumeration needs {work:.2e} edge lookups (> {EXACT_WORK_LIMIT:.0e})"
        )


def _template(H, groups) -> np.ndarray:
    return _template_cached(tuple(H.edges), tuple(tuple(g) for g in groups))


@lru_cache(maxsize=64)
def _template_cached(edges, groups) -> np.ndarray:
    """Distinct images of H under all permutations acting within each vertex group.

    Returns an int array (copies, edges, p) of positions, where group g's
    vertices occupy consecutive positions in the listed order.
    """
    verts = [v for g in groups for v in g]
    pos = {v: k for k, v in enumerate(verts)}
    E = np.array([[pos[v] for v in e] for e in edges], dtype=np.int64)
    total = math.prod(math.factorial(len(g)) for g in groups)
    if total > TEMPLATE_PERM_LIMIT:
        raise CapacityError(f"template needs {total} permutations (> {TEMPLATE_PERM_LIMIT})")
    full = np.zeros((1, 0), dtype=np.int64)
    off = 0
    for g in groups:
        block = np.array(list(permutations(range(off, off + len(g)))), dtype=np.int64).reshape(-1, len(g))
        full = np.concatenate(
            [np.repeat(full, len(block), axis=0), np.tile(block, (len(full), 1))], axis=1
        )
        off += len(g)
    img = full[:, E]  # (perms, edges, p)
    codes = np.sort((np.int64(1) << img).sum(axis=-1), axis=1)
    _, first = np.unique(codes, axis=0, return_index=True)
    out = np.sort(img[np.sort(first)], axis=-1)
    out.setflags(write=False)
    return out


def detection_template(H) -> np.ndarray:
    """All labelled copies of H on vertex positions 0..|V|-1."""
    return _template(H, [list(H.vertices)])


def chain_template(J) -> np.ndarray:
    """Copies of chain J with its end leaves at positions {0, 1} (either way round)."""
    a, b = J.endpoints
    interior = [v for v in J.representative.vertices if v not in (a, b)]
    return _template(J.representative, [[a, b], interior])


@lru_cache(maxsize=64)
def _local_edges(V: int, p: int):
    """All p-subsets of range(V) in colex order, and a rank lookup for them."""
    subs = colex_subsets(V, p)
    lookup = np.full((V,) * p, -1, dtype=np.int64)
    lookup[tuple(subs[:, k] for k in range(p))] = np.arange(len(subs))
    return subs, lookup


def _template_sums(dense: np.ndarray, verts: np.ndarray, tpl: np.ndarray) -> np.ndarray:
    """For each row s of ``verts``: sum over template copies of prod_e Y[s[e]].

    The C(|V|, p) edge values inside each vertex set are gathered once; every
    copy then indexes into that small local table.
    """
    if len(verts) == 0:
        return np.zeros(0)
    V, p = verts.shape[1], tpl.shape[2]
    local, lookup = _local_edges(V, p)
    copy_idx = lookup[tuple(tpl[..., k] for k in range(p))]  # (copies, edges)
    step = max(1, _GATHER_CHUNK // copy_idx.size)
    out = np.empty(len(verts))
    for start in range(0, len(verts), step):
        s = verts[start : start + step]
        vals = dense[tuple(s[:, local[:, k]] for k in range(p))]  # (b, C(V,p))
        out[start : start + step] = vals[:, copy_idx].prod(axis=-1).sum(axis=-1)
    return out


def _subsets(pool, k: int) -> np.ndarray:
    rows = list(combinations(pool, k))
    return np.array(rows, dtype=np.int64).reshape(len(rows), k)


def _colorful_rows(verts: np.ndarray, coloring) -> np.ndarray:
    if coloring is None:
        return verts
    cols = np.asarray(coloring.colors)[verts]
    srt = np.sort(cols, axis=1)
    ok = np.all(srt[:, 1:] != srt[:, :-1], axis=1) if verts.shape[1] > 1 else np.ones(len(verts), bool)
    return verts[ok]


# --- exhaustive copy search ------------------------------------------------


def count_copies_exhaustive(H, n: int) -> int:
    """Number of distinct edge sets in K_n^(p) isomorphic to H, by trying every injection."""
    V = list(H.vertices)
    k = len(V)
    if n < k:
        return 0
    if math.perm(n, k) > TEMPLATE_PERM_LIMIT:
        raise CapacityError(f"{math.perm(n, k)} injections exceed {TEMPLATE_PERM_LIMIT}")
    pos = {v: i for i, v in enumerate(V)}
    E = np.array([[pos[v] for v in e] for e in H.edges], dtype=np.int64)
    maps = np.array(list(permutations(range(n), k)), dtype=np.int64)
    codes = np.sort((np.int64(1) << maps[:, E]).sum(axis=-1), axis=1)
    return int(len(np.unique(codes, axis=0)))


# --- statistics -------------------------------------------------------------


def exact_detection_sum(T: SymmetricTensor, fam, coloring=None) -> float:
    """Sum over classes H and copies S of H in K_n of chi(V(S)) f_S(Y).

    Without a coloring chi is identically 1.
    """
    classes = _classes(fam)
    total = 0.0
    for H in classes:
        V = H.representative.num_vertices
        if T.n < V:
            continue
        tpl = detection_template(H.representative)
        _check_work(math.comb(T.n, V), tpl)
        verts = _colorful_rows(_subsets(range(T.n), V), coloring)
        total += float(_template_sums(T.dense(), verts, tpl).sum())
    return total


def exact_detection_stat(T: SymmetricTensor, fam, beta=None) -> float:
    classes = _classes(fam)
    _, _, _, mpl = family_shape(classes)
    beta = float(beta if beta is not None else sum(c.beta for c in classes))
    return exact_detection_sum(T, classes) / math.sqrt(float(T.n) ** mpl * beta)


def exact_recovery_sum(T: SymmetricTensor, fam, i: int, j: int, coloring=None) -> float:
    """Sum over chains J and copies S with leaf set {i, j} of chi(V(S)) f_S(Y)."""
    if i == j:
        raise ParameterError("recovery scores need two distinct vertices")
    classes = _classes(fam)
    pool = [v for v in range(T.n) if v not in (i, j)]
    total = 0.0
    for J in classes:
        V = J.representative.num_vertices
        if T.n < V:
            continue
        tpl = chain_template(J)
        _check_work(math.comb(T.n - 2, V - 2), tpl)
        inner = _subsets(pool, V - 2)
        verts = np.concatenate([np.tile([i, j], (len(inner), 1)), inner], axis=1)
        verts = _colorful_rows(verts, coloring)
        total += float(_template_sums(T.dense(), verts, tpl).sum())
    return total


def recovery_scale(n: int, m: int, p: int, ell: int, lam: float, beta_j) -> float:
    """Normalisation lambda^{2ml} n^{pml/2 - 1} beta_J shared by exact and approximate scores."""
    return lam ** (2 * m * ell) * float(n) ** (p * m * ell / 2 - 1) * float(beta_j)


def exact_recovery_score(T: SymmetricTensor, fam, beta_j, lam: float, i: int, j: int) -> float:
    classes = _classes(fam)
    m, p, ell, _ = family_shape(classes)
    if lam <= 0:
        raise ParameterError("recovery scores need lambda > 0")
    return exact_recovery_sum(T, classes, i, j) / recovery_scale(T.n, m, p, ell, lam, beta_j)


def exact_recovery_row(T: SymmetricTensor, fam, beta_j, lam: float, anchor: int) -> np.ndarray:
    """Scores Phi[anchor, j] for every j (entry ``anchor`` is 0)."""
    classes = _classes(fam)
    m, p, ell, _ = family_shape(classes)
    if lam <= 0:
        raise ParameterError("recovery scores need lambda > 0")
    scale = recovery_scale(T.n, m, p, ell, lam, beta_j)
    row = np.zeros(T.n)
    for j in range(T.n):
        if j != anchor:
            row[j] = exact_recovery_sum(T, classes, anchor, j) / scale
    return row


# --- finite-n moment formulas ----------------------------------------------


def labeled_fraction(n: int, k: int) -> float:
    """C(n, k) k! / n^k, the fraction of k-tuples of [n] with distinct entries."""
    return math.perm(n, k) / float(n) ** k if n >= k else 0.0


def null_second_moment(n: int, mpl: int) -> float:
    """E_Q[f_H^2] at finite n."""
    return labeled_fraction(n, mpl)


def planted_mean(n: int, m: int, p: int, ell: int, lam: float, beta) -> float:
    """E_P[f_H] at finite n: lambda^{2ml} sqrt(beta) C(n, mpl)(mpl)!/n^{mpl}."""
    return lam ** (2 * m * ell) * math.sqrt(float(beta)) * labeled_fraction(n, m * p * ell)


def recovery_conditional_mean(n: int, mpl: int) -> float:
    """E[Phi_ij x_i x_j] under the planted law.

    Each chain copy with leaf set {i, j} comes with two leaf assignments, hence
    2 (n-2)_{mpl-1} / n^{mpl-1}.
    """
    if n < mpl + 1:
        return 0.0
    return 2 * math.perm(n - 2, mpl - 1) / float(n) ** (mpl - 1)
