import math

import numpy as np
import pytest

from hypertpca.colorcoding import (
    ColorCodingPlan,
    Coloring,
    CountingContext,
    block_table,
    colorful_probability,
    detection_plan,
    f_tilde,
    g_necklace_dp,
    h_chain_dp,
    h_chain_row,
    is_colorful,
    phi_tilde,
    phi_tilde_row,
    recovery_plan,
    sample_coloring,
)
from hypertpca.counting import (
    exact_detection_stat,
    exact_detection_sum,
    exact_recovery_score,
    exact_recovery_sum,
)
from hypertpca.errors import ParameterError
from hypertpca.families import assemble_chain, build_necklaces, enumerate_blocks
from hypertpca.tensor_model import ModelParams, SymmetricTensor, sample_null, sample_planted

from oracles import chain_of_triangles, colorful_sum, surjective_coloring


@pytest.fixture(scope="module")
def u13():
    return enumerate_blocks(1, 3)


@pytest.fixture(scope="module")
def u23():
    return enumerate_blocks(2, 3)


@pytest.fixture(scope="module")
def necklace(u13):
    return build_necklaces(u13, 3)


def rel(a, b):
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def test_colorful_predicate():
    c = Coloring(np.array([0, 1, 1, 2]), 3)
    assert is_colorful([2], c)
    assert not is_colorful([1, 2], c)
    assert is_colorful([0, 1, 3], c)


def test_colorful_frequency_matches_r():
    K = 9
    rng = np.random.default_rng(0)
    hits = np.array([len(set(rng.integers(0, K, K))) == K for _ in range(100_000)], dtype=float)
    r = colorful_probability(K)
    assert abs(hits.mean() - r) <= 4 * math.sqrt(r * (1 - r) / len(hits))
    # the library sampler draws the same kind of colorings
    lib = np.array([is_colorful(range(K), sample_coloring(K, K, s)) for s in range(20_000)], dtype=float)
    assert abs(lib.mean() - r) <= 4 * math.sqrt(r * (1 - r) / len(lib))


def test_plan_sizes():
    assert detection_plan(1, 3, 3).t == 1068
    assert recovery_plan(1, 3, 2).t == 164
    assert recovery_plan(1, 3, 3).t == 2756
    assert detection_plan(1, 3, 3, t_override=7).t == 7
    assert detection_plan(1, 3, 3).r == pytest.approx(math.factorial(9) / 9**9)


def test_plan_colorings_are_reproducible():
    plan = detection_plan(1, 3, 3, seed=5, t_override=3)
    a = [c.colors.tolist() for c in plan.colorings(12)]
    b = [c.colors.tolist() for c in plan.colorings(12)]
    assert a == b and a[0] != a[1]


def test_invalid_plans_and_colorings():
    with pytest.raises(ParameterError):
        ColorCodingPlan(9, 0.5, 0)
    with pytest.raises(ParameterError):
        Coloring(np.array([0, 3]), 3)


def test_zero_tensor_gives_zero_tables_and_counts(u13, necklace):
    T = SymmetricTensor(10, 3, np.zeros(math.comb(10, 3)))
    c = Coloring(surjective_coloring(10, 9, 0), 9)
    assert not block_table(T, c, u13.classes[0]).any()
    assert g_necklace_dp(T, c, necklace[0]) == 0.0
    J = assemble_chain(u13, [(0, 0)])
    assert h_chain_dp(T, Coloring(c.colors % 4, 4), J, 0, 1) == 0.0


def test_too_few_vertices_gives_zero(necklace):
    T = sample_null(8, 3, 0)
    assert g_necklace_dp(T, Coloring(np.arange(8), 9), necklace[0]) == 0.0


def test_wrong_color_count_is_rejected(necklace):
    T = sample_null(10, 3, 0)
    with pytest.raises(ParameterError):
        g_necklace_dp(T, Coloring(np.zeros(10, dtype=int), 8), necklace[0])


@pytest.mark.parametrize("m", [1, 2])
def test_block_table_sums_to_colorful_leaf_pinned_count(m, u13, u23):
    blocks = u13 if m == 1 else u23
    n = 8
    K = 3 * m + 1
    T = sample_null(n, 3, 11)
    c = Coloring(surjective_coloring(n, K, 3), K)
    for U in blocks.classes:
        R = U.representative
        lam = block_table(T, c, U)
        pair_sums = lam.sum(axis=0)
        for x, z in [(0, 1), (4, 2), (6, 7)]:
            ref = colorful_sum(T.dense(), R.vertices, R.edges, c.colors, leaf_pair=(x, z))
            # a reversible block is counted once, with its start leaf at x
            assert pair_sums[x, z] == pytest.approx(ref, rel=1e-9, abs=1e-12)
            assert pair_sums[z, x] == pytest.approx(pair_sums[x, z], rel=1e-9, abs=1e-12)


def test_reversed_orientation_is_the_transpose_for_reversible_blocks(u13):
    T = sample_null(9, 3, 1)
    c = Coloring(surjective_coloring(9, 4, 1), 4)
    U = u13.classes[0]
    fwd = block_table(T, c, U, 0).sum(axis=0)
    bwd = block_table(T, c, U, 1).sum(axis=0)
    assert np.allclose(bwd, fwd.T)


@pytest.mark.parametrize("seed", range(6))
def test_necklace_dp_matches_exhaustive_sum(necklace, seed):
    n = 10
    T, _ = sample_planted(ModelParams(n, 3, 1.5), seed)
    surj = Coloring(surjective_coloring(n, 9, seed), 9)
    rand = sample_coloring(n, 9, seed)
    for c in (surj, rand):
        dp = g_necklace_dp(T, c, necklace[0])
        ex = exact_detection_sum(T, necklace, c)
        assert rel(dp, ex) <= 1e-9 or dp == ex == 0.0
    assert exact_detection_sum(T, necklace, surj) != 0.0


def test_necklace_dp_matches_pure_python_oracle(necklace):
    T = sample_null(10, 3, 21)
    c = Coloring(surjective_coloring(10, 9, 21), 9)
    R = necklace[0].representative
    assert rel(g_necklace_dp(T, c, necklace[0]), colorful_sum(T.dense(), R.vertices, R.edges, c.colors)) <= 1e-9


@pytest.mark.parametrize("ell", [1, 2, 3])
def test_chain_dp_matches_exhaustive_sum_triangle_chains(u13, ell):
    n = 10
    J = assemble_chain(u13, [(0, 0)] * ell)
    K = 3 * ell + 1
    T = sample_null(n, 3, ell)
    ctx = CountingContext(T)
    c = Coloring(surjective_coloring(n, K, ell), K)
    for i, j in [(0, 1), (3, 8), (9, 2)]:
        dp = h_chain_dp(T, c, J, i, j, ctx)
        ex = exact_recovery_sum(T, [J], i, j, c)
        assert rel(dp, ex) <= 1e-9 or dp == ex == 0.0


def test_chain_dp_matches_pure_python_oracle(u13):
    T = sample_null(8, 3, 5)
    c = Coloring(surjective_coloring(8, 7, 5), 7)
    J = assemble_chain(u13, [(0, 0), (0, 0)])
    V, E = chain_of_triangles(2)
    ref = colorful_sum(T.dense(), V, E, c.colors, leaf_pair=(c.colors.argmin(), c.colors.argmax()))
    assert rel(h_chain_dp(T, c, J, int(c.colors.argmin()), int(c.colors.argmax())), ref) <= 1e-9


@pytest.mark.parametrize("seq", [[(0, 0)], [(1, 0)]])
def test_chain_dp_with_m2_blocks(u23, seq):
    n = 8
    J = assemble_chain(u23, seq)
    K = J.representative.num_vertices
    T = sample_null(n, 3, 2)
    c = Coloring(surjective_coloring(n, K, 2), K)
    for i, j in [(0, 1), (2, 5)]:
        dp = h_chain_dp(T, c, J, i, j)
        ex = exact_recovery_sum(T, [J], i, j, c)
        assert rel(dp, ex) <= 1e-9 or dp == ex == 0.0


def test_chain_row_matches_pointwise_values(u13):
    T = sample_null(10, 3, 8)
    J = assemble_chain(u13, [(0, 0), (0, 0)])
    c = Coloring(surjective_coloring(10, 7, 8), 7)
    row = h_chain_row(T, c, J, 3)
    assert row[3] == 0.0
    for j in (0, 5, 9):
        assert row[j] == pytest.approx(h_chain_dp(T, c, J, 3, j), rel=1e-12)
    with pytest.raises(ParameterError):
        h_chain_dp(T, c, J, 2, 2)


def test_f_tilde_arithmetic(necklace):
    T = sample_null(10, 3, 0)
    plan = detection_plan(1, 3, 3, seed=1, t_override=4)
    ctx = CountingContext(T)
    total = sum(g_necklace_dp(T, c, necklace[0], ctx) for c in plan.colorings(10))
    expected = total / (plan.t * plan.r * math.sqrt(10**9 / 48))
    assert f_tilde(T, necklace, plan, ctx=ctx) == pytest.approx(expected, rel=1e-12)


def test_f_tilde_is_zero_on_zero_tensor(necklace):
    T = SymmetricTensor(10, 3, np.zeros(120))
    assert f_tilde(T, necklace, detection_plan(1, 3, 3, t_override=3)) == 0.0


def test_f_tilde_rejects_wrong_plan(necklace):
    with pytest.raises(ParameterError):
        f_tilde(sample_null(10, 3, 0), necklace, recovery_plan(1, 3, 3, t_override=2))


def test_phi_tilde_lambda_scaling(u13):
    T = sample_null(10, 3, 3)
    J = [assemble_chain(u13, [(0, 0), (0, 0)])]
    plan = recovery_plan(1, 3, 2, seed=2, t_override=5)
    a = phi_tilde(T, J, plan, 1.0, 0, 4)
    b = phi_tilde(T, J, plan, 2.0, 0, 4)
    assert b == pytest.approx(a / 2 ** (2 * 1 * 2), rel=1e-12)


def test_phi_tilde_is_unbiased_for_triangle_chain(u13):
    T, _ = sample_planted(ModelParams(10, 3, 3.0), 4)
    J = [assemble_chain(u13, [(0, 0)])]
    beta = J[0].beta
    ctx = CountingContext(T)
    vals = [phi_tilde_row(T, J, recovery_plan(1, 3, 1, seed=s), 3.0, 0, beta, ctx)[5] for s in range(50)]
    exact = exact_recovery_score(T, J, beta, 3.0, 0, 5)
    se = np.std(vals, ddof=1) / math.sqrt(len(vals))
    assert abs(np.mean(vals) - exact) <= 3 * se


def test_f_tilde_is_unbiased_with_short_plans(necklace):
    T, _ = sample_planted(ModelParams(10, 3, 2.0), 6)
    ctx = CountingContext(T)
    vals = [f_tilde(T, necklace, detection_plan(1, 3, 3, seed=s, t_override=40), ctx=ctx) for s in range(60)]
    exact = exact_detection_stat(T, necklace)
    se = np.std(vals, ddof=1) / math.sqrt(len(vals))
    assert abs(np.mean(vals) - exact) <= 3 * se
