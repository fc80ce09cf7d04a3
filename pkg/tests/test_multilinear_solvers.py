from __future__ import annotations

import math

import numpy as np
import pytest

from conjopt.errors import EnumerationTooLarge, ParameterError, ZeroMatrix
from conjopt.multilinear_solvers import (
    AlternatingMaximization,
    ExactEnumeration,
    NoConvergenceWarning,
    PowerSVD,
    c4,
    default_trials_Lm,
    largest_singular_pair,
    ratio_LS,
    ratio_Lm,
    solve_bilinear_circle,
    solve_bilinear_roots,
    solve_LS,
    solve_Lm,
)
from conjopt.oracle import brute_force_multilinear_roots
from conjopt.sampling import INF, root_table
from conjopt.tensor_core import eval_multilinear


def crandn(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def in_roots(x, m):
    return np.all(np.min(np.abs(np.asarray(x)[:, None] - root_table(m)[None, :]), axis=1) == 0)


# ---------------------------------------------------------------- ratios


def test_c4_values():
    assert c4(INF) == 0.7118
    assert c4(4) == pytest.approx(0.3559, abs=1e-12)


def test_ratio_Lm_examples():
    assert ratio_Lm([5, 7], INF, 0.05) == 0.7118
    assert ratio_Lm([2, 2], 4, 0.05) == pytest.approx(0.3559, abs=1e-12)
    expected = 0.7118 * math.cos(math.pi / 3) ** 2 * math.sqrt(0.05 * math.log(3) / 3)
    assert ratio_Lm([3, 3, 3], 3, 0.05) == pytest.approx(expected, rel=1e-12)
    assert ratio_Lm([3, 3, 3], 3, 0.05) == pytest.approx(0.02408, abs=5e-5)


def test_ratio_Lm_sorts_and_substitutes():
    assert ratio_Lm([4, 2, 3], 3, 0.05) == ratio_Lm([2, 3, 4], 3, 0.05)
    assert ratio_Lm([1, 2, 2], 3, 0.05) > 0


def test_ratio_Lm_delta_domain():
    with pytest.raises(ParameterError):
        ratio_Lm([2, 2, 2], 3, 0.0625)


def test_ratio_LS_examples():
    assert ratio_LS([3, 5], 1.0) == 1.0
    assert ratio_LS([4, 4, 4], 1.0) == pytest.approx(math.sqrt(math.log(4) / 4), rel=1e-12)
    assert ratio_LS([4, 4, 4], 1.0) == pytest.approx(0.5887, abs=1e-4)
    assert ratio_LS([3, 3, 3, 3], 0.5) == pytest.approx(0.5 * math.log(3) / 3, rel=1e-12)
    assert ratio_LS([3, 3, 3, 3], 0.5) == pytest.approx(0.1831, abs=1e-4)


def test_ratio_LS_gamma_domain():
    with pytest.raises(ParameterError):
        ratio_LS([3, 3, 3], 3 / math.log(3))


def test_default_trials():
    assert default_trials_Lm([2, 2, 2], 0.05, 0.05) == 200


# ---------------------------------------------------------------- bilinear base cases


def test_bilinear_roots_examples():
    x, y, v = solve_bilinear_roots([[1]], 3)
    assert v == pytest.approx(1) and x[0] == 1 and y[0] == 1
    x, y, v = solve_bilinear_roots([[0, 1], [1, 0]], 4)
    assert v == pytest.approx(2)
    assert solve_bilinear_roots(np.zeros((2, 3)), 5)[2] == 0


def test_bilinear_roots_tall_matrix_and_guard():
    rng = np.random.default_rng(0)
    A = crandn(rng, (5, 2))
    x, y, v = solve_bilinear_roots(A, 3)
    assert v == pytest.approx(np.real(x @ A @ y), rel=1e-12)
    assert in_roots(x, 3) and in_roots(y, 3)
    with pytest.raises(EnumerationTooLarge):
        solve_bilinear_roots(np.ones((4, 4)), 3, ExactEnumeration(guard=10))


def test_bilinear_roots_rejects_circle():
    with pytest.raises(ParameterError):
        solve_bilinear_roots([[1]], INF)


def test_bilinear_circle_examples():
    c = 0.3 - 2.0j
    assert solve_bilinear_circle([[c]])[2] == pytest.approx(abs(c), rel=1e-14)
    x, y, v = solve_bilinear_circle([[1, 1j]])
    assert v == pytest.approx(2, rel=1e-14)
    assert solve_bilinear_circle(np.zeros((2, 2)))[2] == 0


@pytest.mark.parametrize("seed", range(20))
def test_exact_dominates_alternating(seed):
    rng = np.random.default_rng(seed)
    A = crandn(rng, (3, 4))
    exact = solve_bilinear_roots(A, 4)[2]
    alt = solve_bilinear_roots(A, 4, AlternatingMaximization(starts=4), rng)[2]
    svd = solve_bilinear_roots(A, 4, PowerSVD(), rng)[2]
    assert exact >= alt - 1e-12 and exact >= svd - 1e-12


# ---------------------------------------------------------------- singular pair


def test_singular_pair_diagonal():
    s, u, v = largest_singular_pair(np.diag([2.0, 1.0]))
    assert s == pytest.approx(2, rel=1e-12)
    assert abs(abs(u[0]) - 1) < 1e-8 and abs(abs(v[0]) - 1) < 1e-8


def test_singular_pair_permutation():
    s, u, v = largest_singular_pair([[0, 1], [1, 0]])
    assert s == pytest.approx(1, rel=1e-12)


def test_singular_pair_matches_svd():
    rng = np.random.default_rng(1)
    A = crandn(rng, (5, 7))
    s, u, v = largest_singular_pair(A)
    assert s == pytest.approx(np.linalg.svd(A, compute_uv=False)[0], rel=1e-8)
    assert np.linalg.norm(u) == pytest.approx(1) and np.linalg.norm(v) == pytest.approx(1)
    z = u @ A @ v
    assert z.real == pytest.approx(s, rel=1e-12) and abs(z.imag) < 1e-12


def test_singular_pair_zero_matrix():
    with pytest.raises(ZeroMatrix):
        largest_singular_pair(np.zeros((2, 2)))


def test_singular_pair_warns_without_convergence():
    rng = np.random.default_rng(2)
    with pytest.warns(NoConvergenceWarning):
        largest_singular_pair(crandn(rng, (6, 6)), max_iters=1)


# ---------------------------------------------------------------- solve_Lm


def test_solve_Lm_trivial_and_zero():
    assert solve_Lm(np.ones((1, 1, 1)), 4).value == pytest.approx(1.0)
    assert solve_Lm(np.zeros((2, 2, 2)), 3, trials=5).value == 0


def test_solve_Lm_report_fields():
    rng = np.random.default_rng(3)
    F = crandn(rng, (2, 2, 2))
    rep = solve_Lm(F, 3, rng=11)
    assert rep.trials_run == 200
    assert rep.seed == 11
    assert rep.certified and rep.base_case == "ExactEnumeration"
    assert rep.ratio_formula_value == ratio_Lm([2, 2, 2], 3, 0.05)
    assert rep.value == pytest.approx(np.real(eval_multilinear(F, rep.solution)), abs=1e-10)
    assert all(in_roots(x, 3) for x in rep.solution)
    assert math.isfinite(rep.theory_trials_log) and rep.theory_trials_log > 1e70


def test_solve_Lm_restores_slot_order():
    rng = np.random.default_rng(4)
    F = crandn(rng, (4, 2, 3))
    rep = solve_Lm(F, 4, trials=20)
    assert [x.shape[0] for x in rep.solution] == [4, 2, 3]
    assert rep.value == pytest.approx(np.real(eval_multilinear(F, rep.solution)), abs=1e-10)


def test_solve_Lm_circle_feasible():
    rng = np.random.default_rng(5)
    F = crandn(rng, (2, 3, 3))
    rep = solve_Lm(F, INF, trials=20)
    assert not rep.certified
    for x in rep.solution:
        np.testing.assert_allclose(np.abs(x), 1, atol=1e-12)


def test_solve_Lm_monotone_in_trials():
    rng = np.random.default_rng(6)
    F = crandn(rng, (2, 3, 3))
    values = [solve_Lm(F, 3, trials=t, rng=2).value for t in (1, 2, 5, 10, 40)]
    assert values == sorted(values)


def test_solve_Lm_thread_count_invariant():
    rng = np.random.default_rng(7)
    F = crandn(rng, (3, 3, 3))
    a = solve_Lm(F, 4, trials=30, rng=5, workers=1)
    b = solve_Lm(F, 4, trials=30, rng=5, workers=4)
    assert a.to_dict() == b.to_dict()


def test_solve_Lm_parameter_errors():
    F = np.ones((2, 2, 2))
    with pytest.raises(ParameterError):
        solve_Lm(F, 3, delta=0.1)
    with pytest.raises(ParameterError):
        solve_Lm(F, 3, epsilon=1.5)
    with pytest.raises(ParameterError):
        solve_Lm(np.ones(3), 3)


def test_solve_Lm_ratio_small_battery():
    failures = 0
    for seed in range(30):
        F = crandn(np.random.default_rng(100 + seed), (2, 2, 2))
        rep = solve_Lm(F, 3, trials=50, rng=seed)
        vmax = brute_force_multilinear_roots(F, 3).v_max
        assert rep.value <= vmax + 1e-10
        failures += rep.value < rep.ratio_formula_value * vmax
    assert failures == 0


# ---------------------------------------------------------------- solve_LS


def test_solve_LS_matrix_is_singular_value():
    rng = np.random.default_rng(8)
    A = crandn(rng, (3, 5))
    rep = solve_LS(A)
    assert rep.trials_run == 1
    assert rep.value == pytest.approx(np.linalg.svd(A, compute_uv=False)[0], rel=1e-8)


def test_solve_LS_rank_one():
    rng = np.random.default_rng(9)
    a, b, c = (crandn(rng, 2) for _ in range(3))
    F = np.einsum("i,j,k->ijk", a, b, c)
    opt = np.linalg.norm(a) * np.linalg.norm(b) * np.linalg.norm(c)
    rep = solve_LS(F, trials=100, rng=3)
    assert 0.5 * opt <= rep.value <= opt + 1e-10
    for x in rep.solution:
        assert np.linalg.norm(x) == pytest.approx(1, abs=1e-12)


def test_solve_LS_zero():
    assert solve_LS(np.zeros((2, 2, 2)), trials=3).value == 0


def test_solve_LS_gamma_domain():
    with pytest.raises(ParameterError):
        solve_LS(np.ones((2, 2, 2)), gamma=5.0)
