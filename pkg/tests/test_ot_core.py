import itertools

import numpy as np
import pytest

from measure_pca import _ot_fallback
from measure_pca.measures import DiscreteMeasure, uniform_measure
from measure_pca.ot_core import (
    QuantileGrid,
    barycentric_map,
    empirical_quantiles,
    solve_discrete_ot,
    squared_distance_matrix,
    transport_cost,
    w2_squared_1d,
)

def permutation_minimum(a, b):
    """Exhaustive oracle for equal-size uniform instances."""
    m = a.num_points
    cost = squared_distance_matrix(a.points, b.points)
    best = np.inf
    for perm in itertools.permutations(range(m)):
        best = min(best, sum(cost[i, perm[i]] for i in range(m)) / m)
    return best


# --- empirical quantiles ---------------------------------------------------

def test_quantiles_hand_case():
    grid = QuantileGrid(np.array([0.2, 0.5, 0.9]))
    # ceil(t*3) = 1, 2, 3 over the sorted sample (1, 2, 3)
    assert np.array_equal(empirical_quantiles(np.array([3.0, 1.0, 2.0]), grid), [1.0, 2.0, 3.0])


def test_quantiles_constant_and_singleton():
    grid = QuantileGrid(np.array([0.1, 0.5, 0.99]))
    assert np.array_equal(empirical_quantiles(np.full(4, 2.5), grid), [2.5, 2.5, 2.5])
    assert np.array_equal(empirical_quantiles(np.array([7.0]), grid), [7.0, 7.0, 7.0])


def test_quantiles_empty_errors():
    with pytest.raises(ValueError):
        empirical_quantiles(np.array([]), QuantileGrid(np.array([0.5])))


def test_quantiles_nondecreasing_random():
    rng = np.random.default_rng(0)
    grid = QuantileGrid(np.linspace(0.05, 0.95, 19))
    for _ in range(50):
        q = empirical_quantiles(rng.normal(size=rng.integers(1, 40)), grid)
        assert np.all(np.diff(q) >= 0)


def test_quantile_grid_validation():
    with pytest.raises(ValueError):
        QuantileGrid(np.array([0.0, 0.5]))
    with pytest.raises(ValueError):
        QuantileGrid(np.array([0.5, 0.5]))


# --- 1D closed form ----------------------------------------------------------

def test_w2_1d_hand_cases():
    a = uniform_measure(np.array([[0.0], [2.0]]))
    b = uniform_measure(np.array([[1.0], [3.0]]))
    assert w2_squared_1d(a, b) == pytest.approx(1.0, abs=1e-12)
    assert w2_squared_1d(a, a) == 0.0
    c = uniform_measure(np.array([[0.0], [0.0]]))
    d = uniform_measure(np.array([[1.0], [1.0]]))
    assert w2_squared_1d(c, d) == pytest.approx(1.0, abs=1e-12)


def test_w2_1d_monotone_beats_all_couplings():
    # brute force over couplings confirms the sorted matching is optimal
    rng = np.random.default_rng(1)
    for _ in range(20):
        a = uniform_measure(rng.normal(size=(4, 1)))
        b = uniform_measure(rng.normal(size=(4, 1)))
        assert w2_squared_1d(a, b) == pytest.approx(permutation_minimum(a, b), rel=1e-9)


def test_w2_1d_unequal_sizes_error():
    a = uniform_measure(np.zeros((2, 1)))
    b = uniform_measure(np.zeros((3, 1)))
    with pytest.raises(ValueError):
        w2_squared_1d(a, b)


# --- exact solver ------------------------------------------------------------

def test_identical_measures_zero_cost():
    mu = uniform_measure(np.arange(12.0).reshape(4, 3))
    plan = solve_discrete_ot(mu, mu)
    assert transport_cost(plan, mu, mu) == pytest.approx(0.0, abs=1e-12)


def test_two_point_vertical_matching():
    src = uniform_measure(np.array([[0.0, 0.0], [1.0, 0.0]]))
    tgt = uniform_measure(np.array([[0.0, 1.0], [1.0, 1.0]]))
    plan = solve_discrete_ot(src, tgt)
    assert transport_cost(plan, src, tgt) == pytest.approx(1.0, abs=1e-12)


def test_exactness_vs_permutation_oracle():
    rng = np.random.default_rng(2)
    for _ in range(60):
        m = int(rng.integers(1, 7))
        d = int(rng.integers(1, 4))
        a = uniform_measure(rng.integers(-5, 6, size=(m, d)).astype(float))
        b = uniform_measure(rng.integers(-5, 6, size=(m, d)).astype(float))
        c_solver = transport_cost(solve_discrete_ot(a, b), a, b)
        c_oracle = permutation_minimum(a, b)
        assert c_solver == pytest.approx(c_oracle, rel=1e-9, abs=1e-12)


def test_marginals_and_support_size():
    rng = np.random.default_rng(3)
    for _ in range(20):
        m0 = int(rng.integers(1, 40))
        m = int(rng.integers(1, 40))
        a = uniform_measure(rng.normal(size=(m0, 2)))
        b = uniform_measure(rng.normal(size=(m, 2)))
        plan = solve_discrete_ot(a, b)
        assert np.max(np.abs(plan.row_sums() - a.weights)) <= 1e-9
        assert np.max(np.abs(plan.col_sums() - b.weights)) <= 1e-9
        assert plan.mass.size <= m0 + m - 1
        assert np.all(plan.mass >= 0)


def test_1d_consistency_with_closed_form():
    rng = np.random.default_rng(4)
    for _ in range(20):
        m = int(rng.integers(1, 30))
        a = uniform_measure(rng.normal(size=(m, 1)))
        b = uniform_measure(rng.normal(size=(m, 1)))
        c_plan = transport_cost(solve_discrete_ot(a, b), a, b)
        assert c_plan == pytest.approx(w2_squared_1d(a, b), rel=1e-9, abs=1e-12)


def test_cost_symmetry():
    rng = np.random.default_rng(5)
    for _ in range(10):
        a = uniform_measure(rng.normal(size=(7, 2)))
        b = uniform_measure(rng.normal(size=(11, 2)))
        cab = transport_cost(solve_discrete_ot(a, b), a, b)
        cba = transport_cost(solve_discrete_ot(b, a), b, a)
        assert cab == pytest.approx(cba, rel=1e-9, abs=1e-12)


def test_translation_cost():
    rng = np.random.default_rng(6)
    pts = rng.normal(size=(9, 3))
    v = np.array([0.5, -1.0, 2.0])
    a = uniform_measure(pts)
    b = uniform_measure(pts + v)
    cost = transport_cost(solve_discrete_ot(a, b), a, b)
    assert cost == pytest.approx(float(v @ v), rel=1e-9)


def test_duplicate_atoms_allowed():
    a = uniform_measure(np.array([[0.0], [0.0], [1.0]]))
    b = uniform_measure(np.array([[0.5], [0.5], [0.5]]))
    plan = solve_discrete_ot(a, b)
    assert transport_cost(plan, a, b) == pytest.approx(0.25, abs=1e-12)


def test_dimension_mismatch_error():
    a = uniform_measure(np.zeros((2, 1)))
    b = uniform_measure(np.zeros((2, 2)))
    with pytest.raises(ValueError):
        solve_discrete_ot(a, b)


def test_solver_deterministic():
    rng = np.random.default_rng(7)
    a = uniform_measure(rng.normal(size=(15, 2)))
    b = uniform_measure(rng.normal(size=(23, 2)))
    p1 = solve_discrete_ot(a, b)
    p2 = solve_discrete_ot(a, b)
    assert np.array_equal(p1.i_idx, p2.i_idx)
    assert np.array_equal(p1.j_idx, p2.j_idx)
    assert np.array_equal(p1.mass, p2.mass)


def test_fallback_matches_native_bitwise():
    rng = np.random.default_rng(8)
    for (m0, m) in [(1, 1), (2, 5), (12, 12), (20, 35), (60, 40)]:
        x = rng.normal(size=(m0, 3))
        y = rng.normal(size=(m, 3)) + 0.25
        cost = squared_distance_matrix(x, y)
        r = np.full(m0, 1.0 / m0)
        c = np.full(m, 1.0 / m)
        from measure_pca.ot_core import _backend

        na = _backend.solve_dense(cost, r, c)
        fa = _ot_fallback.solve_dense(cost, r, c)
        assert np.array_equal(na[0], fa[0])
        assert np.array_equal(na[1], fa[1])
        assert np.array_equal(na[2], fa[2])
        assert na[3] == fa[3]


def test_transport_cost_shape_mismatch():
    a = uniform_measure(np.zeros((2, 1)))
    b = uniform_measure(np.zeros((3, 1)))
    plan = solve_discrete_ot(a, b)
    with pytest.raises(ValueError):
        transport_cost(plan, b, a)


def test_single_atoms_distance():
    a = uniform_measure(np.array([[0.0, 0.0]]))
    b = uniform_measure(np.array([[3.0, 4.0]]))
    plan = solve_discrete_ot(a, b)
    assert transport_cost(plan, a, b) == pytest.approx(25.0, abs=1e-12)


# --- barycentric map ---------------------------------------------------------

def test_barycentric_permutation_case():
    rng = np.random.default_rng(9)
    pts = rng.normal(size=(6, 2))
    perm = rng.permutation(6)
    a = uniform_measure(pts)
    b = uniform_measure(pts[perm] + 0.0)
    plan = solve_discrete_ot(a, b)
    tmap = barycentric_map(plan, a, b)
    assert np.allclose(tmap, pts, atol=1e-12)


def test_barycentric_mass_split():
    src = uniform_measure(np.array([[0.0]]))
    tgt = uniform_measure(np.array([[-1.0], [1.0]]))
    plan = solve_discrete_ot(src, tgt)
    tmap = barycentric_map(plan, src, tgt)
    assert tmap == pytest.approx(np.array([[0.0]]), abs=1e-12)


def test_barycentric_rows_in_convex_hull():
    rng = np.random.default_rng(10)
    for _ in range(10):
        a = uniform_measure(rng.normal(size=(5, 2)))
        b = uniform_measure(rng.normal(size=(8, 2)))
        plan = solve_discrete_ot(a, b)
        tmap = barycentric_map(plan, a, b)
        lo = b.points.min(axis=0) - 1e-12
        hi = b.points.max(axis=0) + 1e-12
        assert np.all(tmap >= lo) and np.all(tmap <= hi)


def test_barycentric_zero_weight_error():
    a = DiscreteMeasure(np.array([[0.0], [1.0]]), np.array([0.0, 1.0]))
    b = uniform_measure(np.array([[0.5]]))
    plan = solve_discrete_ot(a, b)
    with pytest.raises(ValueError):
        barycentric_map(plan, a, b)
