"""Tests for sequential measure constructions and the sphere sampler."""
import itertools
from fractions import Fraction

import numpy as np
import pytest
import scipy.stats
from hypothesis import given, settings, strategies as st

from markovlab.densities import density, hom_measure, s_table
from markovlab.errors import BudgetError, ValidationError
from markovlab.graphs import (Graph, Tree, complete_bipartite, cycle, path,
                              search_order, star)
from markovlab.seqmeasure import (k22_order_experiment, order_independence_report,
                                  sequential_star_measure, sphere_sequential_sample,
                                  tree_distribution, _ks_statistic_uniform)
from markovlab.spaces import random_space, space_from_matrix


def edge_space(mode="rational"):
    if mode == "rational":
        return space_from_matrix([["0", "1/2"], ["1/2", "0"]], mode="rational")
    return space_from_matrix([[0.0, 0.5], [0.5, 0.0]])


def brute_measure(g, s):
    """Oracle: full-map table weight(phi) = prod pi[phi(v)] * prod W[phi(u)][phi(v)]."""
    W = s.step_matrix()
    nv = g.vertex_count
    shape = (s.n,) * nv
    out = np.empty(shape, dtype=object) if s.is_rational else np.zeros(shape)
    for phi in itertools.product(range(s.n), repeat=nv):
        w = Fraction(1) if s.is_rational else 1.0
        for v in range(nv):
            w = w * s.pi[phi[v]]
        for u, v in g.edges:
            w = w * W[phi[u], phi[v]]
        out[phi] = w
    return out


def all_search_orders(g):
    """Every permutation whose every vertex (after the first) touches an earlier one."""
    adj = g.adjacency()
    orders = []
    for perm in itertools.permutations(range(g.vertex_count)):
        if all(adj[perm[i]] & set(perm[:i]) for i in range(1, len(perm))):
            orders.append(perm)
    return orders


def all_trees(n):
    """All labeled trees on 0..n-1 where each vertex attaches to a smaller one."""
    if n == 1:
        yield Tree.from_graph(Graph(1, frozenset()))
        return
    for parents in itertools.product(*(range(i) for i in range(1, n))):
        g = Graph.from_edges(n, ((parents[i - 1], i) for i in range(1, n)))
        yield Tree.from_graph(g)


# ---------------------------------------------------------------------------
# tree_distribution


def test_single_edge_tree_distribution_is_eta():
    s = edge_space()
    table = tree_distribution(star(1), s, (0, 1))
    assert np.array_equal(table, s.eta)


def test_single_vertex_tree_distribution_is_pi():
    s = edge_space()
    table = tree_distribution(Tree.from_graph(Graph(1, frozenset())), s, (0,))
    assert np.array_equal(table, s.pi)


def test_two_leaf_star_on_edge_space_forces_opposite_leaves():
    s = edge_space()
    table = tree_distribution(star(2), s, (0, 1, 2))
    assert table[0, 1, 1] == Fraction(1, 2)
    assert table[1, 0, 0] == Fraction(1, 2)
    assert table.sum() == 1
    assert np.count_nonzero(table != Fraction(0)) == 2


def test_tree_distribution_total_mass_exact_in_rational_mode():
    s = random_space(3, rng=11, mode="rational")
    t = Tree.from_graph(path(3))
    table = tree_distribution(t, s, tuple(search_order(t, 0)))
    assert table.sum() == Fraction(1)


def test_tree_distribution_matches_hom_measure_float():
    s = random_space(4, rng=3)
    t = Tree.from_graph(path(3))
    table = tree_distribution(t, s, tuple(search_order(t, 2)))
    expected = hom_measure(t.graph, s).materialize()
    assert np.max(np.abs(table - expected)) < 1e-12


def test_tree_distribution_rejects_disconnected_prefix():
    t = Tree.from_graph(path(2))
    with pytest.raises(ValidationError, match="earlier neighbor"):
        tree_distribution(t, edge_space(), (0, 2, 1))


def test_tree_distribution_rejects_non_permutation():
    with pytest.raises(ValidationError, match="permutation"):
        tree_distribution(star(1), edge_space(), (0, 0))


def test_tree_distribution_budget():
    s = random_space(40, rng=0)
    with pytest.raises(BudgetError):
        tree_distribution(star(3), s, (0, 1, 2, 3))


def test_all_small_trees_order_independent_exact():
    # every labeled tree on <= 5 vertices, every search order, rational space
    s = random_space(2, rng=19, mode="rational")
    for n in range(1, 6):
        for t in all_trees(n):
            orders = all_search_orders(t.graph)
            reference = tree_distribution(t, s, orders[0])
            for order in orders[1:]:
                assert np.array_equal(tree_distribution(t, s, order), reference)


@given(n_atoms=st.integers(2, 3), seed=st.integers(0, 50), root=st.integers(0, 3))
@settings(max_examples=40, deadline=None)
def test_tree_distribution_equals_brute_measure(n_atoms, seed, root):
    s = random_space(n_atoms, rng=seed, mode="rational")
    t = Tree.from_graph(path(3))
    table = tree_distribution(t, s, tuple(search_order(t, root)))
    assert np.array_equal(table, brute_measure(t.graph, s))


# ---------------------------------------------------------------------------
# sequential star measures


def test_c4_star_measure_matches_hom_measure_exactly():
    s = edge_space()
    trace = sequential_star_measure(cycle(4), s, (0, 1, 2, 3))
    assert trace.total_mass() == Fraction(2)
    assert np.array_equal(trace.table, hom_measure(cycle(4), s).materialize())


def test_star_measure_total_mass_equals_density():
    s = random_space(3, rng=8)
    g = complete_bipartite(2, 2).to_graph()
    trace = sequential_star_measure(g, s, (3, 1, 0, 2))
    assert trace.total_mass() == pytest.approx(density(cycle(4), s), rel=1e-12)


def test_star_measure_rejects_triangles():
    with pytest.raises(ValidationError, match="triangle"):
        sequential_star_measure(cycle(3), edge_space(), (0, 1, 2))


def test_star_measure_budget():
    s = random_space(40, rng=1)
    with pytest.raises(BudgetError):
        sequential_star_measure(cycle(4), s, (0, 1, 2, 3))


def test_step_kernels_sum_to_s_tables():
    s = random_space(3, rng=21)
    trace = sequential_star_measure(cycle(4), s, (0, 1, 2, 3))
    final = trace.steps[-1]
    assert final.center == 3
    assert final.attachment == (0, 2)
    expected = s_table(s, 2).table
    assert np.max(np.abs(final.psi.sum(axis=-1) - expected)) < 1e-12


def test_zero_mass_tuples_recorded_and_theta_zeroed():
    s = edge_space()  # atoms 0 and 1 share no common neighbor
    trace = sequential_star_measure(cycle(4), s, (0, 1, 2, 3))
    final = trace.steps[-1]
    assert set(final.zero_mass) == {(0, 1), (1, 0)}
    for z in final.zero_mass:
        assert all(v == Fraction(0) for v in final.theta[z])
    # elsewhere theta is a conditional distribution
    assert final.theta[0, 0].sum() == Fraction(1)
    assert final.theta[1, 1].sum() == Fraction(1)


def test_theta_rows_normalized_float():
    s = random_space(4, rng=13)
    trace = sequential_star_measure(cycle(6), s, (5, 0, 1, 2, 3, 4))
    for step in trace.steps:
        if step.attachment and not step.zero_mass:
            sums = step.theta.sum(axis=-1)
            assert np.max(np.abs(sums - 1.0)) < 1e-12


@st.composite
def triangle_free_graph(draw):
    n = draw(st.integers(2, 5))
    pairs = list(itertools.combinations(range(n), 2))
    chosen = draw(st.sets(st.sampled_from(pairs)))
    g = Graph.from_edges(n, chosen)
    from markovlab.graphs import is_triangle_free
    if not is_triangle_free(g):
        g = Graph(n, frozenset())
    return g


@given(g=triangle_free_graph(), seed=st.integers(0, 30), order_seed=st.integers(0, 5))
@settings(max_examples=40, deadline=None)
def test_star_measure_equals_brute_measure(g, seed, order_seed):
    s = random_space(2, rng=seed, mode="rational")
    order = tuple(int(v) for v in
                  np.random.default_rng(order_seed).permutation(g.vertex_count))
    trace = sequential_star_measure(g, s, order)
    assert np.array_equal(trace.table, brute_measure(g, s))


def test_order_independence_report_rational_is_exact():
    rep = order_independence_report(cycle(4), edge_space(), n_orders=6, seed=3)
    assert rep.max_deviation == 0.0
    assert rep.orders_tested == 8


def test_order_independence_report_float():
    s = random_space(3, rng=5)
    rep = order_independence_report(cycle(6), s, n_orders=4, seed=9)
    assert rep.max_deviation < 1e-12
    assert rep.orders_tested == 6


# ---------------------------------------------------------------------------
# sphere sampling


def test_sphere_sample_edges_orthogonal():
    g = cycle(6)
    for d in (3, 4):
        images = sphere_sequential_sample(g, d, tuple(range(6)), seed=17)
        assert images is not None
        for v, vec in images.items():
            assert vec.shape == (d,)
            assert abs(np.linalg.norm(vec) - 1.0) < 1e-9
        for u, v in g.edges:
            assert abs(np.dot(images[u], images[v])) < 1e-9


def test_sphere_sample_deterministic():
    a = sphere_sequential_sample(cycle(4), 3, (0, 1, 2, 3), seed=99)
    b = sphere_sequential_sample(cycle(4), 3, (0, 1, 2, 3), seed=99)
    assert all(np.array_equal(a[v], b[v]) for v in a)


def test_sphere_sample_degenerate_returns_none():
    # in R^2 the two path endpoints almost surely span the plane, leaving no
    # unit vector orthogonal to both for the middle vertex
    result = sphere_sequential_sample(path(2), 2, (0, 2, 1), seed=4)
    assert result is None


def test_sphere_sample_rejects_triangles():
    with pytest.raises(ValidationError, match="triangle"):
        sphere_sequential_sample(cycle(3), 4, (0, 1, 2), seed=0)


# ---------------------------------------------------------------------------
# the K_{2,2} order experiment


def test_k22_experiment_requires_d3():
    with pytest.raises(ValidationError, match="d=3"):
        k22_order_experiment(4, 2000, seed=0)


def test_k22_experiment_requires_enough_samples():
    with pytest.raises(ValidationError, match="samples"):
        k22_order_experiment(3, 10, seed=0)


def test_k22_experiment_statistics():
    rep = k22_order_experiment(3, 2000, seed=12)
    assert rep.hist_order_a.shape == (40,)
    assert rep.hist_order_b.shape == (40,)
    assert rep.hist_order_a.sum() == 2000
    assert rep.hist_order_b.sum() == 2000
    # order A: <u1,u2> is uniform on [-1,1]; order B: concentrated at +-1
    assert rep.ks_vs_uniform < 0.05
    assert rep.mass_at_one >= 0.999
    assert rep.hist_order_b[1:-1].sum() <= (1 - 0.999) * 2000
    assert np.all(np.abs(rep.samples_b[np.abs(rep.samples_b) > 1 - 1e-6]) <= 1 + 1e-9)


def test_k22_experiment_deterministic():
    a = k22_order_experiment(3, 1000, seed=7)
    b = k22_order_experiment(3, 1000, seed=7)
    assert np.array_equal(a.samples_a, b.samples_a)
    assert np.array_equal(a.samples_b, b.samples_b)


def test_ks_statistic_matches_scipy():
    rng = np.random.default_rng(3)
    samples = rng.uniform(-1, 1, size=500)
    ours = _ks_statistic_uniform(samples)
    ref = scipy.stats.kstest(samples, scipy.stats.uniform(loc=-1, scale=2).cdf)
    assert ours == pytest.approx(ref.statistic, abs=1e-12)
