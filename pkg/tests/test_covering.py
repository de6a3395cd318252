import random
from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from covering_measure.covering import (
    EXACT,
    GREEDY,
    CoverCache,
    build_instance,
    check_schedule,
    cover,
    covering_curve,
    solve_exact,
    solve_sweep,
)
from covering_measure.exceptions import ArgumentError, BudgetExhaustedError
from covering_measure.gallery import cyclic, interval, product_space
from covering_measure.intervals import normalize
from covering_measure.metric import FiniteMetricSpace, SubsetMask
from oracles import brute_cover, graph_metric, line_cover_dp


def grid(step, hi=1):
    return interval(F(step), 0, F(hi)).space


def random_graph_space(rng, n):
    edges = [(i, i + 1) for i in range(n - 1)]
    edges += [(i, j) for i in range(n) for j in range(i + 2, n) if rng.random() < 0.3]
    weights = [F(rng.randint(1, 6), rng.randint(1, 4)) for _ in edges]
    table = graph_metric(n, edges, weights)
    return FiniteMetricSpace.from_matrix([f"v{i:02d}" for i in range(n)], table), table


def eps_between_distances(rng, table):
    values = sorted({d for row in table for d in row})
    values.append(values[-1] + 1)
    k = rng.randrange(len(values) - 1)
    return (values[k] + values[k + 1]) / 2


# -- fixed examples -------------------------------------------------------------------------


def test_five_point_grid_candidates_and_optimum():
    s = grid(F(1, 4))
    inst = build_instance(s, s.full(), F(3, 10))
    assert inst.candidate_sizes() == [2, 3, 3, 3, 2]
    res = solve_exact(inst)
    assert res.size == 2 and res.is_exact
    assert [s.coords[c] for c in res.centers] == [F(1, 4), F(3, 4)]


def test_discrete_space_needs_one_ball_per_point():
    d = FiniteMetricSpace.discrete(6)
    assert cover(d, d.full(), F(1, 2)).size == 6


def test_radius_beyond_diameter_needs_one_ball():
    s = cyclic(9).space
    assert cover(s, s.full(), F(1)).size == 1


def test_greedy_is_labelled_as_an_upper_bound():
    s = cyclic(8).space
    res = cover(s, s.full(), F(1, 4), solver="greedy")
    assert res.exactness == GREEDY
    assert res.lower_bound <= res.size


def test_tiny_budget_is_reported():
    z5 = cyclic(5)
    s = product_space(z5, z5).space
    with pytest.raises(BudgetExhaustedError):
        cover(s, s.full(), F(3, 10), solver="exact", budget=1)


def test_zero_budget_is_an_argument_error():
    s = cyclic(4).space
    with pytest.raises(ArgumentError):
        solve_exact(build_instance(s, s.full(), F(1, 2)), budget=0)


def test_bad_radius_and_empty_subset():
    s = cyclic(4).space
    with pytest.raises(ArgumentError):
        cover(s, s.full(), 0)
    with pytest.raises(ArgumentError):
        cover(s, s.empty(), F(1, 2))
    with pytest.raises(ArgumentError):
        cover(s, s.full(), F(1, 2), solver="magic")


def test_sweep_needs_a_line_space():
    s = cyclic(5).space
    with pytest.raises(ArgumentError):
        solve_sweep(s, s.full(), F(1, 3))


def test_product_of_cycles_is_not_multiplicative():
    # three balls cover Z4 x Z4 at radius 3/8 although each factor needs two
    z4 = cyclic(4)
    p = product_space(z4, z4).space
    eps = F(3, 8)
    assert cover(z4.space, z4.space.full(), eps).size == 2
    assert cover(p, p.full(), eps).size == 3


def test_product_of_line_grids_is_multiplicative():
    a, b = grid(F(1, 4)), grid(F(1, 3))
    p = product_space(interval(F(1, 4)), interval(F(1, 3))).space
    for eps in (F(1, 5), F(3, 10), F(2, 5), F(7, 10)):
        want = cover(a, a.full(), eps).size * cover(b, b.full(), eps).size
        assert cover(p, p.full(), eps).size == want


# -- oracle agreement ----------------------------------------------------------------------


@pytest.mark.parametrize("seed", range(40))
def test_exact_matches_brute_force_on_graph_metrics(seed):
    rng = random.Random(seed)
    n = rng.randint(2, 10)
    space, table = random_graph_space(rng, n)
    target = sorted(rng.sample(range(n), rng.randint(1, n)))
    eps = eps_between_distances(rng, table)
    mask = SubsetMask.from_indices(n, target)
    res = cover(space, mask, eps, solver="exact")
    # labels v00.. sort like the indices
    assert res.size == brute_cover(table, target, eps)[0]
    assert build_instance(space, mask, eps).covers(res.centers)
    assert set(res.centers) <= set(target)
    assert cover(space, mask, eps, solver="greedy").size >= res.size


@given(st.lists(st.fractions(0, 1, max_denominator=24), min_size=1, max_size=14, unique=True), st.integers(1, 30))
def test_sweep_matches_dp_oracle(points, m):
    s = FiniteMetricSpace.from_points(points)
    eps = F(1, m)
    want = line_cover_dp(sorted(points), eps)
    assert solve_sweep(s, s.full(), eps).size == want
    assert cover(s, s.full(), eps, solver="exact").size == want


@given(st.lists(st.fractions(0, 1, max_denominator=12), min_size=1, max_size=10, unique=True), st.integers(1, 12), st.data())
def test_exact_sweep_and_brute_force_agree_on_line_subsets(points, m, data):
    s = FiniteMetricSpace.from_points(points)
    idx = data.draw(st.lists(st.integers(0, s.n - 1), min_size=1, unique=True))
    mask = SubsetMask.from_indices(s.n, idx)
    eps = F(1, m)
    brute = brute_cover(s.dist_table(), sorted(idx), eps)[0]
    assert solve_sweep(s, mask, eps).size == brute
    assert cover(s, mask, eps, solver="exact").size == brute


@given(st.integers(2, 12), st.integers(1, 12), st.integers(1, 12))
def test_counts_are_antitone_in_eps(m, j1, j2):
    s = cyclic(m).space
    e1, e2 = sorted((F(j1, 12), F(j2, 12)))
    assert cover(s, s.full(), e1).size >= cover(s, s.full(), e2).size


def test_results_are_deterministic():
    s = cyclic(15).space
    runs = {cover(s, s.full(), F(2, 15)).to_json(s)["centers"].__repr__() for _ in range(3)}
    assert len(runs) == 1


# -- curves ----------------------------------------------------------------------------------


def test_curve_csv_header_and_rows():
    s = grid(F(1, 8))
    curve = covering_curve(s, s.mask_between(0, F(1, 2)), [F(1, 2), F(1, 4), F(1, 8)])
    lines = curve.to_csv().splitlines()
    assert lines[0] == "epsilon,n_subset,n_space,ratio,exactness,ratio_f64"
    assert len(lines) == 4
    assert all(r.exactness == EXACT for r in curve.rows)


def test_curve_ratio_is_one_for_the_whole_space():
    s = cyclic(10).space
    curve = covering_curve(s, s.full(), [F(1, 2), F(1, 5), F(1, 10)])
    assert curve.ratios() == [1, 1, 1]


def test_curve_on_interval_union():
    unit = normalize([(0, 1)])
    curve = covering_curve(unit, normalize([(0, F(1, 2))]), [F(1, 4), F(1, 8)])
    assert [(r.n_subset, r.n_space) for r in curve.rows] == [(2, 3), (3, 5)]


def test_curve_keeps_exhausted_rows():
    z5 = cyclic(5)
    s = product_space(z5, z5).space
    curve = covering_curve(s, s.full(), [F(1, 2), F(3, 10)], solver="exact", budget=1)
    assert [r.exactness for r in curve.rows][-1] == "budget_exhausted"
    assert curve.rows[-1].ratio is None
    assert curve.to_json()["rows"][-1]["n_subset"] is None


def test_schedule_must_descend():
    with pytest.raises(ArgumentError):
        check_schedule([F(1, 4), F(1, 2)])
    with pytest.raises(ArgumentError):
        check_schedule([])


def test_cache_reuses_counts():
    s = cyclic(6).space
    cache = CoverCache(s)
    cache.count(s.full(), F(1, 3))
    cache.count(s.full(), "1/3")
    assert len(cache) == 1
