import json
from fractions import Fraction as F

import pytest

from covering_measure.covering import cover
from covering_measure.exceptions import ArgumentError, ResourceError, StructuralError
from covering_measure.gallery import (
    VARIANTS,
    SpaceSpec,
    cantor_alternating,
    cantor_widths,
    counterexample_schedule,
    cyclic,
    discrete,
    fat_cantor,
    generate,
    harmonic,
    hyperspace,
    hyperspace_map,
    interval,
    two_cluster,
)
from covering_measure.intervals import min_cover_count
from covering_measure.metric import MapKind, MapTable, check_map, hausdorff_distance
from oracles import line_cover_dp, metric_ok


def test_harmonic_space_size_and_limit_point():
    g = harmonic(1000)
    assert g.space.n == 1001
    assert g.space.labels[g.subsets["limit_point"].indices()[0]] == "0"


def test_two_cluster_layout():
    g = two_cluster(50)
    s = g.space
    c0, c1 = g.subsets["cluster0"], g.subsets["cluster1"]
    assert c0.count == 50 and c1.count == 51
    assert (c0 & c1).is_empty() and (c0 | c1) == s.full()
    gap = min(abs(s.coords[i] - s.coords[j]) for i in c0.indices() for j in c1.indices())
    assert gap == F(1, 2)


def test_counterexample_schedule():
    assert counterexample_schedule(2) == [F(1, 13), F(1, 65), F(1, 845), F(1, 4225)]
    with pytest.raises(ArgumentError):
        counterexample_schedule(0)


def test_first_level_has_seven_pieces():
    g = cantor_alternating(1)
    a, b = g.subsets["A"], g.subsets["B"]
    assert len(a) == 7 and len(b) == 3
    assert min_cover_count(a, F(1, 13))[0] == 7
    assert min_cover_count(b, F(1, 13))[0] == 3


def test_two_level_counts_alternate():
    g = cantor_alternating(4)
    rows = [tuple(min_cover_count(x, eps)[0] for x in (g.subsets["A"], g.subsets["B"], g.space)) for eps in counterexample_schedule(2)]
    assert rows == [(7, 3, 10), (21, 21, 42), (147, 63, 210), (441, 441, 882)]
    ratios = [F(a, k) for a, _, k in rows]
    assert ratios == [F(7, 10), F(1, 2), F(7, 10), F(1, 2)]


def test_widths_stay_in_range():
    for alphas in (cantor_widths(6), cantor_widths(6, children=(3, 7))):
        assert all(0 < a < 2 for a in alphas[1:])


def test_depth_seven_has_no_room():
    with pytest.raises(StructuralError):
        cantor_alternating(7)


def test_literal_margins_leave_nothing():
    with pytest.raises(StructuralError):
        cantor_alternating(2, shrink_base=65)


def test_cantor_argument_checks():
    with pytest.raises(ArgumentError):
        cantor_alternating(0)
    with pytest.raises(ArgumentError):
        cantor_alternating(2, children=(4, 3))


def test_fat_cantor_lengths():
    g = fat_cantor(3)
    assert g.subsets["kept"].length == F(1, 2) + F(1, 2 ** 4)
    assert len(g.subsets["kept"]) == 8
    assert g.subsets["kept"].union(g.subsets["gaps"]) == g.space


def test_cyclic_and_discrete_are_metrics():
    assert metric_ok(cyclic(9).space.dist_table())
    assert discrete(4).space.n == 4
    with pytest.raises(ArgumentError):
        cyclic(0)


def test_hyperspace_of_three_point_path():
    base = interval(F(1, 2))
    h = hyperspace(base)
    s = h.space
    assert s.n == 7
    assert metric_ok(s.dist_table())
    members = h.meta["members"]
    for i in range(s.n):
        for j in range(s.n):
            a = base.space.mask([base.space.labels[k] for k in members[i]])
            b = base.space.mask([base.space.labels[k] for k in members[j]])
            assert s.dist(i, j) == hausdorff_distance(base.space, a, b)


def test_hyperspace_cap():
    with pytest.raises(ResourceError):
        hyperspace(discrete(13))


def test_singletons_are_isometric_to_the_base():
    base = interval(F(1, 4))
    h = hyperspace(base)
    singles = h.subsets["singletons"].indices()
    for i, x in enumerate(singles):
        for j, y in enumerate(singles):
            assert h.space.dist(x, y) == base.space.dist(i, j)


def test_induced_reflection_is_an_isometry():
    base = interval(F(1, 4))
    refl = MapTable.from_coordinate_function(base.space, base.space, lambda x: 1 - x)
    h = hyperspace(base).space
    assert check_map(h, h, hyperspace_map(refl, base.space.n)) == MapKind.ISOMETRY


def test_grid_covering_counts():
    s = interval(F(1, 10)).space
    for m in range(1, 25):
        assert cover(s, s.full(), F(1, m)).size == line_cover_dp(list(s.coords), F(1, m))


@pytest.mark.parametrize(
    "doc",
    [
        {"variant": "interval", "pitch": "1/8"},
        {"variant": "cyclic", "m": 6},
        {"variant": "harmonic", "n_max": 20},
        {"variant": "product", "left": {"variant": "cyclic", "m": 3}, "right": {"variant": "discrete", "n": 2}},
        {"variant": "hyperspace", "base": {"variant": "interval", "pitch": "1/2"}},
    ],
)
def test_spec_round_trip(doc):
    spec = SpaceSpec.from_json(json.dumps(doc))
    assert SpaceSpec.from_json(spec.to_json()) == spec
    g = generate(spec)
    assert g.space is not None


def test_spec_errors():
    with pytest.raises(ArgumentError):
        SpaceSpec.from_json({"variant": "moebius"})
    with pytest.raises(StructuralError):
        SpaceSpec.from_json({"m": 3})
    with pytest.raises(ArgumentError):
        generate({"variant": "cyclic"})
    assert set(VARIANTS) >= {"interval", "cantor_alternating", "harmonic", "two_cluster", "cyclic"}
