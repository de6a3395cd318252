"""Acceptance criteria, one test per criterion.

Every test records a one-line PASS/FAIL verdict (printed in the terminal
summary and to stdout) and then asserts the criterion as stated. Some
criteria describe properties that are false for the objects they name; those
tests fail and print the counterexample they found. Where a fixed corpus
happens to contain no counterexample, the line also reports a known one.
"""

import json
import math
import random
import time
from fractions import Fraction as F

import pytest

from conftest import ACCEPTANCE_LINES
from covering_measure.cli import counterexample_report, hyperspace_report
from covering_measure.covering import build_instance, cover, solve_exact, solve_greedy
from covering_measure.gallery import (
    cantor_alternating,
    counterexample_schedule,
    cyclic,
    harmonic,
    hyperspace,
    interval,
    product_space,
    rotation,
    two_cluster,
)
from covering_measure.intervals import RationalIntervalUnion, min_cover_count, normalize, to_point_space
from covering_measure.limits import LimitStrategy, RatioSequence, estimate_limit
from covering_measure.measure import (
    Schedule,
    borel_measure,
    closed_measure,
    conditional_ratio,
    homogeneity_classes,
    invariance_report,
)
from covering_measure.metric import (
    FiniteMetricSpace,
    MapKind,
    MapTable,
    SubsetMask,
    minkowski_sausage,
    product,
    product_mask,
)
from oracles import brute_cover, graph_metric

pytestmark = pytest.mark.slow


def record(n, ok, detail):
    line = f"C{n} {'PASS' if ok else 'FAIL'} {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def random_subset(rng, n, p=0.5):
    idx = [i for i in range(n) if rng.random() < p]
    return SubsetMask.from_indices(n, idx or [rng.randrange(n)])


# -- 1, 2: the alternating construction --------------------------------------------------------


def test_c1_counterexample_golden_numbers():
    t0 = time.perf_counter()
    g = cantor_alternating(6)
    a, b = g.subsets["A"], g.subsets["B"]
    rows = {}
    for eps in counterexample_schedule(3):
        rows[eps] = (min_cover_count(a, eps)[0], min_cover_count(b, eps)[0])
    elapsed = time.perf_counter() - t0
    want = {F(1, 13): (7, 3), F(1, 65): (21, 21), F(1, 845): (147, 63)}
    golden = all(rows[e] == v for e, v in want.items())
    ratios = [F(x, y) for x, y in rows.values()]
    alternating = all(r == (F(7, 3) if i % 2 == 0 else 1) for i, r in enumerate(ratios))
    ok = golden and alternating and elapsed < 60
    shown = ", ".join(f"{e}:{x}/{y}" for e, (x, y) in rows.items())
    assert record(1, ok, f"N(A)/N(B) per eps {shown}; A/B ratios {[str(r) for r in ratios]}; {elapsed:.1f}s")


def test_c2_divergence_detected():
    rep = counterexample_report(3)
    lim = rep["limit"]
    clusters = rep["oscillation"]["clusters"]
    ok = (
        rep["verdict"] == "divergent"
        and not lim["converged"]
        and (lim["lower"], lim["upper"]) == ("1/2", "7/10")
        and len(clusters) == 2
    )
    assert record(2, ok, f"verdict {rep['verdict']}, bracket [{lim['lower']}, {lim['upper']}], clusters {clusters}")


# -- 3, 4, 5: Lebesgue, Dirac, two clusters -------------------------------------------------------


def test_c3_lebesgue_recovery():
    t0 = time.perf_counter()
    g = interval(F(1, 1000)).space
    sch = Schedule.geometric(F(1, 8), F(1, 2), 6, F(1, 8), F(1, 2), 4)
    closed = borel_measure(g, g.mask_between(F(1, 5), F(1, 2)), sch, solver="sweep")
    opened = borel_measure(g, g.mask_between(F(1, 5), F(1, 2), closed=False), sch, solver="sweep")
    elapsed = time.perf_counter() - t0
    vc, vo = float(closed.value), float(opened.value)
    ok = abs(vc - 0.3) <= 0.02 and abs(vc - vo) <= 0.01 and elapsed < 120
    assert record(3, ok, f"closed {vc:.4f}, open {vo:.4f}, |diff| {abs(vc - vo):.4f}; {elapsed:.1f}s")


def test_c4_dirac_recovery():
    g = harmonic(10**4)
    s = g.space
    floor = g.meta["eps_floor"]
    eps = tuple(F(1, 2**k) for k in range(3, 64) if F(1, 2**k) > floor)
    sch = Schedule(eps, (F(1, 64), F(1, 128), F(1, 256)))
    est = closed_measure(s, s.mask_where(lambda x: x <= F(1, 20)), sch)
    ratios = est.per_delta[-1].ratios.values
    tail = ratios[len(ratios) // 2 :]
    monotone = all(b >= a for a, b in zip(tail, tail[1:]))
    ok = est.value >= F(9, 10) and monotone and ratios[-1] <= 1
    assert record(
        4,
        ok,
        f"closed_measure {float(est.value):.4f} at finest eps 1/{eps[-1].denominator}; "
        f"finest ratio {float(ratios[-1]):.4f}; tail monotone {monotone}",
    )


def test_c5_two_cluster_weights():
    g = two_cluster(10**5)
    s = g.space
    floor = g.meta["eps_floor"]
    eps = [F(1, 2**k) for k in range(3, 64) if F(1, 2**k) > floor]
    c0 = g.subsets["cluster0"]
    values = [F(cover(s, c0, e).size, cover(s, s.full(), e).size) for e in eps]
    seq = RatioSequence(tuple(eps), tuple(values))
    est = estimate_limit(seq, LimitStrategy.bracket())
    mid = est.midpoint
    claimed = F(2, 3)
    agrees = est.contains(claimed)
    statement = "agrees with" if agrees else "DISAGREES with"
    ok = est.width <= F(2, 100)
    assert record(
        5,
        ok,
        f"ratio bracket [{float(est.lower):.4f}, {float(est.upper):.4f}] (width {float(est.width):.4f}), "
        f"midpoint {float(mid):.4f}, last {float(values[-1]):.4f}; {statement} the claimed weight 2/3 "
        f"(deviation {float(mid - claimed):+.4f}; 2 - sqrt 2 = {2 - math.sqrt(2):.4f})",
    )


# -- 6, 7, 8: combinatorial identities and solvers ----------------------------------------------------


def _random_line(rng, n):
    return FiniteMetricSpace.from_points([F(p, 10) for p in sorted(rng.sample(range(40), n))])


def _random_graph(rng, n):
    edges = [(i, i + 1) for i in range(n - 1)]
    edges += [(i, j) for i in range(n) for j in range(i + 2, n) if rng.random() < 0.3]
    table = graph_metric(n, edges, [F(rng.randint(1, 4)) for _ in edges])
    return FiniteMetricSpace.from_matrix([f"v{i}" for i in range(n)], table)


def _random_factor(rng, kind):
    n = rng.randint(1, 8)
    if kind == "line":
        return _random_line(rng, n)
    if kind == "cyclic":
        return cyclic(n).space
    return _random_graph(rng, n)


def test_c6_product_multiplicativity():
    rng = random.Random(6)
    kinds = ["line", "cyclic", "graph"]
    holds = {k: 0 for k in kinds}
    tried = {k: 0 for k in kinds}
    first_failure = None
    for t in range(100):
        kind = kinds[t % 3]
        a, b = _random_factor(rng, kind), _random_factor(rng, kind)
        p = product(a, b)
        dists = sorted({d for d in a.values + b.values if d > 0} | {F(1)})
        k = rng.randrange(len(dists))
        eps = (dists[k] + (dists[k + 1] if k + 1 < len(dists) else 2 * dists[k])) / 2
        sa, sb = random_subset(rng, a.n, 0.7), random_subset(rng, b.n, 0.7)
        na = cover(a, sa, eps, solver="exact").size
        nb = cover(b, sb, eps, solver="exact").size
        npr = cover(p, product_mask(p, sa, sb), eps, solver="exact").size
        tried[kind] += 1
        if npr == na * nb:
            holds[kind] += 1
        elif first_failure is None:
            first_failure = f"{kind} {a.n}x{b.n} pts eps={eps}: N(AxB)={npr} vs {na}*{nb}"
    total = sum(holds.values())
    per = ", ".join(f"{k} {holds[k]}/{tried[k]}" for k in kinds)
    ok = total == 100
    detail = f"equality in {total}/100 ({per})"
    if first_failure:
        detail += f"; e.g. {first_failure}"
    z4 = cyclic(4)
    zz = product_space(z4, z4).space
    n4, n44 = cover(z4.space, z4.space.full(), F(3, 8)).size, cover(zz, zz.full(), F(3, 8)).size
    detail += f"; outside the corpus Z4xZ4 at eps 3/8 gives {n44} vs {n4}*{n4}"
    assert record(6, ok, detail)


def _lemma_spaces(rng):
    return [
        ("grid", lambda: interval(F(1, rng.randint(4, 16))).space),
        ("cyclic", lambda: cyclic(rng.randint(4, 20)).space),
        ("harmonic", lambda: harmonic(rng.randint(5, 25)).space),
        ("product", lambda: product_space(interval(F(1, rng.randint(2, 4))), interval(F(1, rng.randint(2, 4)))).space),
        ("hyperspace", lambda: hyperspace(interval(F(1, rng.randint(2, 3)))).space),
    ]


def test_c7_union_sandwich():
    rng = random.Random(7)
    families = _lemma_spaces(rng)

    def n_of(s, m, e):
        return 0 if m.is_empty() else cover(s, m, e, solver="exact").size

    good = 0
    failures = {}
    example = None
    for t in range(200):
        name, make = families[t % len(families)]
        s = make()
        a, b = random_subset(rng, s.n, 0.4), random_subset(rng, s.n, 0.4)
        delta = rng.choice([v for v in s.values if v > 0]) * rng.choice([1, F(3, 2), 2])
        eps = delta / 2 * rng.choice([F(1, 3), F(1, 2), F(9, 10), F(99, 100)])
        inter = minkowski_sausage(s, a, delta) & minkowski_sausage(s, b, delta)
        na, nb, ni, nu = (n_of(s, m, eps) for m in (a, b, inter, a | b))
        if na + nb - 2 * ni <= nu <= na + nb:
            good += 1
        else:
            failures[name] = failures.get(name, 0) + 1
            if example is None:
                example = f"{name}: N(A),N(B),N(I),N(AuB)=({na},{nb},{ni},{nu}) delta={delta} eps={eps}"
    ok = good == 200
    detail = f"both bounds hold in {good}/200"
    if failures:
        detail += f"; lower bound fails on {failures}; e.g. {example}"
    s = product_space(interval(F(1, 2)), interval(F(1, 3))).space
    a = s.mask(["(1,1/3)", "(1,2/3)", "(1/2,1/3)"])
    b = s.mask(["(0,2/3)", "(1,0)", "(1,1)"])
    inter = minkowski_sausage(s, a, F(3, 2)) & minkowski_sausage(s, b, F(3, 2))
    frozen = [n_of(s, m, F(297, 400)) for m in (a, b, inter, a | b)]
    detail += f"; outside the corpus a 3x4 sup grid at delta 3/2, eps 297/400 gives counts {frozen}"
    assert record(7, ok, detail)


def test_c8_solver_oracles():
    rng = random.Random(8)
    exact_ok = greedy_ok = 0
    for t in range(500):
        n = rng.randint(1, 12)
        kind = t % 3
        if kind == 0:
            s = _random_line(rng, n)
        elif kind == 1:
            s = _random_graph(rng, n)
        else:
            s = cyclic(n).space
        table = s.dist_table()
        target = random_subset(rng, s.n, 0.6)
        vals = sorted({d for row in table for d in row} | {F(1)})
        k = rng.randrange(len(vals))
        eps = (vals[k] + (vals[k + 1] if k + 1 < len(vals) else vals[k] + 1)) / 2
        inst = build_instance(s, target, eps)
        ex = solve_exact(inst).size
        exact_ok += ex == brute_cover(table, target.indices(), eps)[0]
        greedy_ok += solve_greedy(inst).size >= ex

    # discretization: pitch < eps/4 and every interval longer than 2 * pitch
    rng = random.Random(20260101)
    disc_ok = same_sample_ok = cases = 0
    example = None
    while cases < 100:
        k = rng.randint(1, 4)
        ends = sorted(rng.sample(range(65), 2 * k))
        s = normalize([(F(ends[2 * i], 64), F(ends[2 * i + 1], 64)) for i in range(k)])
        eps = F(rng.randint(2, 32), 64)
        pitch = eps / 5
        if any(b - a <= 2 * pitch for a, b in s):
            continue
        sp = to_point_space(s, pitch)
        if sp.n > 600:
            continue
        cases += 1
        continuous = min_cover_count(s, eps)[0]
        sampled = solve_exact(build_instance(sp, sp.full(), eps)).size
        swept = min_cover_count(RationalIntervalUnion.from_points(sp.coords), eps)[0]
        disc_ok += continuous == sampled
        same_sample_ok += swept == sampled
        if continuous != sampled and example is None:
            example = f"{[(str(a), str(b)) for a, b in s]} eps={eps}: union {continuous}, sample {sampled}"
    ok = exact_ok == 500 and greedy_ok == 500 and disc_ok == 100
    detail = (
        f"exact=brute {exact_ok}/500, greedy>=exact {greedy_ok}/500, "
        f"union sweep = exact on sample {disc_ok}/100 (pitch eps/5), "
        f"sweep = exact on the same sample {same_sample_ok}/100"
    )
    if example:
        detail += f"; e.g. {example}"
    assert record(8, ok, detail)


# -- 9 to 13: symmetry consequences ----------------------------------------------------------------------


def test_c9_haar_on_z60():
    s = cyclic(60).space
    arc = s.mask([s.labels[i] for i in range(15)])
    sch = Schedule.geometric()
    mismatches = 0
    for shift in range(60):
        moved = rotation(s, shift).image(arc)
        for eps in sch.eps:
            mismatches += cover(s, arc, eps).size != cover(s, moved, eps).size
    est = borel_measure(s, arc, sch)
    ok = mismatches == 0 and abs(est.value - F(1, 4)) <= F(1, 100)
    assert record(9, ok, f"borel {est.value} ({float(est.value):.4f}); rotation mismatches {mismatches}/{60 * len(sch.eps)}")


def test_c10_hyperspace_reflection():
    rep = hyperspace_report(F(1, 4))
    diffs = [F(r["difference"]) for r in rep["classes"]]
    ok = rep["map_kind"] == "isometry" and all(d <= F(1, 10**9) for d in diffs)
    shown = ", ".join(f"{r['class']} {r['estimate']}|{r['mirrored_estimate']}" for r in rep["classes"])
    assert record(10, ok, f"{rep['hyperspace_points']} points, map {rep['map_kind']}; {shown}")


def test_c11_embedding_and_coercive_monotonicity():
    half, full = interval(F(1, 100), 0, F(1, 2)).space, interval(F(1, 100)).space
    sch = Schedule.geometric(F(1, 8), F(1, 2), 6, F(1, 8), F(1, 2), 3)
    subsets = {"left": half.mask_between(0, F(1, 4))}
    targets = {"P": full.mask_between(0, F(1, 4))}
    inc = MapTable.from_coordinate_function(half, full, lambda x: x)
    dbl = MapTable.from_coordinate_function(half, full, lambda x: 2 * x)
    r1 = invariance_report(half, inc, subsets, sch, target=full, target_subsets=targets)
    r2 = invariance_report(half, dbl, subsets, sch, target=full, target_subsets=targets)
    ok = r1.kind == MapKind.ISOMETRY and r2.kind == MapKind.ONE_COERCIVE and r1.passed and r2.passed
    assert record(
        11,
        ok,
        f"inclusion {r1.kind.value} {len(r1.checks) - len(r1.failures())}/{len(r1.checks)} checks; "
        f"x->2x {r2.kind.value} {len(r2.checks) - len(r2.failures())}/{len(r2.checks)} checks",
    )


def test_c12_conditional_measure():
    unit = normalize([(0, 1)])
    rep = conditional_ratio(unit, normalize([(0, F(1, 2))]), normalize([(0, F(1, 4))]), Schedule.geometric())
    first = abs(rep.mu_F_of_B.value - F(1, 2)) <= F(2, 100) and abs(rep.ratio - F(1, 2)) <= F(2, 100)

    g = two_cluster(10**4)
    floor = g.meta["eps_floor"]
    eps = tuple(F(1, 2**k) for k in range(3, 64) if F(1, 2**k) > floor)
    sch = Schedule(eps, (F(1, 8), F(1, 16), F(1, 32), F(1, 64)))
    rep2 = conditional_ratio(g.space, g.subsets["limit_points"], g.subsets["one"], sch)
    exact_half = rep2.mu_F_of_B.value == F(1, 2)
    second = exact_half and abs(rep2.ratio - F(1, 2)) >= F(1, 10)
    ok = first and second
    assert record(
        12,
        ok,
        f"[0,1]: mu_F(B) {float(rep.mu_F_of_B.value):.4f}, ratio {float(rep.ratio):.4f}; "
        f"two-cluster: mu_F({{1}}) {rep2.mu_F_of_B.value}, ratio {float(rep2.ratio):.4f} "
        f"(|ratio - 1/2| = {float(abs(rep2.ratio - F(1, 2))):.4f}, needs >= 0.1)",
    )


def test_c13_homogeneity():
    z12 = homogeneity_classes(cyclic(12).space, F(1, 4)).n_classes
    grid = interval(F(1, 4)).space
    base = homogeneity_classes(grid, F(3, 10))
    rng = random.Random(13)
    stable = True
    for _ in range(10):
        perm = list(range(grid.n))
        rng.shuffle(perm)
        names = [f"q{perm[i]}" for i in range(grid.n)]
        back = {names[i]: grid.labels[i] for i in range(grid.n)}
        res = homogeneity_classes(FiniteMetricSpace.from_matrix(names, grid.dist_table()), F(3, 10))
        mapped = sorted(tuple(sorted(back[x] for x in c)) for c in res.classes)
        stable = stable and mapped == sorted(base.classes)
    ok = z12 == 1 and base.n_classes == 2 and stable
    assert record(13, ok, f"Z12 {z12} class(es); 5-grid {json.dumps([list(c) for c in base.classes])}; stable under relabeling {stable}")
