import json
from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from covering_measure.exceptions import ArgumentError
from covering_measure.limits import (
    LimitEstimate,
    LimitStrategy,
    RatioSequence,
    detect_oscillation,
    estimate_limit,
)


def seq(values):
    return RatioSequence.from_values(values)


ALTERNATING = [F(1, 2), F(7, 10)] * 4


def test_constant_sequence_converges_to_its_value():
    est = estimate_limit(seq([F(1, 3)] * 8))
    assert est.converged and est.value == F(1, 3) and est.width == 0


def test_geometric_approach_converges():
    est = estimate_limit(seq([F(1, 2) + F(1, 2**k) for k in range(10, 20)]))
    assert est.converged
    assert abs(est.value - F(1, 2)) < F(1, 1000)


def test_alternation_is_bracketed_not_converged():
    est = estimate_limit(seq(ALTERNATING))
    assert not est.converged and est.value is None
    assert (est.lower, est.upper) == (F(1, 2), F(7, 10))


def test_bracket_strategy_never_claims_convergence():
    est = estimate_limit(seq([F(1, 3)] * 8), LimitStrategy.bracket())
    assert not est.converged
    assert est.contains(F(1, 3))


def test_subsequence_strategy_picks_out_one_branch():
    even = LimitStrategy.subsequence(lambda i, eps: i % 2 == 0)
    odd = LimitStrategy.subsequence(lambda i, eps: i % 2 == 1)
    assert estimate_limit(seq(ALTERNATING), even).value == F(1, 2)
    assert estimate_limit(seq(ALTERNATING), odd).value == F(7, 10)


def test_tolerance_controls_convergence():
    values = [F(1, 2), F(1, 2) + F(1, 50)] * 4
    assert not estimate_limit(seq(values)).converged
    assert estimate_limit(seq(values), LimitStrategy.classical(F(1, 20))).converged


def test_too_few_samples_raise():
    with pytest.raises(ArgumentError):
        estimate_limit(seq([1, 1, 1]))
    with pytest.raises(ArgumentError):
        detect_oscillation(seq([1] * 5))


def test_strategy_validation():
    with pytest.raises(ArgumentError):
        LimitStrategy("sometimes")
    with pytest.raises(ArgumentError):
        LimitStrategy.classical(0)
    with pytest.raises(ArgumentError):
        LimitStrategy("subsequence")


def test_eps_must_descend():
    with pytest.raises(ArgumentError):
        RatioSequence((F(1, 4), F(1, 2)), (0, 0))


def test_alternation_has_two_alternating_clusters():
    rep = detect_oscillation(seq(ALTERNATING))
    assert rep.n_clusters == 2 and rep.oscillating and rep.alternates()
    assert rep.centers == (F(1, 2), F(7, 10))


def test_convergent_sequence_is_one_cluster():
    rep = detect_oscillation(seq([F(1, 2) + F(1, 2**k) for k in range(3, 15)]))
    assert rep.n_clusters == 1 and not rep.oscillating


def test_limit_estimate_json_round_trip():
    for est in (estimate_limit(seq(ALTERNATING)), estimate_limit(seq([F(2, 7)] * 6))):
        again = LimitEstimate.from_json(json.loads(json.dumps(est.to_json())))
        assert again == est


def test_oscillation_json_lists_clusters():
    doc = detect_oscillation(seq(ALTERNATING)).to_json()
    assert doc["clusters"] == ["1/2", "7/10"]
    assert len(doc["assignment"]) == 4


@given(st.lists(st.fractions(0, 1, max_denominator=100), min_size=4, max_size=30))
def test_bracket_covers_the_tail(values):
    est = estimate_limit(seq(values))
    tail = values[-est.tail_length:]
    assert est.lower == min(tail) and est.upper == max(tail)
    assert est.converged == (est.width <= F(1, 100))


@given(st.fractions(0, 1, max_denominator=50), st.integers(6, 30))
def test_sequences_converging_to_a_value_are_found(limit, n):
    values = [limit + F(1, 2 ** (k + 8)) for k in range(n)]
    est = estimate_limit(seq(values))
    assert est.converged and est.contains(limit + F(1, 2 ** (n + 7)))
    assert detect_oscillation(seq(values)).n_clusters == 1


@given(st.fractions(0, 1, max_denominator=20), st.fractions(1, 2, max_denominator=20), st.integers(3, 10))
def test_two_level_alternation_gives_two_clusters(a, gap, reps):
    lo, hi = a, a + gap / 4
    rep = detect_oscillation(seq([lo, hi] * reps))
    assert rep.centers == (lo, hi) and rep.alternates()
