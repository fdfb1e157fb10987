from fractions import Fraction
from math import comb
import random

import pytest
from hypothesis import given, settings, strategies as st

from foconv.lattice import (
    FTable, RootRecoveryError, SubsetMeasure, cover_count, cover_count_bruteforce, d_coefficient,
    elementary_from_power_sums, event_E_bruteforce, filter_measure, forward_F, forward_F_bruteforce,
    forward_table, level_multisets, matching_distance, newton_power_sums_to_roots, parse_number,
    perturbation_report, random_measure, reconstruct,
)


def uniform(m: int) -> SubsetMeasure:
    sets = [[i for i in range(m) if mask >> i & 1] for mask in range(1 << m)]
    return SubsetMeasure.from_sets(range(m), {tuple(s): Fraction(1, 1 << m) for s in sets})


def test_measure_validation():
    with pytest.raises(ValueError):
        SubsetMeasure.from_sets([0, 1], {(0,): Fraction(1, 2)})
    with pytest.raises(ValueError):
        SubsetMeasure.from_sets([0, 1], {(0, 5): Fraction(1)})
    with pytest.raises(ValueError):
        SubsetMeasure.from_sets([0, 1], {(0,): Fraction(3, 2), (1,): Fraction(-1, 2)})


def test_parse_number():
    assert parse_number("1/3") == Fraction(1, 3)
    assert parse_number("0.25") == 0.25


def test_filter_masses_uniform():
    mu = uniform(2)
    assert filter_measure(mu, [0]) == Fraction(1, 2)
    assert filter_measure(mu, []) == 1
    assert level_multisets(mu)[1] == [Fraction(1, 2), Fraction(1, 2)]


def test_forward_uniform_m2():
    mu = uniform(2)
    # two independent uniform subsets of [2] share an element with probability 7/16
    assert forward_F(mu, 1, 2) == Fraction(7, 16)
    assert forward_F(mu, 2, 1) == Fraction(1, 4)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 3), st.integers(0, 10**6), st.integers(1, 3))
def test_forward_matches_bruteforce(m, seed, k):
    mu = random_measure(m, random.Random(seed), max_den=6)
    for l in range(1, m + 1):
        assert forward_F(mu, l, k) == forward_F_bruteforce(mu, l, k)


def test_event_E_is_filter_power():
    mu = random_measure(3, random.Random(5))
    for s in ([1], [2, 3], []):  # ground is 1..m
        assert event_E_bruteforce(mu, s, 3) == filter_measure(mu, s) ** 3


def test_ftable_shape_checked():
    with pytest.raises(ValueError):
        FTable(2, [[1], [1, 1], [1, 1]])


def test_ftable_json_round_trip():
    t = forward_table(random_measure(3, random.Random(1)))
    assert FTable.from_dict(t.to_dict()).P == t.P


@pytest.mark.parametrize("r", range(1, 6))
def test_cover_counts_closed_form(r):
    for l in range(1, r + 1):
        for j in range(1, comb(r, l) + 1):
            assert cover_count(j, l, r) == cover_count_bruteforce(j, l, r)


def test_cover_count_rejects_bad_args():
    with pytest.raises(ValueError):
        cover_count(0, 1, 2)
    with pytest.raises(ValueError):
        cover_count(1, 3, 2)


def test_d_coefficients():
    assert [d_coefficient(l, l) for l in range(1, 6)] == [1] * 5
    assert d_coefficient(1, 2) == -1
    assert d_coefficient(2, 3) == -2
    assert d_coefficient(1, 3) == 1


def test_newton_example():
    assert newton_power_sums_to_roots([3, 5]) == pytest.approx([2, 1], abs=1e-9)


def test_newton_exact_repeated_roots():
    z = [Fraction(6), Fraction(6), Fraction(6), Fraction(6), Fraction(6), Fraction(6)]
    assert newton_power_sums_to_roots(z) == pytest.approx([1.0] * 6, abs=1e-12)


def test_newton_rejects_complex():
    # x^2 + 1 has power sums (0, -2)
    with pytest.raises(RootRecoveryError):
        newton_power_sums_to_roots([0, -2])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.fractions(0, 1, max_denominator=50), min_size=1, max_size=6))
def test_newton_round_trip_exact(xs):
    z = [sum(x ** k for x in xs) for k in range(1, len(xs) + 1)]
    got = newton_power_sums_to_roots(z)
    assert matching_distance(got, xs) < 1e-7


def test_elementary_values():
    assert elementary_from_power_sums([Fraction(3), Fraction(5)]) == [3, 2]


def test_reconstruct_uniform_m2():
    rec = reconstruct(forward_table(uniform(2)))
    assert rec.A[1] == pytest.approx([0.5, 0.5])
    assert rec.A[2] == pytest.approx([0.25])
    assert rec.A[0] == [1.0]


def test_reconstruct_concentrated():
    mu = SubsetMeasure.from_sets(range(4), {(0, 1, 2, 3): Fraction(1)})
    rec = reconstruct(forward_table(mu))
    for l in range(5):
        assert rec.A[l] == pytest.approx([1.0] * comb(4, l))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.integers(0, 10**6))
def test_reconstruct_round_trip(m, seed):
    mu = random_measure(m, random.Random(seed))
    rec = reconstruct(forward_table(mu))
    direct = level_multisets(mu)
    for l in range(m + 1):
        assert matching_distance(rec.A[l], direct[l]) <= 1e-6


def test_reconstruct_from_floats():
    t = forward_table(random_measure(3, random.Random(2)))
    rec_exact = reconstruct(t)
    rec_float = reconstruct(FTable(3, [[float(x) for x in row] for row in t.P]))
    for a, b in zip(rec_exact.A, rec_float.A):
        assert matching_distance(a, b) < 1e-6


def test_perturbation_flags_repeated_roots():
    rep = perturbation_report(forward_table(uniform(3)), delta=1e-10, trials=5)
    assert rep.degraded and rep.flagged


def test_perturbation_continuity_generic():
    mu = random_measure(2, random.Random(11))
    rep = perturbation_report(forward_table(mu), delta=1e-10, trials=10)
    assert rep.max_displacement is not None and rep.max_displacement < 1e-6


def test_measure_json_round_trip():
    mu = random_measure(3, random.Random(4))
    assert SubsetMeasure.from_dict(mu.to_dict()).weights == mu.weights
