from fractions import Fraction

import pytest

from foconv.evaluate import EvaluationError, stone_pairing
from foconv.formula import build_power_conj, parse
from foconv.graph import Graph, GraphSequence, RootedGraph, path_graph, star_graph
from foconv.rooting import (
    choose_I, extend_prefix, find_exponents, order_roots, root_multi, root_single, sentence_pair, verdict,
)

CENTER = parse("exists a. exists b. x ~ a & x ~ b & a != b")
NEIGHBOR = parse("x ~ root")


def test_order_roots_p3():
    order = order_roots(path_graph(3), parse("x = x"), NEIGHBOR)
    assert order.vertices == (1, 0, 2)
    assert order.values == (Fraction(2, 3), Fraction(1, 3), Fraction(1, 3))


def test_order_roots_singleton_and_unsat():
    assert len(order_roots(star_graph(3), CENTER, NEIGHBOR)) == 1
    order = order_roots(path_graph(4), parse("x = x"), parse("x ~ root & x != x"))
    assert order.vertices == (0, 1, 2, 3) and set(order.values) == {0}


def test_order_roots_custom_tie_break():
    order = order_roots(path_graph(3), parse("x = x"), NEIGHBOR, tie_break=lambda v: -v)
    assert order.vertices == (1, 2, 0)


@pytest.mark.parametrize("deltas,expected", [
    ([], "inconclusive"),
    ([0.0, 0.0, 0.0], "converging"),
    ([0.01, 0.02], "converging"),
    ([0.5, 0.01, 0.01, 0.1], "inconclusive"),
    ([0.5, 0.5, 0.5, 0.5], "oscillating"),
    ([0.5, 0.5, 0.5, 0.01, 0.01, 0.1], "inconclusive"),
])
def test_verdict_rule(deltas, expected):
    assert verdict(deltas) == expected


def test_constant_sequence_converges():
    g = path_graph(4)
    rep = root_single(GraphSequence([g] * 5), parse("x = x"), NEIGHBOR)
    assert rep.deltas == [0.0] * 4 and rep.verdict == "converging"


def test_star_values():
    seq = GraphSequence([star_graph(m) for m in range(2, 21)])
    rep = root_single(seq, CENTER, NEIGHBOR)
    assert rep.chosen_values == [Fraction(m, m + 1) for m in range(2, 21)]
    assert all(a > b for a, b in zip(rep.deltas, rep.deltas[1:]))
    assert rep.verdict == "converging"


def test_root_single_errors():
    seq = GraphSequence([star_graph(m) for m in range(2, 5)])
    with pytest.raises(EvaluationError):
        root_single(seq, parse("x = x"), NEIGHBOR)
    with pytest.raises(EvaluationError):
        root_single(seq, CENTER, NEIGHBOR, index=2)


def test_root_single_sentence():
    seq = GraphSequence([star_graph(m) for m in range(2, 6)])
    rep = root_single(seq, CENTER, parse("exists a. a ~ root"))
    assert rep.extra["stabilized"] == "all"
    pos, neg = sentence_pair(CENTER, parse("exists a. a ~ root"))
    assert stone_pairing(star_graph(3), pos).value == 1 and stone_pairing(star_graph(3), neg).value == 0


def test_choose_I_empty():
    I, _ = choose_I([path_graph(3)], parse("x = x"), [parse("x ~ root & x != x")])
    assert I == ()


def test_choose_I_single():
    I, v = choose_I([path_graph(3)], parse("x = x"), [NEIGHBOR])
    assert I == (0,) and v == 0


def test_choose_I_disjoint_support_tie():
    g = Graph(4, [(0, 1), (2, 3)], {"A": {1}, "B": {2}})
    phis = [parse("x = root & A(root)"), parse("x = root & B(root)")]
    I, v = choose_I([g], parse("x = x"), phis)
    # two maximal singletons of equal size: the smaller witness id wins
    assert I == (0,) and v == 1


def test_choose_I_rejects_sentences():
    with pytest.raises(ValueError):
        choose_I([path_graph(3)], parse("x = x"), [parse("exists a. a ~ root")])


def test_find_exponents_examples():
    h, q, t = Fraction(1, 2), Fraction(1, 4), Fraction(1, 3)
    assert find_exponents([[h]]) == [1]
    assert find_exponents([[h], [h, t]]) == [1, 1]
    assert find_exponents([[h, q], [q, Fraction(1, 16)]]) == [1, 1]
    assert find_exponents([[h, q], [h, q]]) == [1, 2]


def test_find_exponents_budget():
    with pytest.raises(ValueError):
        find_exponents([[Fraction(1, 2), Fraction(1, 4)], [Fraction(1, 2), Fraction(1, 4)]], budget=1)
    with pytest.raises(ValueError):
        find_exponents([[Fraction(3, 2)]])


def test_root_multi_single_formula_matches_root_single():
    seq = GraphSequence([path_graph(5), star_graph(4), Graph(5, [(0, 1), (2, 3), (3, 4)])])
    multi = root_multi(seq, parse("x = x"), [NEIGHBOR])
    single = root_single(seq, parse("x = x"), NEIGHBOR)
    assert multi.exponents == [1]
    assert multi.roots == single.roots


def _factor_graph():
    return Graph(4, [(0, 1), (1, 2), (1, 3), (2, 3)])


def test_root_multi_factorization_on_constant_sequence():
    g = _factor_graph()
    phis = [NEIGHBOR, parse("exists a. x ~ a & a ~ root")]
    rep = root_multi(GraphSequence([g] * 4), parse("x = x"), phis)
    for r in rep.per_formula:
        assert r.deltas == [0.0] * 3
    psi = build_power_conj([phis[i] for i in rep.I], rep.exponents)
    root = rep.roots[-1]
    prod = Fraction(1)
    for i, e in zip(rep.I, rep.exponents):
        prod *= stone_pairing(RootedGraph(g, root), phis[i]).value ** e
    assert stone_pairing(RootedGraph(g, root), psi).value == prod


def test_root_multi_formula_outside_I():
    g = Graph(4, [(0, 1), (1, 2)], {"B": {3}})
    rep = root_multi(GraphSequence([g] * 3), parse("x = x"), [NEIGHBOR, parse("x = root & B(root)")])
    assert rep.I == (0,)
    assert all(v <= rep.tau0 for v in rep.tail_values[1])


def test_extend_prefix_single_matches_root_multi():
    seq = GraphSequence([path_graph(4)] * 3)
    rep = extend_prefix(seq, parse("x = x"), [NEIGHBOR])
    assert rep.consistent
    assert rep.prefixes[0].roots == root_multi(seq, parse("x = x"), [NEIGHBOR]).roots


def test_extend_prefix_inconsistency():
    # roots 0 and 1 have swapped values: deg 3 vs 1, non-neighbors 1 vs 3
    g = Graph(5, [(0, 2), (0, 3), (0, 4), (1, 2)], {"A": {0, 1}})
    phis = [NEIGHBOR, parse("!x ~ root & x != root")]
    rep = extend_prefix(GraphSequence([g] * 3), parse("A(x)"), phis)
    assert rep.prefixes[0].roots[-1] == 0
    assert rep.prefixes[1].exponents == [1, 2]
    assert rep.prefixes[1].roots[-1] == 1
    assert not rep.consistent
    assert rep.conflicts[0][:3] == (1, 1, 2)


def test_extend_prefix_consistent_on_compatible_formulas():
    g = star_graph(4)
    rep = extend_prefix(GraphSequence([g] * 3), parse("x = x"), [NEIGHBOR, parse("x = x & x ~ root")])
    assert rep.consistent
