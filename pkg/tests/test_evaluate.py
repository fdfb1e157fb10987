from fractions import Fraction
import random

import pytest
from hypothesis import given, settings

from foconv.evaluate import (
    EvaluationError, definable_set, is_algebraic_on_sequence, pushforward, rooted_counts, rooted_values,
    satisfies, solution_count, solution_count_bruteforce, stone_pairing, truth_table,
)
from foconv.formula import Not, parse
from foconv.graph import Graph, GraphSequence, RootedGraph, complete_graph, cycle_graph, path_graph, star_graph
from helpers import formulas, graphs, rooted_graphs


def test_k3_edge_pairing():
    v = stone_pairing(complete_graph(3), parse("x ~ y"))
    assert (v.count, v.total, v.value) == (6, 9, Fraction(2, 3))
    assert v.to_dict() == {"count": "6", "total": "9", "value": "2/3"}


def test_sentence_pairing_is_truth_value():
    assert stone_pairing(path_graph(3), parse("exists x. exists y. x ~ y")).value == 1
    assert stone_pairing(path_graph(3), parse("forall x. exists y. x ~ y & y ~ x & x = y")).value == 0


def test_satisfies_example():
    g = path_graph(3)
    assert satisfies(g, parse("exists y. x ~ y & y ~ z"), {"x": 0, "z": 2})
    assert not satisfies(g, parse("x ~ z"), {"x": 0, "z": 2})


def test_satisfies_needs_full_assignment():
    with pytest.raises(EvaluationError):
        satisfies(path_graph(3), parse("x ~ y"), {"x": 0})


def test_definable_set_example():
    ds = definable_set(path_graph(3), parse("exists a. exists b. x ~ a & x ~ b & a != b"))
    assert ds.vertices == (1,)


def test_rooted_example():
    g = complete_graph(2)
    assert stone_pairing(RootedGraph(g, 0), parse("x ~ root")).value == Fraction(1, 2)
    assert rooted_values(path_graph(3), parse("x ~ root")) == [Fraction(1, 3), Fraction(2, 3), Fraction(1, 3)]


def test_root_without_root_errors():
    with pytest.raises(EvaluationError):
        stone_pairing(path_graph(3), parse("x ~ root"))


def test_self_loop_atom_false():
    assert solution_count(complete_graph(3), parse("x ~ x")) == 0


def test_truth_table_order():
    t = truth_table(path_graph(3), parse("x ~ y & y = y"), order=["y", "x"])
    assert t.shape == (3, 3) and t[1, 0] and not t[0, 2]


def test_cell_cap():
    with pytest.raises(EvaluationError):
        solution_count(complete_graph(6), parse("a ~ b & c ~ d & e ~ f"), cap=1000)


def test_pushforward_example():
    mu = pushforward(path_graph(3), parse("x = x"), parse("x ~ root"))
    # vertex 0 sees {1}, vertex 1 sees {0, 2}, vertex 2 sees {1}
    assert mu.ground == (0, 1, 2)
    assert mu.weights == {0b010: Fraction(2, 3), 0b101: Fraction(1, 3)}


def test_is_algebraic_on_sequence():
    seq = GraphSequence([star_graph(m) for m in range(2, 6)])
    ok, profile = is_algebraic_on_sequence(seq, parse("exists a. exists b. x ~ a & x ~ b & a != b"))
    assert ok and profile == [1, 1, 1, 1]
    ok, _ = is_algebraic_on_sequence(seq, parse("x = x"))
    assert not ok


@settings(max_examples=150, deadline=None)
@given(graphs(n_max=5), formulas(free=("x", "y"), depth=2))
def test_matches_bruteforce(g, phi):
    assert solution_count(g, phi) == solution_count_bruteforce(g, phi)


@settings(max_examples=150, deadline=None)
@given(rooted_graphs(n_max=5), formulas(free=("x",), depth=2, root=True))
def test_complement(rg, phi):
    assert stone_pairing(rg, phi).value + stone_pairing(rg, Not(phi)).value == 1


@settings(max_examples=100, deadline=None)
@given(graphs(n_max=6), formulas(free=("x", "y"), depth=2))
def test_isomorphism_invariance(g, phi):
    perm = list(range(g.n))
    random.Random(g.n * 7 + len(g.edges)).shuffle(perm)
    assert stone_pairing(g, phi).value == stone_pairing(g.permute(perm), phi).value


@settings(max_examples=80, deadline=None)
@given(graphs(n_max=5), formulas(free=("x",), depth=1, root=True))
def test_rooted_counts_match_direct(g, phi):
    counts, total = rooted_counts(g, phi, range(g.n))
    for r in range(g.n):
        v = stone_pairing(RootedGraph(g, r), phi)
        assert Fraction(counts[r], total) == v.value


def test_empty_graph():
    g = Graph(0, [])
    with pytest.raises(EvaluationError):
        stone_pairing(g, parse("x ~ y"))
    assert stone_pairing(g, parse("forall x. x ~ x")).value == 1


PENTAGON = parse("exists a. exists b. exists c. exists d. x ~ a & a ~ b & b ~ c & c ~ d & d ~ x"
                 " & x != b & x != c & a != c & a != d & b != d")


def test_existential_block_matches_bruteforce():
    tailed = Graph(6, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (4, 5)])
    for g in (cycle_graph(5), cycle_graph(6), complete_graph(5), tailed):
        assert solution_count(g, PENTAGON) == solution_count_bruteforce(g, PENTAGON)


def test_existential_block_stays_under_cap():
    # 60 vertices: a naive 5-variable table would need 60**5 cells
    g = cycle_graph(60)
    assert solution_count(g, PENTAGON, cap=60**3) == 0
    assert definable_set(cycle_graph(5), PENTAGON).vertices == (0, 1, 2, 3, 4)


def test_existential_block_edge_cases():
    empty = Graph(0, [])
    assert stone_pairing(empty, parse("exists a. exists b. a ~ b & b = b")).value == 0
    g = path_graph(3)
    assert solution_count(g, parse("exists a. exists z. a ~ x & x = x")) == 3
    assert solution_count(g, parse("exists a. a ~ x & (exists b. b ~ b)")) == 0
