import math

import pytest

from foconv.evaluate import definable_set
from foconv.formula import parse
from foconv.graph import Graph, complete_bipartite, gen_bipartite_random, path_graph
from foconv.experiments import (
    OracleMismatch, XI_A, XI_B, bipartite_sequences, run_counterexample, run_extension_scan,
    run_lattice_oracle, unlabel_with_gadgets,
)


def test_sequences_shape():
    seq_p, seq_q, inter = bipartite_sequences(range(3, 6), 0.2, 0.8, 1)
    assert [g.n for g in inter] == [12, 12, 20, 20, 30, 30]
    assert list(inter)[0] == list(seq_p)[0] and list(inter)[1] == list(seq_q)[0]


def test_counterexample_basic_fields():
    rep = run_counterexample(range(4, 7), 0.2, 0.8, 7)
    assert rep.eps == pytest.approx(0.2)
    assert len(rep.indices) == 6 and len(rep.gaps) == 5
    assert len(rep.rows) == 2 * (4 + 5 + 6)
    for row in rep.rows:
        assert 0 <= float(row["proportion"]) <= 1
    assert rep.verdict == "oscillating"


def test_counterexample_deterministic():
    a = run_counterexample(range(4, 7), 0.2, 0.8, 3)
    b = run_counterexample(range(4, 7), 0.2, 0.8, 3)
    assert a.to_csv() == b.to_csv()


def test_counterexample_swap_mirrors_parity():
    a = run_counterexample(range(4, 8), 0.2, 0.8, 5)
    b = run_counterexample(range(4, 8), 0.8, 0.2, 5)
    odd_a = [r["degree"] for r in a.rows if r["index"] % 2]
    even_b = [r["degree"] for r in b.rows if not r["index"] % 2]
    assert odd_a == even_b
    assert a.eps == b.eps


def test_counterexample_degenerate():
    rep = run_counterexample(range(4, 7), 0.5, 0.5, 0)
    assert rep.degenerate and rep.verdict == "no oscillation (p == q)"


def test_counterexample_rejects_bad_params():
    with pytest.raises(ValueError):
        run_counterexample(range(4, 6), 0.0, 0.5, 0)
    with pytest.raises(ValueError):
        run_counterexample(range(4, 6), 0.2, 0.8, 0, part="C")


def test_counterexample_a_part_informational():
    rep = run_counterexample(range(4, 7), 0.2, 0.8, 7, part="A")
    means = rep.summary()["parity_means"]
    assert abs(means["odd"] - 0.2) < 0.1 and abs(means["even"] - 0.8) < 0.1


def test_degree_concentration():
    # fraction of B vertices with |deg/n^2 - p| > 3 sqrt(p(1-p))/n, over 100 seeds at n = 8
    n, p = 8, 0.2
    bound = 3 * math.sqrt(p * (1 - p)) / n
    bad = total = 0
    for seed in range(100):
        g = gen_bipartite_random(n, p, seed)
        for b in g.labels["B"]:
            total += 1
            bad += abs(g.degree(b) / n**2 - p) > bound
    assert bad / total <= 0.05


def test_extension_scan_k22():
    rep = run_extension_scan([complete_bipartite(2, 2)], 2)
    assert rep.verdicts == [[True, False]]
    assert rep.witnesses[0][1] is not None
    assert rep.to_dict()["graphs"][0]["witnesses"][0] is None


def test_extension_scan_k1_and_monotone():
    seq, _, _ = bipartite_sequences(range(3, 7), 0.5, 0.5, 2)
    rep = run_extension_scan(seq, 3)
    assert all(v[0] for v in rep.verdicts)
    assert rep.monotone


def test_extension_scan_rejects_unmarked():
    with pytest.raises(ValueError):
        run_extension_scan([path_graph(3)], 1)


def test_lattice_oracle_trivial_formula():
    rep = run_lattice_oracle(path_graph(3), parse("x = x"), parse("x = x"), 2, 2)
    assert rep.ok and all(c["eval"] == 1 for c in rep.cells)


def test_lattice_oracle_p3():
    rep = run_lattice_oracle(path_graph(3), parse("x = x"), parse("x ~ root"), 2, 2)
    assert rep.t == 3 and rep.ok and len(rep.cells) == 4


def test_lattice_oracle_labelled_random():
    g = Graph(8, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 7), (0, 4), (2, 6)], {"A": {1, 5}})
    rep = run_lattice_oracle(g, parse("A(x)"), parse("x ~ root | x = root"), 3, 2)
    assert rep.t == 2 and rep.ok and rep.max_level_error <= 1e-6


def test_lattice_oracle_too_large():
    with pytest.raises(ValueError):
        run_lattice_oracle(path_graph(7), parse("x = x"), parse("x ~ root"), 1, 1)


def test_oracle_mismatch_is_assertion():
    assert issubclass(OracleMismatch, AssertionError)


def test_unlabel_single_edge():
    g = Graph(2, [(0, 1)], {"A": {0}, "B": {1}})
    plain, formulas = unlabel_with_gadgets([g])
    h = plain[0]
    assert h.n == 8 and not any(h.labels.values())
    assert definable_set(h, parse(formulas["B"])).vertices == (1,)
    assert definable_set(h, parse(formulas["A"])).vertices == (0,)
    assert formulas == {"A": XI_A, "B": XI_B}


def test_unlabel_recovers_parts():
    g = gen_bipartite_random(3, 0.6, 4)
    plain, formulas = unlabel_with_gadgets([g])
    h = plain[0]
    for part in ("A", "B"):
        expected = {v for v in g.labels[part] if g.degree(v) > 0}
        assert set(definable_set(h, parse(formulas[part])).vertices) == expected


def test_unlabel_empty():
    plain, formulas = unlabel_with_gadgets([])
    assert list(plain) == [] and set(formulas) == {"A", "B"}
