"""Random graphs and formulas shared by the test modules."""

from __future__ import annotations

import random

from hypothesis import strategies as st

from foconv.formula import And, Edge, Eq, Exists, Forall, Iff, Implies, Label, Not, Or, ROOT, Var
from foconv.graph import Graph, RootedGraph

LABELS = ("A", "B")


def random_graph(rng: random.Random, n_min: int = 1, n_max: int = 7, p: float | None = None,
                 labels: bool = True) -> Graph:
    n = rng.randint(n_min, n_max)
    p = rng.random() if p is None else p
    edges = [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < p]
    labs = {}
    if labels:
        labs = {name: frozenset(v for v in range(n) if rng.random() < 0.4) for name in LABELS}
    return Graph(n, edges, labs)


def _atom(rng: random.Random, names: list[str], root: bool):
    terms = [Var(x) for x in names] + ([ROOT] if root else [])
    kind = rng.random()
    if kind < 0.55:
        return Edge(rng.choice(terms), rng.choice(terms))
    if kind < 0.8:
        return Eq(rng.choice(terms), rng.choice(terms))
    return Label(rng.choice(LABELS), rng.choice(terms))


def random_formula(rng: random.Random, free: list[str], depth: int = 2, size: int = 4,
                   root: bool = False, pool: str = "abcd"):
    """Formula with free variables among ``free`` and quantifier depth at most ``depth``."""
    bound = [v for v in pool if v not in free]

    def go(scope: list[str], qd: int, budget: int):
        r = rng.random()
        if budget <= 0 or not scope and qd == 0 or r < 0.25:
            if not scope:
                if root:
                    return _atom(rng, [], True)
                return Exists(bound[0], _atom(rng, [bound[0]], False)) if bound else Eq(Var("a"), Var("a"))
            return _atom(rng, scope, root)
        if r < 0.45 and qd > 0:
            avail = [v for v in bound if v not in scope]
            if avail:
                v = rng.choice(avail)
                cls = Exists if rng.random() < 0.5 else Forall
                return cls(v, go(scope + [v], qd - 1, budget - 1))
        if r < 0.55:
            return Not(go(scope, qd, budget - 1))
        cls = rng.choice((And, And, Or, Implies, Iff))
        return cls(go(scope, qd, budget // 2), go(scope, qd, budget // 2))

    return go(list(free), depth, size)


@st.composite
def graphs(draw, n_min: int = 1, n_max: int = 6, labels: bool = True):
    n = draw(st.integers(n_min, n_max))
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    mask = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    labs = {}
    if labels:
        for name in LABELS:
            labs[name] = frozenset(draw(st.sets(st.integers(0, n - 1), max_size=n)))
    return Graph(n, [e for e, keep in zip(pairs, mask) if keep], labs)


@st.composite
def rooted_graphs(draw, n_min: int = 1, n_max: int = 6):
    g = draw(graphs(n_min, n_max))
    return RootedGraph(g, draw(st.integers(0, g.n - 1)))


@st.composite
def formulas(draw, free=("x",), depth: int = 2, root: bool = False):
    seed = draw(st.integers(0, 2**32 - 1))
    return random_formula(random.Random(seed), list(free), depth=depth, root=root)


# acceptance results, printed by conftest.pytest_terminal_summary
ACCEPTANCE: dict[int, str] = {}


def record(number: int, title: str, ok: bool, detail: str) -> bool:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d} {title}: {detail}"
    ACCEPTANCE[number] = line
    print(line)
    return ok
