"""Tarski semantics, exact solution counts and Stone pairings on finite graphs.

Counting uses extension tables: every subformula is evaluated once to a
boolean array indexed by assignments of its own free variables, so the cost
is ``n ** w`` for ``w`` the largest number of simultaneously live variables.
``satisfies`` is the plain recursive definition and serves as the oracle.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .formula import (
    And, Edge, Eq, Exists, Formula, Iff, Implies, Label, Not, Or, Root,
    deroot, free_vars, uses_root,
)
from .graph import Graph, GraphSequence, RootedGraph
from .lattice import SubsetMeasure

__all__ = [
    "EvaluationError", "StoneValue", "DefinableSet", "DEFAULT_CAP",
    "satisfies", "solution_count", "solution_count_bruteforce", "stone_pairing",
    "definable_set", "truth_table", "rooted_counts", "rooted_values",
    "pushforward", "is_algebraic_on_sequence",
]

# Largest extension table (in cells) the evaluator will materialize.
DEFAULT_CAP = 1 << 26


class EvaluationError(ValueError):
    pass


@dataclass(frozen=True)
class StoneValue:
    """``count`` solutions out of ``total = n ** p`` tuples."""

    count: int
    total: int

    @property
    def value(self) -> Fraction:
        return Fraction(self.count, self.total)

    def __float__(self) -> float:
        return self.count / self.total

    def to_dict(self) -> dict:
        return {"count": str(self.count), "total": str(self.total), "value": str(self.value)}


@dataclass(frozen=True)
class DefinableSet:
    arity: int
    tuples: tuple

    @property
    def vertices(self) -> tuple[int, ...]:
        if self.arity != 1:
            raise ValueError("vertices are only defined for unary formulas")
        return tuple(t[0] for t in self.tuples)

    def __len__(self) -> int:
        return len(self.tuples)


def _split(g) -> tuple[Graph, int | None]:
    if isinstance(g, RootedGraph):
        return g.graph, g.root
    if isinstance(g, Graph):
        return g, None
    raise TypeError(f"expected Graph or RootedGraph, got {type(g).__name__}")


# ---------------------------------------------------------------------------
# reference semantics
# ---------------------------------------------------------------------------

def satisfies(g, phi: Formula, assignment: Mapping[str, int] | None = None) -> bool:
    """Truth of ``phi`` in ``g`` under ``assignment`` (vertex ids are 0-based)."""
    graph, root = _split(g)
    env = dict(assignment or {})
    missing = [v for v in free_vars(phi) if v not in env]
    if missing:
        raise EvaluationError(f"assignment misses free variables {missing}")
    for name, v in env.items():
        if not 0 <= v < graph.n:
            raise EvaluationError(f"vertex {v} assigned to {name!r} is out of range")
    nb = graph.neighbors

    def val(t) -> int:
        if isinstance(t, Root):
            if root is None:
                raise EvaluationError("formula uses the root constant but the graph is not rooted")
            return root
        return env[t.name]

    def go(node) -> bool:
        if isinstance(node, Edge):
            return val(node.right) in nb[val(node.left)]
        if isinstance(node, Eq):
            return val(node.left) == val(node.right)
        if isinstance(node, Label):
            if node.symbol not in graph.labels:
                raise EvaluationError(f"unknown label {node.symbol!r}")
            return val(node.term) in graph.labels[node.symbol]
        if isinstance(node, Not):
            return not go(node.body)
        if isinstance(node, And):
            return go(node.left) and go(node.right)
        if isinstance(node, Or):
            return go(node.left) or go(node.right)
        if isinstance(node, Implies):
            return (not go(node.left)) or go(node.right)
        if isinstance(node, Iff):
            return go(node.left) == go(node.right)
        quant = any if isinstance(node, Exists) else all
        outer = env.get(node.var)
        try:
            return quant(go_with(node.var, v, node.body) for v in range(graph.n))
        finally:
            if outer is None:
                env.pop(node.var, None)
            else:
                env[node.var] = outer

    def go_with(var: str, v: int, body) -> bool:
        env[var] = v
        return go(body)

    return go(phi)


def solution_count_bruteforce(g, phi: Formula) -> int:
    """Count satisfying tuples by calling ``satisfies`` on each of the ``n ** p`` tuples."""
    graph, _ = _split(g)
    fv = free_vars(phi)
    return sum(satisfies(g, phi, dict(zip(fv, tup)))
               for tup in itertools.product(range(graph.n), repeat=len(fv)))


# ---------------------------------------------------------------------------
# extension tables
# ---------------------------------------------------------------------------

class _Ctx:
    def __init__(self, g, cap: int):
        self.graph, self.root = _split(g)
        self.n = self.graph.n
        self.adj = self.graph.adjacency
        self.eye = np.eye(self.n, dtype=bool)
        self.cap = cap
        self._labels: dict[str, np.ndarray] = {}

    def label(self, symbol: str) -> np.ndarray:
        if symbol not in self._labels:
            if symbol not in self.graph.labels:
                raise EvaluationError(f"unknown label {symbol!r}")
            self._labels[symbol] = self.graph.label_mask(symbol)
        return self._labels[symbol]

    def root_id(self) -> int:
        if self.root is None:
            raise EvaluationError("formula uses the root constant but the graph is not rooted")
        return self.root

    def check(self, width: int) -> None:
        if self.n ** width > self.cap:
            raise EvaluationError(
                f"extension table over {width} variables on {self.n} vertices exceeds the cap of {self.cap} cells")


def _align(table: tuple, order: tuple, n: int) -> np.ndarray:
    """Permute ``table`` to follow ``order``, with size-1 axes for absent names."""
    names, arr = table
    arr = np.transpose(arr, [names.index(v) for v in order if v in names])
    return arr.reshape([n if v in names else 1 for v in order])


def _binary_atom(matrix: np.ndarray, left, right, ctx: _Ctx) -> tuple:
    if isinstance(left, Root) and isinstance(right, Root):
        r = ctx.root_id()
        return (), np.asarray(matrix[r, r])
    if isinstance(left, Root):
        return (right.name,), matrix[ctx.root_id(), :]
    if isinstance(right, Root):
        return (left.name,), matrix[:, ctx.root_id()]
    if left.name == right.name:
        return (left.name,), np.diagonal(matrix).copy()
    return (left.name, right.name), matrix


def _table(node, ctx: _Ctx) -> tuple:
    if isinstance(node, Edge):
        return _binary_atom(ctx.adj, node.left, node.right, ctx)
    if isinstance(node, Eq):
        return _binary_atom(ctx.eye, node.left, node.right, ctx)
    if isinstance(node, Label):
        mask = ctx.label(node.symbol)
        if isinstance(node.term, Root):
            return (), np.asarray(mask[ctx.root_id()])
        return (node.term.name,), mask
    if isinstance(node, Not):
        names, arr = _table(node.body, ctx)
        return names, ~arr
    if isinstance(node, (And, Or, Implies, Iff)):
        left = _table(node.left, ctx)
        right = _table(node.right, ctx)
        order = left[0] + tuple(v for v in right[0] if v not in left[0])
        ctx.check(len(order))
        a, b = _align(left, order, ctx.n), _align(right, order, ctx.n)
        if isinstance(node, And):
            out = a & b
        elif isinstance(node, Or):
            out = a | b
        elif isinstance(node, Implies):
            out = ~a | b
        else:
            out = a == b
        return order, out
    if isinstance(node, Exists):
        block = _exists_block(node, ctx)
        if block is not None:
            return block
    names, arr = _table(node.body, ctx)
    if node.var not in names:
        # vacuous quantifier: exists holds iff V is nonempty, forall always holds
        if isinstance(node, Exists):
            return names, arr & (ctx.n > 0)
        return names, arr | (ctx.n == 0)
    axis = names.index(node.var)
    reduce = np.any if isinstance(node, Exists) else np.all
    return names[:axis] + names[axis + 1:], reduce(arr, axis=axis)


def _conjuncts(node) -> list:
    if isinstance(node, And):
        return _conjuncts(node.left) + _conjuncts(node.right)
    return [node]


def _exists_block(node, ctx: _Ctx) -> tuple | None:
    """``exists v1 ... vk. c1 & ... & cm`` as a sum-product contraction.

    The conjunction is never materialized over all its variables: each
    conjunct keeps its own table and quantified variables are summed out in
    a greedy contraction order, so e.g. a 5-cycle through ``x`` needs only
    three-variable intermediates. Returns None when there is nothing to gain.
    """
    bound = []
    while isinstance(node, Exists):
        bound.append(node.var)
        node = node.body
    parts = _conjuncts(node)
    if len(parts) < 2:
        return None
    tables = [_table(c, ctx) for c in parts]
    scalars = [bool(arr) for names, arr in tables if not names]
    tables = [t for t in tables if t[0]]
    out = []
    for names, _ in tables:
        out += [v for v in names if v not in bound and v not in out]
    ctx.check(len(out))
    if not all(scalars) or ctx.n == 0 or not tables:
        # a false closed conjunct or an empty domain kills the block; otherwise all true
        const = all(scalars) and ctx.n > 0
        return tuple(out), np.full((ctx.n,) * len(out), const, dtype=bool)
    used = {v for names, _ in tables for v in names}
    letters = {v: chr(ord("a") + i) if i < 26 else chr(ord("A") + i - 26) for i, v in enumerate(sorted(used))}
    spec = ",".join("".join(letters[v] for v in names) for names, _ in tables)
    spec += "->" + "".join(letters[v] for v in out)
    arrays = [arr.astype(np.float64) for _, arr in tables]
    # non-negative terms, so the sum is positive iff some assignment satisfies every conjunct
    total = np.einsum(spec, *arrays, optimize=("greedy", ctx.cap))
    return tuple(out), np.asarray(total > 0)


def truth_table(g, phi: Formula, order: Sequence[str] | None = None,
                cap: int = DEFAULT_CAP) -> np.ndarray:
    """Boolean array ``T`` with ``T[v1, ..., vp]`` true iff ``g |= phi(v1, ..., vp)``.

    Axes follow ``order`` (default: ``free_vars(phi)``); names in ``order``
    that do not occur free in ``phi`` become vacuous axes.
    """
    ctx = _Ctx(g, cap)
    order = tuple(free_vars(phi) if order is None else order)
    missing = set(free_vars(phi)) - set(order)
    if missing:
        raise EvaluationError(f"order misses free variables {sorted(missing)}")
    ctx.check(len(order))
    table = _table(phi, ctx)
    arr = _align(table, order, ctx.n)
    return np.broadcast_to(arr, (ctx.n,) * len(order))


def solution_count(g, phi: Formula, cap: int = DEFAULT_CAP) -> int:
    """Number of tuples in ``V ** p`` satisfying ``phi`` (coordinates may repeat)."""
    return int(np.count_nonzero(truth_table(g, phi, cap=cap)))


def stone_pairing(g, phi: Formula, cap: int = DEFAULT_CAP) -> StoneValue:
    graph, _ = _split(g)
    p = len(free_vars(phi))
    if p and graph.n == 0:
        raise EvaluationError("Stone pairing of a formula with free variables needs a nonempty graph")
    return StoneValue(solution_count(g, phi, cap=cap), graph.n ** p)


def definable_set(g, xi: Formula, cap: int = DEFAULT_CAP) -> DefinableSet:
    arr = truth_table(g, xi, cap=cap)
    tuples = tuple(tuple(int(i) for i in t) for t in np.argwhere(arr))
    return DefinableSet(len(free_vars(xi)), tuples)


def rooted_counts(g: Graph, phi: Formula, roots: Sequence[int] | None = None,
                  cap: int = DEFAULT_CAP) -> tuple[list[int], int]:
    """Counts ``|phi((g, u))|`` for each ``u`` in ``roots`` from a single table of the derooted formula.

    Returns ``(counts, n ** p)``.
    """
    graph, _ = _split(g)
    dr = deroot(phi)
    arr = truth_table(graph, dr.formula, dr.params, cap=cap)
    per_root = arr.reshape(-1, graph.n).sum(axis=0) if dr.xs else arr.astype(np.int64)
    roots = range(graph.n) if roots is None else roots
    return [int(per_root[u]) for u in roots], graph.n ** len(dr.xs)


def rooted_values(g: Graph, phi: Formula, roots: Sequence[int] | None = None,
                  cap: int = DEFAULT_CAP) -> list[Fraction]:
    counts, total = rooted_counts(g, phi, roots, cap=cap)
    return [Fraction(c, total) for c in counts]


def pushforward(g, xi: Formula, phi: Formula, cap: int = DEFAULT_CAP) -> SubsetMeasure:
    """Law of ``{u in xi(G) : G |= phi^-(v, u)}`` for a uniformly random ``v`` in ``V ** p``.

    The ground set is ``xi(G)`` in increasing vertex order.
    """
    graph, _ = _split(g)
    dr = deroot(phi)
    if not dr.xs:
        raise EvaluationError("pushforward needs a formula with at least one free variable")
    ground = definable_set(graph, xi, cap=cap).vertices
    if not ground:
        raise EvaluationError("xi(G) is empty: no candidate roots")
    if len(ground) > 62:
        raise EvaluationError("xi(G) too large for a subset measure")
    arr = truth_table(graph, dr.formula, dr.params, cap=cap)
    flat = arr.reshape(-1, graph.n)[:, list(ground)]
    weights = np.left_shift(np.ones(len(ground), dtype=np.int64), np.arange(len(ground)))
    codes = flat.astype(np.int64) @ weights
    masks, counts = np.unique(codes, return_counts=True)
    total = graph.n ** len(dr.xs)
    return SubsetMeasure(tuple(ground), {int(m): Fraction(int(c), total) for m, c in zip(masks, counts)})


def is_algebraic_on_sequence(seq: GraphSequence | Sequence, xi: Formula,
                             bound: int | None = None) -> tuple[bool, list[int]]:
    """Whether ``|xi(G_n)|`` is constant along the sequence (and at most ``bound``)."""
    if len(free_vars(xi)) != 1 or uses_root(xi):
        raise EvaluationError("xi must be a root-free formula with one free variable")
    profile = [solution_count(_split(g)[0], xi) for g in seq]
    ok = len(set(profile)) <= 1 and (bound is None or all(c <= bound for c in profile))
    return ok, profile
