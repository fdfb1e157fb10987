"""Choosing roots inside a finite definable set along a graph sequence.

The infinite objects of the theory are replaced by finite data: the last
graph of the sequence stands in for the limit, and convergence verdicts are
read off the tail of the sequence.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

from .evaluate import (
    DEFAULT_CAP, EvaluationError, definable_set, is_algebraic_on_sequence, rooted_values,
    satisfies,
)
from .formula import (
    Forall, Formula, Implies, Not, build_power_conj, deroot, free_vars, instantiate,
    NameSupply,
)
from .graph import Graph, GraphSequence, RootedGraph

__all__ = [
    "RootOrdering", "ConvergenceReport", "MultiRootReport", "PrefixReport",
    "order_roots", "root_single", "choose_I", "find_exponents", "root_multi",
    "extend_prefix", "verdict", "sentence_pair",
]

DEFAULT_WINDOW = 3
DEFAULT_THETA = 0.05
DEFAULT_TAIL = 0.3


def _plain(g) -> Graph:
    return g.graph if isinstance(g, RootedGraph) else g


@dataclass(frozen=True)
class RootOrdering:
    """Candidate roots sorted by rooted Stone pairing, descending; ties by ``tie_break`` key."""

    entries: tuple  # ((vertex, Fraction), ...)
    tie_break: str = "vertex id ascending"

    @property
    def vertices(self) -> tuple[int, ...]:
        return tuple(v for v, _ in self.entries)

    @property
    def values(self) -> tuple[Fraction, ...]:
        return tuple(x for _, x in self.entries)

    def __len__(self) -> int:
        return len(self.entries)


def order_roots(g, xi: Formula, phi: Formula, tie_break: Callable[[int], object] | None = None,
                cap: int = DEFAULT_CAP) -> RootOrdering:
    graph = _plain(g)
    ground = definable_set(graph, xi, cap=cap).vertices
    if not ground:
        raise EvaluationError("xi(G) is empty: no candidate roots")
    values = rooted_values(graph, phi, ground, cap=cap)
    key = tie_break or (lambda v: v)
    entries = sorted(zip(ground, values), key=lambda e: (-e[1], key(e[0])))
    return RootOrdering(tuple(entries), "vertex id ascending" if tie_break is None else "custom")


def _linf(a: Sequence, b: Sequence) -> float:
    return max((abs(float(x) - float(y)) for x, y in zip(a, b)), default=0.0)


def verdict(deltas: Sequence[float], window: int = DEFAULT_WINDOW, theta: float = DEFAULT_THETA,
            tail: float = DEFAULT_TAIL) -> str:
    """Finite-sample convergence verdict.

    ``converging`` when the last ``window`` deltas (or all of them, if fewer)
    are below ``theta``; ``oscillating`` when at least half of the tail window
    (the last ``max(window, ceil(tail * len))`` deltas) exceed ``3 * theta``;
    ``inconclusive`` otherwise, and always for sequences of length one.
    """
    if not deltas:
        return "inconclusive"
    if all(d < theta for d in deltas[-window:]):
        return "converging"
    tail_len = min(len(deltas), max(window, math.ceil(tail * len(deltas))))
    big = sum(d > 3 * theta for d in deltas[-tail_len:])
    if 2 * big >= tail_len:
        return "oscillating"
    return "inconclusive"


@dataclass
class ConvergenceReport:
    """Value vectors along the sequence and their successive l-infinity deltas."""

    roots: list
    vectors: list  # per index: tuple of Fractions (sorted values, or a 1-tuple for one formula)
    deltas: list
    verdict: str
    window: int
    theta: float
    tail: float
    label: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def chosen_values(self) -> list:
        return [v[0] if len(v) == 1 else v for v in self.vectors]

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "verdict": self.verdict,
            "window": self.window,
            "theta": self.theta,
            "tail": self.tail,
            "rows": [
                {"index": i + 1, "root": None if r is None else r + 1,
                 "values": [str(x) for x in vec], "delta": None if i == 0 else self.deltas[i - 1]}
                for i, (r, vec) in enumerate(zip(self.roots, self.vectors))
            ],
            **{k: v for k, v in self.extra.items()},
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        width = max(len(v) for v in self.vectors)
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "root", "delta"] + [f"v{j + 1}" for j in range(width)])
        for i, (r, vec) in enumerate(zip(self.roots, self.vectors)):
            w.writerow([i + 1, "" if r is None else r + 1, "" if i == 0 else repr(self.deltas[i - 1])]
                       + [str(x) for x in vec])
        return buf.getvalue()


def _report(roots, vectors, window, theta, tail, label="", tracked: Sequence[int] | None = None,
            extra=None) -> ConvergenceReport:
    deltas = []
    for i in range(1, len(vectors)):
        a, b = vectors[i - 1], vectors[i]
        if len(a) == len(b):
            deltas.append(_linf(a, b))
        else:
            # vectors of different length: compare the tracked position only
            deltas.append(abs(float(a[tracked[i - 1]]) - float(b[tracked[i]])))
    return ConvergenceReport(list(roots), list(vectors), deltas, verdict(deltas, window, theta, tail),
                             window, theta, tail, label, extra or {})


def sentence_pair(xi: Formula, phi: Formula) -> tuple[Formula, Formula]:
    """``forall y (xi(y) -> phi^-(y))`` and ``forall y (xi(y) -> !phi^-(y))`` for a rooted sentence ``phi``."""
    dr = deroot(phi)
    xi_free = free_vars(xi)
    supply = NameSupply()
    y = supply.fresh("y")
    guard = instantiate(xi, xi_free, [y], supply)
    body = instantiate(dr.formula, dr.params, [y], supply)
    return Forall(y, Implies(guard, body)), Forall(y, Implies(guard, Not(body)))


def root_single(seq: GraphSequence | Sequence, xi: Formula, phi: Formula, index: int = 1,
                window: int = DEFAULT_WINDOW, theta: float = DEFAULT_THETA, tail: float = DEFAULT_TAIL,
                require_constant: bool = True, cap: int = DEFAULT_CAP) -> ConvergenceReport:
    """Root each graph at the ``index``-th vertex (1-based) of its root ordering.

    With ``require_constant`` the cardinality of ``xi(G_n)`` must not vary
    along the sequence; switching it off allows non-algebraic experiments,
    where ``index`` must not exceed the smallest ``|xi(G_n)|``.
    """
    graphs = [_plain(g) for g in seq]
    ok, profile = is_algebraic_on_sequence(graphs, xi)
    if require_constant and not ok:
        raise EvaluationError(f"|xi(G_n)| is not constant along the sequence: {profile}")
    if not 1 <= index <= min(profile):
        raise EvaluationError(f"index {index} outside 1..{min(profile)}")
    if not free_vars(phi):
        return _root_sentence(graphs, xi, phi, index, window, theta, tail)
    roots, vectors = [], []
    for g in graphs:
        order = order_roots(g, xi, phi, cap=cap)
        roots.append(order.vertices[index - 1])
        vectors.append(order.values)
    return _report(roots, vectors, window, theta, tail, label=str(phi),
                   tracked=[index - 1] * len(graphs), extra={"index": index, "profile": profile})


def _root_sentence(graphs, xi, phi, index, window, theta, tail) -> ConvergenceReport:
    pos, neg = sentence_pair(xi, phi)
    status = []
    for g in graphs:
        holds_pos, holds_neg = satisfies(g, pos), satisfies(g, neg)
        status.append("all" if holds_pos else "none" if holds_neg else "mixed")
    roots = [definable_set(g, xi).vertices[index - 1] for g in graphs]
    values = [(Fraction(int(satisfies(RootedGraph(g, r), phi))),) for g, r in zip(graphs, roots)]
    tail_len = max(1, math.ceil(tail * len(graphs)))
    stable = status[-tail_len:]
    stabilized = stable[0] if len(set(stable)) == 1 and stable[0] != "mixed" else None
    return _report(roots, values, window, theta, tail, label=str(phi), tracked=[0] * len(graphs),
                   extra={"index": index, "sentence_status": status, "stabilized": stabilized})


def choose_I(seq: GraphSequence | Sequence, xi: Formula, phis: Sequence[Formula],
             tau0: float = 1e-9, cap: int = DEFAULT_CAP) -> tuple[tuple[int, ...], int]:
    """Inclusion-maximal set of formula indices jointly positive at some candidate root of the last graph.

    Returns ``(I, v)`` with 0-based indices. Among inclusion-maximal sets the
    largest wins, then the smallest witness vertex id.
    """
    if any(not free_vars(phi) for phi in phis):
        raise ValueError("choose_I expects formulas with free variables; handle sentences separately")
    g = _plain(seq[-1])
    ground = definable_set(g, xi, cap=cap).vertices
    if not ground:
        raise EvaluationError("xi(G) is empty: no candidate roots")
    table = [rooted_values(g, phi, ground, cap=cap) for phi in phis]
    sets = {v: frozenset(i for i in range(len(phis)) if table[i][j] > tau0) for j, v in enumerate(ground)}
    maximal = [v for v in ground if not any(sets[v] < sets[u] for u in ground)]
    best = min(maximal, key=lambda v: (-len(sets[v]), v))
    return tuple(sorted(sets[best])), best


def find_exponents(A_sets: Sequence[Sequence], tau: float = 1e-9, budget: int = 100_000) -> list[int]:
    """Smallest positive integer exponents separating all products ``prod a_i ** e_i``.

    Candidates are visited by increasing max-norm, then lexicographically;
    the first vector for which every two distinct choices ``(a_i)`` give
    products differing by more than ``tau`` is returned.
    """
    sets = [sorted(set(A), reverse=True) for A in A_sets]
    if not sets or any(not A for A in sets):
        raise ValueError("every value set must be nonempty")
    if any(not 0 < a <= 1 for A in sets for a in A):
        raise ValueError("values must lie in (0, 1]")
    choices = list(itertools.product(*sets))
    tried = 0
    norm = 0
    while True:
        norm += 1
        for e in itertools.product(range(1, norm + 1), repeat=len(sets)):
            if max(e) != norm:
                continue
            tried += 1
            if tried > budget:
                raise ValueError(f"no separating exponent vector within a budget of {budget} candidates")
            prods = sorted(math.prod(a ** k for a, k in zip(c, e)) for c in choices)
            if all(b - a > tau for a, b in zip(prods, prods[1:])):
                return list(e)


@dataclass
class MultiRootReport:
    I: tuple
    witness: int | None
    exponents: list
    A_sets: list
    sentences: list  # indices of sentence formulas (any rooting works)
    psi: Formula | None
    roots: list
    per_formula: list  # ConvergenceReport per input formula
    tail_values: list  # per formula: values at the chosen roots over the tail
    tau0: float

    def to_dict(self) -> dict:
        return {
            "I": [i + 1 for i in self.I],
            "witness": None if self.witness is None else self.witness + 1,
            "exponents": self.exponents,
            "A_sets": [[str(a) for a in A] for A in self.A_sets],
            "sentences": [i + 1 for i in self.sentences],
            "psi": None if self.psi is None else str(self.psi),
            "roots": [r + 1 for r in self.roots],
            "formulas": [r.to_dict() for r in self.per_formula],
            "tail_max": [str(max(v)) for v in self.tail_values],
            "tail_min": [str(min(v)) for v in self.tail_values],
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "root"] + [f"phi{j + 1}" for j in range(len(self.per_formula))])
        for i, r in enumerate(self.roots):
            w.writerow([i + 1, r + 1] + [str(rep.vectors[i][0]) for rep in self.per_formula])
        return buf.getvalue()


def _tail_len(n: int, tail: float) -> int:
    return min(n, max(1, math.ceil(tail * n)))


def root_multi(seq: GraphSequence | Sequence, xi: Formula, phis: Sequence[Formula],
               tau0: float = 1e-9, tau: float = 1e-9, window: int = DEFAULT_WINDOW,
               theta: float = DEFAULT_THETA, tail: float = DEFAULT_TAIL, budget: int = 100_000,
               cap: int = DEFAULT_CAP) -> MultiRootReport:
    """Roots along which every formula in ``phis`` is tracked simultaneously.

    Sentences are set aside (every rooting treats them alike). For the rest,
    ``I`` and the value sets ``A_i`` come from the last graph; a separating
    exponent vector ``e`` turns the formulas of ``I`` into a single
    conjunction ``psi`` of disjoint copies, and each graph is rooted at the
    top of its ``psi`` ordering.
    """
    graphs = [_plain(g) for g in seq]
    if not phis:
        raise ValueError("need at least one formula")
    ok, profile = is_algebraic_on_sequence(graphs, xi)
    if not ok:
        raise EvaluationError(f"|xi(G_n)| is not constant along the sequence: {profile}")
    if profile[0] == 0:
        raise EvaluationError("xi(G) is empty: no candidate roots")
    sentences = [i for i, phi in enumerate(phis) if not free_vars(phi)]
    open_idx = [i for i in range(len(phis)) if i not in sentences]
    I: tuple = ()
    witness = None
    if open_idx:
        sub_I, witness = choose_I(graphs, xi, [phis[i] for i in open_idx], tau0, cap=cap)
        I = tuple(open_idx[i] for i in sub_I)
    psi = None
    exponents: list = []
    A_sets: list = []
    if I:
        last = graphs[-1]
        ground = definable_set(last, xi, cap=cap).vertices
        A_sets = [sorted({x for x in rooted_values(last, phis[i], ground, cap=cap) if x > 0}, reverse=True)
                  for i in I]
        exponents = find_exponents(A_sets, tau, budget)
        psi = build_power_conj([phis[i] for i in I], exponents)
        roots = [order_roots(g, xi, psi, cap=cap).vertices[0] for g in graphs]
    else:
        roots = [definable_set(g, xi, cap=cap).vertices[0] for g in graphs]
    per_formula = []
    tail_values = []
    tl = _tail_len(len(graphs), tail)
    for phi in phis:
        vals = [(rooted_values(g, phi, [r], cap=cap)[0],) for g, r in zip(graphs, roots)]
        per_formula.append(_report(roots, vals, window, theta, tail, label=str(phi),
                                   tracked=[0] * len(graphs)))
        tail_values.append([v[0] for v in vals[-tl:]])
    return MultiRootReport(I, witness, exponents, A_sets, sentences, psi, roots, per_formula,
                           tail_values, tau0)


@dataclass
class PrefixReport:
    prefixes: list  # MultiRootReport per prefix length 1..t
    limits: list  # limits[j][a]: last-graph value of formula a under prefix j+1
    conflicts: list  # (formula, prefix, later_prefix, value, later_value), 1-based
    tol: float

    @property
    def consistent(self) -> bool:
        return not self.conflicts

    def to_dict(self) -> dict:
        return {
            "consistent": self.consistent,
            "tol": self.tol,
            "roots": [[r + 1 for r in rep.roots] for rep in self.prefixes],
            "limits": [[str(x) for x in row] for row in self.limits],
            "conflicts": [
                {"formula": a, "prefix": j, "later_prefix": j2, "value": str(x), "later_value": str(y)}
                for a, j, j2, x, y in self.conflicts
            ],
        }


def extend_prefix(seq: GraphSequence | Sequence, xi: Formula, phis: Sequence[Formula], t: int | None = None,
                  tol: float = 1e-9, **kwargs) -> PrefixReport:
    """Run ``root_multi`` on each prefix ``phis[:j]``, ``j <= t``, and check that limit estimates agree.

    A formula's limit estimate is its value on the last graph at the chosen
    root. Disagreements between prefixes are reported, not resolved.
    """
    t = len(phis) if t is None else t
    if not 1 <= t <= len(phis):
        raise ValueError(f"prefix length {t} outside 1..{len(phis)}")
    reports = [root_multi(seq, xi, phis[:j], **kwargs) for j in range(1, t + 1)]
    limits = [[rep.per_formula[a].vectors[-1][0] for a in range(j + 1)] for j, rep in enumerate(reports)]
    conflicts = []
    for j in range(t):
        for j2 in range(j + 1, t):
            for a in range(j + 1):
                x, y = limits[j][a], limits[j2][a]
                if abs(float(x) - float(y)) > tol:
                    conflicts.append((a + 1, j + 1, j2 + 1, x, y))
    return PrefixReport(reports, limits, conflicts, tol)
