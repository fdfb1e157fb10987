"""End-to-end experiments: the oscillating random bipartite sequence, extension
scans, and the exact cross-check between formula evaluation and the lattice
computations."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .evaluate import DEFAULT_CAP, EvaluationError, pushforward, rooted_counts, stone_pairing
from .formula import Formula, build_psi, deroot, parse
from .graph import (
    Graph, GraphSequence, attach_gadgets, check_bipartite_extension, gen_bipartite_random,
    interlace, is_bipartite_marked,
)
from .lattice import forward_F, forward_table, level_multisets, matching_distance, reconstruct

__all__ = [
    "NEIGHBOR_OF_ROOT", "XI_A", "XI_B", "OscillationReport", "ExtensionReport", "LatticeOracleReport",
    "OracleMismatch", "bipartite_sequences", "run_counterexample", "run_extension_scan",
    "run_lattice_oracle", "unlabel_with_gadgets",
]

NEIGHBOR_OF_ROOT = "x ~ root"

_DEG3 = "exists a. exists b. exists c. (x ~ a & x ~ b & x ~ c & a != b & a != c & b != c)"
# Original bipartite edges create no odd cycles and gadgets meet the rest of
# the graph in a single vertex, so triangles and 5-cycles come from gadgets only.
XI_B = f"(exists a. exists b. (x ~ a & x ~ b & a ~ b)) & ({_DEG3})"
XI_A = ("(exists a. exists b. exists c. exists d. (x ~ a & a ~ b & b ~ c & c ~ d & d ~ x"
        " & x != b & x != c & a != c & a != d & b != d)) & (" + _DEG3 + ")")


def _seed_for(seed: int, n: int, parity: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(seed, spawn_key=(n, parity))


def bipartite_sequences(n_range: Iterable[int], p: float, q: float, seed: int):
    """``(G_n(p))``, ``(G_n(q))`` and their interlacing.

    Each graph draws from the seed stream ``(seed, n, rank)`` where ``rank``
    is 0 for the smaller edge probability, so swapping ``p`` and ``q``
    reproduces the same graphs with the parities exchanged.
    """
    ns = list(n_range)
    rank_p, rank_q = (0, 1) if p <= q else (1, 0)
    seq_p = GraphSequence([gen_bipartite_random(n, p, _seed_for(seed, n, rank_p)) for n in ns],
                          {"generator": "bipartite", "p": p, "seed": seed})
    seq_q = GraphSequence([gen_bipartite_random(n, q, _seed_for(seed, n, rank_q)) for n in ns],
                          {"generator": "bipartite", "p": q, "seed": seed})
    return seq_p, seq_q, interlace(seq_p, seq_q)


@dataclass
class OscillationReport:
    p: float
    q: float
    eps: float
    seed: int
    part: str
    tol: float
    rows: list  # one dict per (index, root)
    indices: list  # one dict per sequence index
    gaps: list  # min-over-roots proportion gap between consecutive indices
    stone_gaps: list  # same for whole-graph Stone pairings

    @property
    def degenerate(self) -> bool:
        return self.p == self.q

    @property
    def all_within_tol(self) -> bool:
        return all(ix["within_tol"] for ix in self.indices)

    @property
    def oscillating(self) -> bool:
        return not self.degenerate and bool(self.gaps) and min(self.gaps) >= self.eps

    @property
    def verdict(self) -> str:
        if self.degenerate:
            return "no oscillation (p == q)"
        return "oscillating" if self.oscillating else "no oscillation"

    def summary(self) -> dict:
        return {
            "p": self.p, "q": self.q, "eps": self.eps, "seed": self.seed, "part": self.part,
            "tol": self.tol, "verdict": self.verdict, "all_within_tol": self.all_within_tol,
            "min_gap": min(self.gaps) if self.gaps else None,
            "min_stone_gap": min(self.stone_gaps) if self.stone_gaps else None,
            "parity_means": {
                "odd": _mean(ix["mean"] for ix in self.indices if ix["index"] % 2),
                "even": _mean(ix["mean"] for ix in self.indices if not ix["index"] % 2),
            },
            "indices": self.indices,
            "gaps": self.gaps,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        cols = ["index", "n", "edge_prob", "root", "degree", "stone", "proportion", "deviation"]
        w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        for row in self.rows:
            w.writerow({c: row[c] for c in cols})
        return buf.getvalue()


def _mean(xs) -> float | None:
    xs = list(xs)
    return sum(xs) / len(xs) if xs else None


def _interval_gap(a: tuple, b: tuple) -> float:
    """Smallest ``|x - y|`` with ``x`` in ``[a0, a1]`` and ``y`` in ``[b0, b1]``."""
    return max(0.0, b[0] - a[1], a[0] - b[1])


def run_counterexample(n_range: Iterable[int], p: float, q: float, seed: int, part: str = "B",
                       tol: float = 0.15, eps: float | None = None,
                       cap: int = DEFAULT_CAP) -> OscillationReport:
    """Root the interlaced sequence at every vertex of ``part`` and measure ``x ~ root``.

    Each row records the whole-graph Stone pairing and the neighbor
    proportion ``deg(r) / |other part|``; the latter is compared with the
    edge probability of the graph's parity, and the min-over-roots gap
    between consecutive indices is compared with ``eps = (q - p) / 3``.
    """
    if not (0 < p < 1 and 0 < q < 1):
        raise ValueError("p and q must lie strictly between 0 and 1")
    if part not in ("A", "B"):
        raise ValueError("part must be 'A' or 'B'")
    ns = list(n_range)
    if not ns:
        raise ValueError("empty n range")
    eps = abs(q - p) / 3 if eps is None else eps
    _, _, seq = bipartite_sequences(ns, p, q, seed)
    phi = parse(NEIGHBOR_OF_ROOT)
    other = "A" if part == "B" else "B"
    rows, indices = [], []
    intervals, stone_intervals = [], []
    for pos, g in enumerate(seq):
        n = ns[pos // 2]
        prob = p if pos % 2 == 0 else q
        roots = sorted(g.labels[part])
        counts, total = rooted_counts(g, phi, roots, cap=cap)
        size_other = len(g.labels[other])
        props, stones = [], []
        for r, c in zip(roots, counts):
            stone = Fraction(c, total)
            prop = c / size_other
            props.append(prop)
            stones.append(float(stone))
            rows.append({"index": pos + 1, "n": n, "edge_prob": prob, "root": r + 1, "degree": c,
                         "stone": str(stone), "proportion": repr(prop), "deviation": repr(abs(prop - prob))})
        intervals.append((min(props), max(props)))
        stone_intervals.append((min(stones), max(stones)))
        indices.append({
            "index": pos + 1, "n": n, "edge_prob": prob, "part_sizes": [len(g.labels["A"]), len(g.labels["B"])],
            "min": min(props), "max": max(props), "mean": _mean(props),
            "stone_min": min(stones), "stone_max": max(stones),
            "max_deviation": max(abs(x - prob) for x in props),
            "within_tol": all(abs(x - prob) <= tol for x in props),
        })
    gaps = [_interval_gap(a, b) for a, b in zip(intervals, intervals[1:])]
    stone_gaps = [_interval_gap(a, b) for a, b in zip(stone_intervals, stone_intervals[1:])]
    return OscillationReport(p, q, eps, seed, part, tol, rows, indices, gaps, stone_gaps)


@dataclass
class ExtensionReport:
    k_max: int
    verdicts: list  # verdicts[i][k-1]
    witnesses: list  # witnesses[i][k-1] (None when the property holds)

    @property
    def monotone(self) -> bool:
        return all(all(not later or earlier for earlier, later in zip(v, v[1:])) for v in self.verdicts)

    def to_dict(self) -> dict:
        return {
            "k_max": self.k_max,
            "graphs": [
                {"index": i + 1, "verdicts": v, "witnesses": [_witness_1based(w) for w in ws]}
                for i, (v, ws) in enumerate(zip(self.verdicts, self.witnesses))
            ],
            "monotone": self.monotone,
        }


def _witness_1based(w):
    if w is None:
        return None
    return {"side": w["side"], **{k: [v + 1 for v in w[k]] for k in ("X", "Y", "Z")}}


def run_extension_scan(seq: GraphSequence | Sequence[Graph], k_max: int) -> ExtensionReport:
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    verdicts, witnesses = [], []
    for g in seq:
        if not is_bipartite_marked(g):
            raise ValueError("run_extension_scan needs bipartite-marked graphs")
        row_v, row_w = [], []
        for k in range(1, k_max + 1):
            ok, wit = check_bipartite_extension(g, k)
            row_v.append(ok)
            row_w.append(wit)
        verdicts.append(row_v)
        witnesses.append(row_w)
    return ExtensionReport(k_max, verdicts, witnesses)


class OracleMismatch(AssertionError):
    pass


@dataclass
class LatticeOracleReport:
    t: int
    cells: list  # dicts: k, l, eval, lattice, equal
    levels: list  # dicts: level, reconstructed, direct, error
    tol: float

    @property
    def mismatches(self) -> list:
        return [c for c in self.cells if not c["equal"]]

    @property
    def max_level_error(self) -> float:
        return max((lv["error"] for lv in self.levels), default=0.0)

    @property
    def ok(self) -> bool:
        return not self.mismatches and self.max_level_error <= self.tol

    def to_dict(self) -> dict:
        return {
            "t": self.t, "ok": self.ok, "tol": self.tol,
            "cells": [{**c, "eval": str(c["eval"]), "lattice": str(c["lattice"])} for c in self.cells],
            "levels": [{**lv, "direct": [str(x) for x in lv["direct"]],
                        "reconstructed": [repr(x) for x in lv["reconstructed"]]} for lv in self.levels],
        }


def run_lattice_oracle(g: Graph, xi: Formula, phi: Formula, k_max: int, l_max: int,
                       tol: float = 1e-6, strict: bool = True, cap: int = DEFAULT_CAP) -> LatticeOracleReport:
    """Compare ``<psi_{k,l}, G>`` with ``Pr[F_l^k]`` of the pushforward measure, exactly.

    Then reconstruct the level multisets from the full table and compare
    them with the filter masses computed directly from the measure.
    """
    mu = pushforward(g, xi, phi, cap=cap)
    t = mu.m
    if t > 5:
        raise EvaluationError(f"|xi(G)| = {t} is too large for the oracle (at most 5)")
    dr = deroot(phi)
    cells = []
    for k in range(1, k_max + 1):
        for l in range(1, min(l_max, t) + 1):
            lhs = stone_pairing(g, build_psi(dr, xi, k, l), cap=cap).value
            rhs = forward_F(mu, l, k)
            cells.append({"k": k, "l": l, "eval": lhs, "lattice": rhs, "equal": lhs == rhs})
    rec = reconstruct(forward_table(mu), t)
    direct = level_multisets(mu)
    levels = [{"level": l, "reconstructed": rec.A[l], "direct": direct[l],
               "error": matching_distance(rec.A[l], direct[l])} for l in range(t + 1)]
    report = LatticeOracleReport(t, cells, levels, tol)
    if strict and not report.ok:
        raise OracleMismatch(f"lattice oracle failed: {report.mismatches or report.levels}")
    return report


def unlabel_with_gadgets(seq: GraphSequence | Sequence[Graph]) -> tuple[GraphSequence, dict[str, str]]:
    """Replace the A/B marks by triangle and pentagon gadgets.

    Returns the plain sequence and formulas (as text) defining the original
    parts; a part vertex is recognized only if it has at least one neighbor
    across the bipartition.
    """
    graphs = [attach_gadgets(g) for g in seq]
    meta = dict(getattr(seq, "meta", {}) or {})
    meta["gadgets"] = "triangle on B, pentagon on A"
    return GraphSequence(graphs, meta) if graphs else graphs, {"A": XI_A, "B": XI_B}
