"""Finite simple graphs with unary labels, plus the random bipartite generators."""

from __future__ import annotations

import itertools
import json
import re
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, Iterable, Iterator, Mapping, Sequence

import numpy as np

__all__ = [
    "Graph", "RootedGraph", "GraphSequence", "GraphFormatError",
    "complete_graph", "path_graph", "cycle_graph", "star_graph", "complete_bipartite",
    "gen_bipartite_random", "interlace", "is_bipartite_marked",
    "check_bipartite_extension", "check_bipartite_extension_bruteforce",
    "attach_gadgets", "degree", "load", "save", "load_sequence", "save_sequence",
    "graph_to_dict", "graph_from_dict",
]


class GraphFormatError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Graph:
    """Simple graph on vertices ``0 .. n-1``.

    ``edges`` is normalized to pairs ``(u, v)`` with ``u < v``; ``labels`` maps
    unary symbols to vertex sets.
    """

    n: int
    edges: frozenset = frozenset()
    labels: Mapping[str, frozenset] = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 0:
            raise GraphFormatError("vertex count must be nonnegative")
        norm = set()
        for u, v in self.edges:
            u, v = int(u), int(v)
            if u == v:
                raise GraphFormatError(f"loop at vertex {u} (graphs are irreflexive)")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise GraphFormatError(f"edge ({u}, {v}) out of range for n={self.n}")
            norm.add((u, v) if u < v else (v, u))
        labels = {}
        for sym, verts in dict(self.labels).items():
            verts = frozenset(int(v) for v in verts)
            if any(not 0 <= v < self.n for v in verts):
                raise GraphFormatError(f"label {sym!r} has a vertex out of range")
            labels[sym] = verts
        object.__setattr__(self, "edges", frozenset(norm))
        object.__setattr__(self, "labels", labels)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self.n == other.n and self.edges == other.edges and self.labels == other.labels

    def __hash__(self) -> int:
        return hash((self.n, self.edges, tuple(sorted(self.labels.items()))))

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={len(self.edges)}, labels={sorted(self.labels)})"

    @cached_property
    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n, self.n), dtype=bool)
        if self.edges:
            idx = np.array(sorted(self.edges), dtype=np.intp)
            a[idx[:, 0], idx[:, 1]] = True
            a[idx[:, 1], idx[:, 0]] = True
        a.setflags(write=False)
        return a

    @cached_property
    def neighbors(self) -> tuple[frozenset, ...]:
        nb: list[set] = [set() for _ in range(self.n)]
        for u, v in self.edges:
            nb[u].add(v)
            nb[v].add(u)
        return tuple(frozenset(s) for s in nb)

    @cached_property
    def neighbor_masks(self) -> tuple[int, ...]:
        return tuple(sum(1 << v for v in nb) for nb in self.neighbors)

    def degree(self, v: int) -> int:
        return len(self.neighbors[v])

    def label_mask(self, symbol: str) -> np.ndarray:
        if symbol not in self.labels:
            raise KeyError(symbol)
        mask = np.zeros(self.n, dtype=bool)
        mask[list(self.labels[symbol])] = True
        return mask

    def permute(self, perm: Sequence[int]) -> "Graph":
        """Isomorphic copy with vertex ``v`` renamed to ``perm[v]``."""
        edges = {(perm[u], perm[v]) for u, v in self.edges}
        labels = {s: {perm[v] for v in vs} for s, vs in self.labels.items()}
        return Graph(self.n, frozenset(edges), labels)

    def unlabeled(self) -> "Graph":
        return Graph(self.n, self.edges)

    def rooted(self, root: int) -> "RootedGraph":
        return RootedGraph(self, root)


@dataclass(frozen=True)
class RootedGraph:
    graph: Graph
    root: int

    def __post_init__(self):
        if not 0 <= self.root < self.graph.n:
            raise GraphFormatError(f"root {self.root} out of range for n={self.graph.n}")

    @property
    def n(self) -> int:
        return self.graph.n


@dataclass(frozen=True)
class GraphSequence:
    """Finite prefix ``(G_1, G_2, ...)`` of a graph sequence.

    Python indexing is 0-based; reports label entries with ``index = position + 1``.
    """

    graphs: tuple
    meta: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "graphs", tuple(self.graphs))
        if not self.graphs:
            raise ValueError("graph sequence must be nonempty")

    def __len__(self) -> int:
        return len(self.graphs)

    def __iter__(self) -> Iterator:
        return iter(self.graphs)

    def __getitem__(self, i):
        return self.graphs[i]


# ---------------------------------------------------------------------------
# small named graphs
# ---------------------------------------------------------------------------

def complete_graph(n: int) -> Graph:
    return Graph(n, frozenset(itertools.combinations(range(n), 2)))


def path_graph(n: int) -> Graph:
    return Graph(n, frozenset((i, i + 1) for i in range(n - 1)))


def cycle_graph(n: int) -> Graph:
    return Graph(n, frozenset((i, (i + 1) % n) for i in range(n)))


def star_graph(m: int) -> Graph:
    """K_{1,m} with center 0."""
    return Graph(m + 1, frozenset((0, i) for i in range(1, m + 1)))


def complete_bipartite(a: int, b: int) -> Graph:
    """Marked K_{a,b}: part A is ``0..a-1``, part B is ``a..a+b-1``."""
    edges = frozenset((u, a + v) for u in range(a) for v in range(b))
    return Graph(a + b, edges, {"A": range(a), "B": range(a, a + b)})


def degree(g: Graph | RootedGraph, v: int) -> int:
    if isinstance(g, RootedGraph):
        g = g.graph
    return g.degree(v)


# ---------------------------------------------------------------------------
# random bipartite model
# ---------------------------------------------------------------------------

def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def gen_bipartite_random(n: int, p: float, seed) -> Graph:
    """Marked bipartite graph with parts A (size n**2) and B (size n).

    A occupies vertices ``0 .. n**2-1`` and B the next ``n``. Every cross pair
    is an edge independently with probability ``p``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if not 0 < p < 1:
        raise ValueError("p must lie strictly between 0 and 1")
    a = n * n
    hits = _rng(seed).random((a, n)) < p
    us, vs = np.nonzero(hits)
    edges = frozenset(zip(us.tolist(), (vs + a).tolist()))
    return Graph(a + n, edges, {"A": range(a), "B": range(a, a + n)})


def interlace(first: GraphSequence | Sequence, second: GraphSequence | Sequence) -> GraphSequence:
    """Alternate two sequences: ``first[0], second[0], first[1], second[1], ...``.

    When lengths differ the leftover tail of the longer sequence is appended.
    """
    first, second = list(first), list(second)
    if not first or not second:
        raise ValueError("both sequences must be nonempty")
    out = []
    for a, b in itertools.zip_longest(first, second):
        if a is not None:
            out.append(a)
        if b is not None:
            out.append(b)
    return GraphSequence(out, {"generator": "interlace"})


def is_bipartite_marked(g: Graph) -> bool:
    if "A" not in g.labels or "B" not in g.labels:
        return False
    a, b = g.labels["A"], g.labels["B"]
    if a & b or (a | b) != set(range(g.n)):
        return False
    return all((u in a) != (v in a) for u, v in g.edges)


def _parts(g: Graph) -> tuple[list[int], list[int]]:
    if not is_bipartite_marked(g):
        raise ValueError("graph is not bipartite-marked (labels A and B must partition V with all edges crossing)")
    return sorted(g.labels["A"]), sorted(g.labels["B"])


def _extension_side(g: Graph, src: list[int], dst: list[int], k: int, side: str):
    masks = g.neighbor_masks
    full = sum(1 << v for v in dst)
    for size in range(k):
        for xy in itertools.combinations(src, size):
            for nx in range(size + 1):
                for xs in itertools.combinations(xy, nx):
                    ys = tuple(v for v in xy if v not in xs)
                    cand = full
                    for x in xs:
                        cand &= masks[x]
                    for y in ys:
                        cand &= ~masks[y]
                    # Z can only delete candidates, so the demand fails iff
                    # all candidates fit inside the remaining Z budget.
                    budget = k - 1 - size
                    if bin(cand).count("1") <= budget:
                        z = sorted(v for v in dst if cand >> v & 1)
                        return {"side": side, "X": list(xs), "Y": list(ys), "Z": z}
    return None


def check_bipartite_extension(g: Graph, k: int) -> tuple[bool, dict | None]:
    """Bipartite k-extension property; returns ``(ok, witness)``.

    The witness names the failing demand: disjoint ``X, Y`` in one part and
    ``Z`` in the other part such that no vertex of the other part outside ``Z``
    is adjacent to all of ``X`` and to none of ``Y``. ``side`` is the part
    holding ``X`` and ``Y``.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    a, b = _parts(g)
    for src, dst, side in ((a, b, "A"), (b, a, "B")):
        # X, Y of size < k over src, groups ordered by size then vertex ids
        witness = _extension_side(g, src, dst, k, side)
        if witness is not None:
            return False, witness
    return True, None


def check_bipartite_extension_bruteforce(g: Graph, k: int) -> bool:
    """Direct enumeration over all ``(X, Y, Z)``; exponential, for small graphs only."""
    a, b = _parts(g)
    nb = g.neighbors
    for src, dst in ((a, b), (b, a)):
        for sx in range(k):
            for xs in itertools.combinations(src, sx):
                rest = [v for v in src if v not in xs]
                for sy in range(k - sx):
                    for ys in itertools.combinations(rest, sy):
                        for sz in range(k - sx - sy):
                            for zs in itertools.combinations(dst, sz):
                                if not any(v not in zs and all(x in nb[v] for x in xs)
                                           and not any(y in nb[v] for y in ys) for v in dst):
                                    return False
    return True


def attach_gadgets(g: Graph) -> Graph:
    """Drop the A/B marks, attaching a triangle at each B vertex and a pentagon at each A vertex.

    New vertices are numbered after the originals, in increasing order of the
    host vertex (B-gadgets and A-gadgets interleaved by host id).
    """
    a, b = _parts(g)
    in_b = set(b)
    edges = set(g.edges)
    nxt = g.n
    for v in range(g.n):
        if v in in_b:
            t1, t2 = nxt, nxt + 1
            edges |= {(v, t1), (v, t2), (t1, t2)}
            nxt += 2
        else:
            c = list(range(nxt, nxt + 4))
            edges |= {(v, c[0]), (c[0], c[1]), (c[1], c[2]), (c[2], c[3]), (v, c[3])}
            nxt += 4
    return Graph(nxt, frozenset(edges))


# ---------------------------------------------------------------------------
# file I/O
# ---------------------------------------------------------------------------

def graph_to_dict(g: Graph | RootedGraph) -> dict:
    root = None
    if isinstance(g, RootedGraph):
        g, root = g.graph, g.root
    out: dict[str, Any] = {"n": g.n, "edges": [[u + 1, v + 1] for u, v in sorted(g.edges)]}
    if g.labels:
        out["labels"] = {s: sorted(v + 1 for v in vs) for s, vs in sorted(g.labels.items())}
    if root is not None:
        out["root"] = root + 1
    return out


def graph_from_dict(obj: Any) -> Graph | RootedGraph:
    if not isinstance(obj, dict) or "n" not in obj:
        raise GraphFormatError("graph object must be a JSON object with an 'n' field")
    n = obj["n"]
    if not isinstance(n, int) or isinstance(n, bool) or n < 0:
        raise GraphFormatError("'n' must be a nonnegative integer")
    edges = []
    for e in obj.get("edges", []):
        if not (isinstance(e, list) and len(e) == 2 and all(isinstance(x, int) for x in e)):
            raise GraphFormatError(f"malformed edge {e!r}")
        edges.append((e[0] - 1, e[1] - 1))
    labels = obj.get("labels", {})
    if not isinstance(labels, dict):
        raise GraphFormatError("'labels' must be an object")
    try:
        labels = {s: [v - 1 for v in vs] for s, vs in labels.items()}
    except TypeError as exc:
        raise GraphFormatError("label vertex lists must contain integers") from exc
    g = Graph(n, frozenset(edges), labels)
    if obj.get("root") is not None:
        r = obj["root"]
        if not isinstance(r, int):
            raise GraphFormatError("'root' must be an integer")
        return RootedGraph(g, r - 1)
    return g


def save(g: Graph | RootedGraph, path) -> None:
    Path(path).write_text(json.dumps(graph_to_dict(g)) + "\n")


def _read_json(path) -> Any:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise GraphFormatError(f"{path}: invalid JSON ({exc})") from exc


def load(path) -> Graph | RootedGraph:
    return graph_from_dict(_read_json(path))


def save_sequence(seq: GraphSequence | Iterable, path) -> None:
    Path(path).write_text(json.dumps([graph_to_dict(g) for g in seq]) + "\n")


def load_sequence(path) -> GraphSequence:
    """Load a JSON array of graphs, or a directory of numbered ``*.json`` files."""
    path = Path(path)
    if path.is_dir():
        files = sorted(path.glob("*.json"),
                       key=lambda f: int(m.group()) if (m := re.search(r"\d+", f.stem)) else -1)
        graphs = [load(f) for f in files]
    else:
        obj = _read_json(path)
        if isinstance(obj, dict) and "graphs" in obj:
            obj = obj["graphs"]
        if isinstance(obj, dict):
            obj = [obj]
        if not isinstance(obj, list):
            raise GraphFormatError("sequence file must hold a JSON array of graphs")
        graphs = [graph_from_dict(o) for o in obj]
    if not graphs:
        raise GraphFormatError(f"{path}: empty graph sequence")
    return GraphSequence(graphs, {"source": str(path)})
