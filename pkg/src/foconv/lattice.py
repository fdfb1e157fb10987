"""Probability measures on the subset lattice of a small ground set.

Forward direction: probabilities that ``k`` independent random subsets share
at least ``l`` elements. Backward direction: recover, for every level ``l``,
the multiset of filter masses ``mu(X up)`` over ``l``-element sets ``X``
from those probabilities, via inclusion-exclusion and power sums.

Subsets are bitmasks over positions in ``SubsetMeasure.ground``.
"""

from __future__ import annotations

import itertools
import json
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import comb
from numbers import Rational
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "MAX_GROUND", "SubsetMeasure", "FTable", "LevelMultisets", "RootRecoveryError",
    "filter_table", "filter_measure", "level_multisets",
    "forward_F", "forward_F_bruteforce", "forward_table", "event_E_bruteforce",
    "cover_count", "cover_count_bruteforce", "d_coefficient",
    "elementary_from_power_sums", "extend_power_sums", "newton_power_sums_to_roots",
    "reconstruct", "perturbation_report", "random_measure", "matching_distance",
    "parse_number",
]

MAX_GROUND = 20
ROOT_TOL = 1e-6


class RootRecoveryError(ValueError):
    def __init__(self, message: str, level: int | None = None):
        super().__init__(message if level is None else f"level {level}: {message}")
        self.level = level


def parse_number(s) -> Fraction | float:
    """``"num/den"`` or integer strings become Fractions, decimals become floats."""
    if isinstance(s, (int, Fraction)):
        return Fraction(s)
    if isinstance(s, float):
        return s
    s = str(s).strip()
    try:
        return Fraction(s) if "." not in s and "e" not in s.lower() else float(s)
    except ValueError:
        raise ValueError(f"not a number: {s!r}") from None


def _fmt(x) -> str:
    return str(x) if isinstance(x, (int, Fraction)) else repr(float(x))


@dataclass(frozen=True)
class SubsetMeasure:
    """Probability distribution on subsets of ``ground``; weights keyed by bitmask."""

    ground: tuple
    weights: Mapping[int, Fraction]

    def __post_init__(self):
        object.__setattr__(self, "ground", tuple(self.ground))
        m = len(self.ground)
        if m > MAX_GROUND:
            raise ValueError(f"ground set of size {m} exceeds the cap of {MAX_GROUND}")
        if len(set(self.ground)) != m:
            raise ValueError("ground set has repeated elements")
        w = {}
        for mask, weight in dict(self.weights).items():
            if not 0 <= mask < 1 << m:
                raise ValueError(f"subset mask {mask} outside the ground set")
            if weight < 0:
                raise ValueError("weights must be nonnegative")
            if weight:
                w[int(mask)] = weight
        if sum(w.values()) != 1:
            raise ValueError(f"weights sum to {sum(w.values())}, not 1")
        object.__setattr__(self, "weights", w)

    @property
    def m(self) -> int:
        return len(self.ground)

    @classmethod
    def from_sets(cls, ground: Sequence, weights: Mapping[Iterable, Fraction]) -> "SubsetMeasure":
        meas = cls.__new__(cls)
        object.__setattr__(meas, "ground", tuple(ground))
        return cls(ground, {meas.mask(s): w for s, w in weights.items()})

    def mask(self, subset: Iterable) -> int:
        pos = {g: i for i, g in enumerate(self.ground)}
        mask = 0
        for x in subset:
            if x not in pos:
                raise ValueError(f"{x!r} is not in the ground set")
            mask |= 1 << pos[x]
        return mask

    def subset(self, mask: int) -> tuple:
        return tuple(g for i, g in enumerate(self.ground) if mask >> i & 1)

    def to_dict(self) -> dict:
        return {
            "ground": list(self.ground),
            "weights": [{"set": list(self.subset(k)), "weight": _fmt(v)}
                        for k, v in sorted(self.weights.items())],
        }

    @classmethod
    def from_dict(cls, obj) -> "SubsetMeasure":
        try:
            ground = obj["ground"]
            weights = {tuple(e["set"]): parse_number(e["weight"]) for e in obj["weights"]}
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed measure: {exc}") from exc
        return cls.from_sets(ground, weights)


def random_measure(m: int, rng: random.Random, max_den: int = 12, support: float = 1.0) -> SubsetMeasure:
    """Random exact-rational measure; each subset is in the support with probability ``support``."""
    raw = [rng.randint(1, max_den) if rng.random() < support else 0 for _ in range(1 << m)]
    if not any(raw):
        raw[rng.randrange(1 << m)] = 1
    total = sum(raw)
    return SubsetMeasure(tuple(range(1, m + 1)), {i: Fraction(w, total) for i, w in enumerate(raw) if w})


# ---------------------------------------------------------------------------
# forward direction
# ---------------------------------------------------------------------------

def filter_table(mu: SubsetMeasure) -> list[Fraction]:
    """``f[X] = mu(X up)`` for every mask ``X`` (superset zeta transform)."""
    m = mu.m
    f = [Fraction(0)] * (1 << m)
    for mask, w in mu.weights.items():
        f[mask] += w
    for i in range(m):
        bit = 1 << i
        for mask in range(1 << m):
            if not mask & bit:
                f[mask] += f[mask | bit]
    return f


def filter_measure(mu: SubsetMeasure, subset: Iterable) -> Fraction:
    x = mu.mask(subset)
    return sum((w for mask, w in mu.weights.items() if mask & x == x), Fraction(0))


def level_multisets(mu: SubsetMeasure) -> list[list[Fraction]]:
    """``A_l`` computed directly from the filter table, each sorted descending."""
    f = filter_table(mu)
    levels: list[list[Fraction]] = [[] for _ in range(mu.m + 1)]
    for mask, val in enumerate(f):
        levels[bin(mask).count("1")].append(val)
    return [sorted(lv, reverse=True) for lv in levels]


def _intersection_law(f: Sequence[Fraction], m: int, k: int) -> list[Fraction]:
    """``Pr[S_1 & ... & S_k == Z]`` by Moebius inversion of ``f(W) ** k`` over supersets."""
    g = [x ** k for x in f]
    for i in range(m):
        bit = 1 << i
        for mask in range(1 << m):
            if not mask & bit:
                g[mask] -= g[mask | bit]
    return g


def _check_lk(m: int, l: int, k: int) -> None:
    if not 0 <= l <= m:
        raise ValueError(f"l={l} outside [0, {m}]")
    if k < 1:
        raise ValueError("k must be at least 1")


def forward_F(mu: SubsetMeasure, l: int, k: int) -> Fraction:
    """``Pr[|S_1 & ... & S_k| >= l]`` for independent ``S_i ~ mu``."""
    _check_lk(mu.m, l, k)
    law = _intersection_law(filter_table(mu), mu.m, k)
    return sum((p for z, p in enumerate(law) if bin(z).count("1") >= l), Fraction(0))


def forward_F_bruteforce(mu: SubsetMeasure, l: int, k: int) -> Fraction:
    """Same probability by summing over all ``k``-tuples of support sets."""
    _check_lk(mu.m, l, k)
    full = (1 << mu.m) - 1
    total = Fraction(0)
    for draw in itertools.product(mu.weights.items(), repeat=k):
        inter, prob = full, Fraction(1)
        for mask, w in draw:
            inter &= mask
            prob *= w
        if bin(inter).count("1") >= l:
            total += prob
    return total


def event_E_bruteforce(mu: SubsetMeasure, subset: Iterable, k: int) -> Fraction:
    """``Pr[X <= S_1 & ... & S_k]`` by enumeration of ``k``-tuples."""
    x = mu.mask(subset)
    total = Fraction(0)
    for draw in itertools.product(mu.weights.items(), repeat=k):
        if all(mask & x == x for mask, _ in draw):
            prob = Fraction(1)
            for _, w in draw:
                prob *= w
            total += prob
    return total


@dataclass
class FTable:
    """``P[l][k-1] = Pr[F_l^k]`` for ``l in 0..m`` and ``k in 1..C(m, l)``."""

    m: int
    P: list

    def __post_init__(self):
        if len(self.P) != self.m + 1:
            raise ValueError(f"expected {self.m + 1} levels, got {len(self.P)}")
        for l, row in enumerate(self.P):
            if len(row) != comb(self.m, l):
                raise ValueError(f"level {l} needs {comb(self.m, l)} entries, got {len(row)}")

    def to_dict(self) -> dict:
        return {"m": self.m, "P": [[_fmt(x) for x in row] for row in self.P]}

    @classmethod
    def from_dict(cls, obj) -> "FTable":
        try:
            return cls(int(obj["m"]), [[parse_number(x) for x in row] for row in obj["P"]])
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed FTable: {exc}") from exc

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def forward_table(mu: SubsetMeasure) -> FTable:
    m = mu.m
    f = filter_table(mu)
    sizes = [bin(z).count("1") for z in range(1 << m)]
    rows = []
    for l in range(m + 1):
        row = []
        for k in range(1, comb(m, l) + 1):
            law = _intersection_law(f, m, k)
            row.append(sum((p for z, p in enumerate(law) if sizes[z] >= l), Fraction(0)))
        rows.append(row)
    return FTable(m, rows)


# ---------------------------------------------------------------------------
# covers
# ---------------------------------------------------------------------------

def _check_cover_args(j: int, l: int, r: int) -> None:
    if r < 1 or not 1 <= l <= r or not 1 <= j <= comb(r, l):
        raise ValueError(f"invalid cover arguments j={j}, l={l}, r={r}")


@lru_cache(maxsize=None)
def cover_count(j: int, l: int, r: int) -> int:
    """Number of families of ``j`` distinct ``l``-subsets of ``[r]`` whose union is ``[r]``.

    Inclusion-exclusion over the union: a family inside an ``s``-set is one of
    ``C(C(s, l), j)`` choices, so
    ``C(j, l, r) = sum_s (-1)**(r-s) * C(r, s) * C(C(s, l), j)``.
    """
    _check_cover_args(j, l, r)
    return sum((-1) ** (r - s) * comb(r, s) * comb(comb(s, l), j) for s in range(l, r + 1))


def cover_count_bruteforce(j: int, l: int, r: int) -> int:
    _check_cover_args(j, l, r)
    full = (1 << r) - 1
    blocks = [sum(1 << i for i in c) for c in itertools.combinations(range(r), l)]
    count = 0
    for fam in itertools.combinations(blocks, j):
        union = 0
        for b in fam:
            union |= b
        count += union == full
    return count


@lru_cache(maxsize=None)
def d_coefficient(l: int, r: int) -> int:
    """``D(l, r) = sum_j (-1)**(j-1) * C(j, l, r)``: the inclusion-exclusion weight of an ``r``-set."""
    if not 1 <= l <= r:
        raise ValueError(f"invalid arguments l={l}, r={r}")
    return sum((-1) ** (j - 1) * cover_count(j, l, r) for j in range(1, comb(r, l) + 1))


# ---------------------------------------------------------------------------
# power sums and roots
# ---------------------------------------------------------------------------

def elementary_from_power_sums(z: Sequence) -> list:
    """Elementary symmetric ``e_1 .. e_n`` from power sums ``z_1 .. z_n`` (Newton's identities).

    ``k * e_k = sum_{i=1..k} (-1)**(i-1) * e_{k-i} * z_i``. Exact when the
    inputs are exact.
    """
    e = [Fraction(1) if isinstance(z[0], Rational) else 1.0] if len(z) else [1]
    for k in range(1, len(z) + 1):
        acc = sum((-1) ** (i - 1) * e[k - i] * z[i - 1] for i in range(1, k + 1))
        e.append(acc / k)
    return e[1:]


def extend_power_sums(e: Sequence, z: Sequence, upto: int) -> list:
    """Power sums ``z_1 .. z_upto`` of the multiset with elementary symmetric values ``e``.

    For ``k > n`` Newton's identities give
    ``z_k = sum_{i=1..n} (-1)**(i-1) * e_i * z_{k-i}``.
    """
    n = len(e)
    out = list(z[:upto])
    for k in range(len(out) + 1, upto + 1):
        out.append(sum((-1) ** (i - 1) * e[i - 1] * out[k - i - 1] for i in range(1, n + 1)))
    return out


# Polynomials below are coefficient lists, lowest degree first.

def _trim(a: list) -> list:
    while len(a) > 1 and a[-1] == 0:
        a.pop()
    return a


def _deriv(a: list) -> list:
    return _trim([i * c for i, c in enumerate(a)][1:] or [Fraction(0)])


def _divmod(a: list, b: list) -> tuple[list, list]:
    a = list(a)
    q = [Fraction(0)] * max(len(a) - len(b) + 1, 1)
    while len(a) >= len(b) and any(a):
        c = a[-1] / b[-1]
        shift = len(a) - len(b)
        q[shift] = c
        for i, bc in enumerate(b):
            a[shift + i] -= c * bc
        a.pop()
        if not a:
            a = [Fraction(0)]
    return _trim(q), _trim(a)


def _gcd(a: list, b: list) -> list:
    while any(b):
        a, b = b, _divmod(a, b)[1]
    return [c / a[-1] for c in a]


def _squarefree(f: list) -> list[tuple[list, int]]:
    """Yun's square-free factorization of a monic rational polynomial."""
    out = []
    d = _deriv(f)
    a = _gcd(f, d)
    b = _divmod(f, a)[0]
    c = _divmod(d, a)[0]
    dd = _trim([x - y for x, y in itertools.zip_longest(c, _deriv(b), fillvalue=Fraction(0))])
    i = 1
    while len(b) > 1:
        a = _gcd(b, dd)
        b = _divmod(b, a)[0]
        c = _divmod(dd, a)[0]
        if len(a) > 1:
            out.append((a, i))
        dd = _trim([x - y for x, y in itertools.zip_longest(c, _deriv(b), fillvalue=Fraction(0))])
        i += 1
    return out


def _clean_roots(roots: Iterable[complex], tol: float) -> list[float]:
    out = []
    for z in roots:
        re_, im = float(np.real(z)), float(np.imag(z))
        scale = max(1.0, abs(re_))
        if abs(im) > tol * scale:
            raise RootRecoveryError(f"root {complex(z)} has imaginary part above tolerance {tol}")
        if -tol * scale <= re_ < 0.0:
            re_ = 0.0
        elif 1.0 < re_ <= 1.0 + tol * scale:
            re_ = 1.0
        out.append(re_)
    return out


def _roots_of_elementary(e: Sequence, tol: float) -> list[float]:
    n = len(e)
    # x**n - e1 x**(n-1) + e2 x**(n-2) - ... (lowest degree first)
    poly = [(-1) ** (n - d) * Fraction(e[n - d - 1]) for d in range(n)] + [Fraction(1)]
    roots: list[complex] = []
    for factor, mult in _squarefree(poly):
        if len(factor) == 2:
            found = [complex(-factor[0] / factor[1])]
        else:
            found = list(np.roots([float(c) for c in reversed(factor)]))
        roots.extend(found * mult)
    return sorted(_clean_roots(roots, tol), reverse=True)


def newton_power_sums_to_roots(z: Sequence, tol: float = ROOT_TOL) -> list[float]:
    """Multiset with power sums ``z_1 .. z_n``, sorted descending.

    Inputs are converted to exact rationals (floats convert exactly), the
    elementary symmetric values follow from Newton's identities, and the
    monic polynomial is split into square-free parts before numerical root
    finding, so repeated values are recovered to full precision. Imaginary
    parts up to ``tol * max(1, |re|)`` are dropped and real parts within the
    same distance of ``[0, 1]`` are clamped into it.
    """
    if not len(z):
        raise ValueError("need at least one power sum")
    exact = [Fraction(x) if isinstance(x, Rational) else Fraction(float(x)) for x in z]
    return _roots_of_elementary(elementary_from_power_sums(exact), tol)


# ---------------------------------------------------------------------------
# reconstruction
# ---------------------------------------------------------------------------

@dataclass
class LevelMultisets:
    """``A[l]``: the filter masses of all ``l``-element sets, sorted descending."""

    m: int
    A: list

    def to_dict(self) -> dict:
        return {"m": self.m, "A": [[repr(float(x)) for x in row] for row in self.A]}


def reconstruct(P: FTable, m: int | None = None, tol: float = ROOT_TOL) -> LevelMultisets:
    """Recover every level multiset ``A_l`` from ``Pr[F_l^k]``.

    Downward over ``l``: the level-``l`` power sums are
    ``s_k = Pr[F_l^k] - sum_{r > l} D(l, r) * p_k(A_r)``,
    where ``p_k(A_r)`` for large ``k`` is extended through Newton's identities
    from the elementary symmetric values of level ``r``. Only the final root
    extraction at each level is numerical, so errors do not propagate
    between levels. ``A_0`` is ``[1]``.
    """
    m = P.m if m is None else m
    if m != P.m:
        raise ValueError(f"table is for m={P.m}, not {m}")
    exact = all(isinstance(x, Rational) for row in P.P for x in row)
    conv = Fraction if exact else float
    kmax = max(comb(m, l) for l in range(m + 1))
    sums: dict[int, list] = {}
    A: list[list[float]] = [[] for _ in range(m + 1)]
    for l in range(m, 0, -1):
        size = comb(m, l)
        s = []
        for k in range(1, size + 1):
            val = conv(P.P[l][k - 1])
            for r in range(l + 1, m + 1):
                val -= d_coefficient(l, r) * sums[r][k - 1]
            s.append(val)
        e = elementary_from_power_sums(s)
        sums[l] = extend_power_sums(e, s, kmax)
        try:
            if exact:
                A[l] = _roots_of_elementary(e, tol)
            else:
                A[l] = newton_power_sums_to_roots(s, tol)
        except RootRecoveryError as exc:
            raise RootRecoveryError(str(exc), level=l) from None
    A[0] = [1.0]
    return LevelMultisets(m, A)


def matching_distance(a: Sequence[float], b: Sequence[float]) -> float:
    """Optimal-matching l-infinity distance between equal-size real multisets."""
    if len(a) != len(b):
        raise ValueError("multisets differ in size")
    return max((abs(float(x) - float(y)) for x, y in zip(sorted(a), sorted(b))), default=0.0)


@dataclass
class PerturbationReport:
    delta: float
    trials: int
    displacement: list  # per level, max over trials; None when a trial failed
    failures: list  # per level, count of trials where root recovery failed
    flagged: list  # levels with degraded sensitivity
    amplification_threshold: float
    seed: int = 0
    notes: list = field(default_factory=list)

    @property
    def degraded(self) -> bool:
        return bool(self.flagged)

    @property
    def max_displacement(self) -> float | None:
        vals = [d for d in self.displacement if d is not None]
        return max(vals) if vals else None

    def to_dict(self) -> dict:
        return {
            "delta": self.delta, "trials": self.trials, "seed": self.seed,
            "displacement": self.displacement, "failures": self.failures,
            "flagged": self.flagged, "degraded": self.degraded,
            "amplification_threshold": self.amplification_threshold,
        }


def perturbation_report(P: FTable, m: int | None = None, delta: float = 1e-10, trials: int = 20,
                        seed: int = 0, amplification: float = 1e3,
                        tol: float = ROOT_TOL) -> PerturbationReport:
    """Empirical continuity check: reconstruct from ``P`` and from ``P`` moved by up to ``delta`` per entry.

    A level is flagged when a perturbed reconstruction fails or its
    displacement exceeds ``amplification * delta``.
    """
    m = P.m if m is None else m
    base = reconstruct(P, m, tol)
    rng = np.random.default_rng(seed)
    disp = [0.0] * (m + 1)
    fails = [0] * (m + 1)
    for _ in range(trials):
        if delta == 0:
            moved = FTable(P.m, [list(row) for row in P.P])
        else:
            moved = FTable(P.m, [
                [min(Fraction(1), max(Fraction(0), Fraction(x) + Fraction(float(delta * u))))
                 for x, u in zip(row, rng.uniform(-1.0, 1.0, len(row)))]
                for row in P.P])
            moved.P[0] = list(P.P[0])
        try:
            out = reconstruct(moved, m, tol)
        except RootRecoveryError as exc:
            lvl = exc.level if exc.level is not None else 0
            fails[lvl] += 1
            continue
        for l in range(m + 1):
            disp[l] = max(disp[l], matching_distance(base.A[l], out.A[l]))
    flagged = [l for l in range(m + 1) if fails[l] or disp[l] > amplification * delta and disp[l] > 0]
    return PerturbationReport(delta, trials, [d if not f else None for d, f in zip(disp, fails)],
                              fails, flagged, amplification, seed)
