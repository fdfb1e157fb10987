"""First-order formulas over labeled graphs with an optional root constant.

Concrete syntax::

    formula := quant | iff
    quant   := ("forall" | "exists") ident "." formula
    iff     := impl ("<->" impl)*
    impl    := disj ("->" disj)*
    disj    := conj ("|" conj)*
    conj    := neg ("&" neg)*
    neg     := "!" neg | atom
    atom    := "(" formula ")" | term "~" term | term "=" term
             | term "!=" term | ident "(" term ")"
    term    := "root" | ident

``&``, ``|`` and ``<->`` associate to the left, ``->`` to the right.
``t1 != t2`` is sugar for ``!(t1 = t2)``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, NamedTuple, Sequence, Union

__all__ = [
    "Var", "Root", "ROOT", "Term",
    "Edge", "Eq", "Label", "Not", "And", "Or", "Implies", "Iff", "Exists", "Forall",
    "Formula", "FormulaArity", "Derooted", "NameSupply",
    "FormulaSyntaxError", "FormulaScopeError",
    "parse", "to_text", "free_vars", "is_sentence", "uses_root", "arity",
    "rename_fresh", "instantiate", "substitute", "deroot", "build_psi",
    "build_power_conj", "conjoin", "all_vars",
]

KEYWORDS = frozenset({"root", "forall", "exists"})


class FormulaSyntaxError(ValueError):
    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} at position {pos}")
        self.pos = pos


class FormulaScopeError(ValueError):
    def __init__(self, message: str, variable: str):
        super().__init__(message)
        self.variable = variable


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class Var:
    name: str


@dataclass(frozen=True, slots=True)
class Root:
    pass


ROOT = Root()
Term = Union[Var, Root]


@dataclass(frozen=True, slots=True)
class Edge:
    left: Term
    right: Term


@dataclass(frozen=True, slots=True)
class Eq:
    left: Term
    right: Term


@dataclass(frozen=True, slots=True)
class Label:
    symbol: str
    term: Term


@dataclass(frozen=True, slots=True)
class Not:
    body: "Formula"


@dataclass(frozen=True, slots=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True, slots=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True, slots=True)
class Implies:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True, slots=True)
class Iff:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True, slots=True)
class Exists:
    var: str
    body: "Formula"


@dataclass(frozen=True, slots=True)
class Forall:
    var: str
    body: "Formula"


Formula = Union[Edge, Eq, Label, Not, And, Or, Implies, Iff, Exists, Forall]
_BINARY = (And, Or, Implies, Iff)
_ATOMS = (Edge, Eq, Label)
_QUANT = (Exists, Forall)


class FormulaArity(NamedTuple):
    p: int
    uses_root: bool


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<op><->|->|!=|[!&|~=().])|(?P<ident>[A-Za-z_][A-Za-z0-9_]*))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            raise FormulaSyntaxError(f"unexpected character {text[pos]!r}", pos)
        start = m.start("op") if m.group("op") else m.start("ident")
        if m.group("op"):
            tokens.append(("op", m.group("op"), start))
        else:
            tokens.append(("ident", m.group("ident"), start))
        pos = m.end()
    tokens.append(("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self, offset: int = 0) -> tuple[str, str, int]:
        return self.tokens[min(self.i + offset, len(self.tokens) - 1)]

    def at(self, value: str) -> bool:
        kind, val, _ = self.peek()
        return kind == "op" and val == value

    def expect(self, value: str) -> None:
        kind, val, pos = self.peek()
        if kind != "op" or val != value:
            found = val or "end of input"
            raise FormulaSyntaxError(f"expected {value!r}, found {found!r}", pos)
        self.i += 1

    def ident(self, what: str) -> str:
        kind, val, pos = self.peek()
        if kind != "ident" or val in KEYWORDS:
            found = val or "end of input"
            raise FormulaSyntaxError(f"expected {what}, found {found!r}", pos)
        self.i += 1
        return val

    def formula(self) -> Formula:
        kind, val, _ = self.peek()
        if kind == "ident" and val in ("forall", "exists"):
            self.i += 1
            var = self.ident("variable")
            self.expect(".")
            body = self.formula()
            return Exists(var, body) if val == "exists" else Forall(var, body)
        return self.iff()

    def iff(self) -> Formula:
        node = self.impl()
        while self.at("<->"):
            self.i += 1
            node = Iff(node, self.impl())
        return node

    def impl(self) -> Formula:
        node = self.disj()
        if self.at("->"):
            self.i += 1
            return Implies(node, self.impl())
        return node

    def disj(self) -> Formula:
        node = self.conj()
        while self.at("|"):
            self.i += 1
            node = Or(node, self.conj())
        return node

    def conj(self) -> Formula:
        node = self.neg()
        while self.at("&"):
            self.i += 1
            node = And(node, self.neg())
        return node

    def neg(self) -> Formula:
        if self.at("!"):
            self.i += 1
            return Not(self.neg())
        return self.atom()

    def atom(self) -> Formula:
        if self.at("("):
            self.i += 1
            node = self.formula()
            self.expect(")")
            return node
        kind, val, pos = self.peek()
        if kind == "ident" and val not in KEYWORDS and self.peek(1)[1] == "(" and self.peek(1)[0] == "op":
            self.i += 2
            term = self.term()
            self.expect(")")
            return Label(val, term)
        left = self.term()
        kind, op, pos = self.peek()
        if kind != "op" or op not in ("~", "=", "!="):
            raise FormulaSyntaxError(f"expected '~', '=' or '!=', found {op or 'end of input'!r}", pos)
        self.i += 1
        right = self.term()
        if op == "~":
            return Edge(left, right)
        if op == "=":
            return Eq(left, right)
        return Not(Eq(left, right))

    def term(self) -> Term:
        kind, val, pos = self.peek()
        if kind == "ident" and val == "root":
            self.i += 1
            return ROOT
        return Var(self.ident("term"))


def parse(text: str, free: Sequence[str] | None = None) -> Formula:
    """Parse ``text`` into a formula.

    With ``free`` given, every variable not bound by a quantifier must be
    listed there; otherwise unbound variables become free variables.
    Quantifying a variable that is already bound on the same path is a
    scope error.
    """
    parser = _Parser(text)
    node = parser.formula()
    kind, val, pos = parser.peek()
    if kind != "eof":
        raise FormulaSyntaxError(f"unexpected token {val!r}", pos)
    check_scope(node, free)
    return node


def check_scope(phi: Formula, free: Sequence[str] | None = None) -> None:
    allowed = None if free is None else set(free)

    def visit(node, bound: frozenset):
        if isinstance(node, _QUANT):
            if node.var in bound:
                raise FormulaScopeError(f"variable {node.var!r} quantified twice on one path", node.var)
            visit(node.body, bound | {node.var})
        elif isinstance(node, _BINARY):
            visit(node.left, bound)
            visit(node.right, bound)
        elif isinstance(node, Not):
            visit(node.body, bound)
        else:
            for t in _terms(node):
                if isinstance(t, Var) and t.name not in bound and allowed is not None and t.name not in allowed:
                    raise FormulaScopeError(f"unbound variable {t.name!r}", t.name)

    visit(phi, frozenset())


# ---------------------------------------------------------------------------
# Printing
# ---------------------------------------------------------------------------

_PREC = {Exists: 0, Forall: 0, Iff: 1, Implies: 2, Or: 3, And: 4, Not: 5}
_SYMBOL = {Iff: "<->", Implies: "->", Or: "|", And: "&"}


def _prec(node) -> int:
    if isinstance(node, Not) and isinstance(node.body, Eq):
        return 6
    return _PREC.get(type(node), 6)


def _term_text(t: Term) -> str:
    return "root" if isinstance(t, Root) else t.name


def to_text(phi: Formula) -> str:
    """Render ``phi`` in the concrete syntax with minimal parentheses."""

    def wrap(node, needs: bool) -> str:
        s = go(node)
        return f"({s})" if needs else s

    def go(node) -> str:
        if isinstance(node, Edge):
            return f"{_term_text(node.left)} ~ {_term_text(node.right)}"
        if isinstance(node, Eq):
            return f"{_term_text(node.left)} = {_term_text(node.right)}"
        if isinstance(node, Label):
            return f"{node.symbol}({_term_text(node.term)})"
        if isinstance(node, Not):
            if isinstance(node.body, Eq):
                return f"{_term_text(node.body.left)} != {_term_text(node.body.right)}"
            return "!" + wrap(node.body, _prec(node.body) < 5)
        if isinstance(node, _QUANT):
            q = "exists" if isinstance(node, Exists) else "forall"
            return f"{q} {node.var}. {go(node.body)}"
        level = _PREC[type(node)]
        if isinstance(node, Implies):
            left = wrap(node.left, _prec(node.left) <= level)
            right = wrap(node.right, _prec(node.right) < level)
        else:
            left = wrap(node.left, _prec(node.left) < level)
            right = wrap(node.right, _prec(node.right) <= level)
        return f"{left} {_SYMBOL[type(node)]} {right}"

    return go(phi)


for _cls in (Edge, Eq, Label, Not, And, Or, Implies, Iff, Exists, Forall):
    _cls.__str__ = to_text  # type: ignore[method-assign]


# ---------------------------------------------------------------------------
# Syntactic queries
# ---------------------------------------------------------------------------

def _terms(node) -> tuple:
    if isinstance(node, (Edge, Eq)):
        return (node.left, node.right)
    if isinstance(node, Label):
        return (node.term,)
    return ()


@lru_cache(maxsize=4096)
def free_vars(phi: Formula) -> tuple[str, ...]:
    """Free variables in order of first textual occurrence."""
    seen: dict[str, None] = {}

    def visit(node, bound: frozenset):
        if isinstance(node, _QUANT):
            visit(node.body, bound | {node.var})
        elif isinstance(node, _BINARY):
            visit(node.left, bound)
            visit(node.right, bound)
        elif isinstance(node, Not):
            visit(node.body, bound)
        else:
            for t in _terms(node):
                if isinstance(t, Var) and t.name not in bound:
                    seen.setdefault(t.name)

    visit(phi, frozenset())
    return tuple(seen)


def all_vars(phi: Formula) -> set[str]:
    names: set[str] = set()

    def visit(node):
        if isinstance(node, _QUANT):
            names.add(node.var)
            visit(node.body)
        elif isinstance(node, _BINARY):
            visit(node.left)
            visit(node.right)
        elif isinstance(node, Not):
            visit(node.body)
        else:
            names.update(t.name for t in _terms(node) if isinstance(t, Var))

    visit(phi)
    return names


def uses_root(phi: Formula) -> bool:
    if isinstance(phi, _QUANT) or isinstance(phi, Not):
        return uses_root(phi.body)
    if isinstance(phi, _BINARY):
        return uses_root(phi.left) or uses_root(phi.right)
    return any(isinstance(t, Root) for t in _terms(phi))


def is_sentence(phi: Formula) -> bool:
    return not free_vars(phi)


def arity(phi: Formula) -> FormulaArity:
    return FormulaArity(len(free_vars(phi)), uses_root(phi))


def conjoin(parts: Iterable[Formula]) -> Formula:
    """Left-folded conjunction of a nonempty iterable."""
    parts = list(parts)
    if not parts:
        raise ValueError("empty conjunction")
    node = parts[0]
    for part in parts[1:]:
        node = And(node, part)
    return node


# ---------------------------------------------------------------------------
# Renaming and substitution
# ---------------------------------------------------------------------------

class NameSupply:
    """Source of fresh variable names ``<stem><i>``, avoiding reserved names."""

    def __init__(self, reserved: Iterable[str] = ()):
        self._taken = set(reserved)
        self._counters: dict[str, int] = {}

    def reserve(self, names: Iterable[str]) -> None:
        self._taken.update(names)

    def fresh(self, stem: str = "z") -> str:
        i = self._counters.get(stem, 0)
        while True:
            i += 1
            name = f"{stem}{i}"
            if name not in self._taken:
                break
        self._counters[stem] = i
        self._taken.add(name)
        return name


def substitute(phi: Formula, mapping: dict[str, Term], root_to: Term | None = None,
               supply: NameSupply | None = None, bound_stem: str = "z") -> Formula:
    """Replace free variables per ``mapping`` and the root constant by ``root_to``.

    Bound variables are renamed from ``supply`` when one is given, which rules
    out capture of the substituted terms.
    """

    def term(t: Term, env: dict[str, str]) -> Term:
        if isinstance(t, Root):
            return ROOT if root_to is None else root_to
        if t.name in env:
            return Var(env[t.name])
        return mapping.get(t.name, t)

    def go(node, env: dict[str, str]):
        if isinstance(node, Edge):
            return Edge(term(node.left, env), term(node.right, env))
        if isinstance(node, Eq):
            return Eq(term(node.left, env), term(node.right, env))
        if isinstance(node, Label):
            return Label(node.symbol, term(node.term, env))
        if isinstance(node, Not):
            return Not(go(node.body, env))
        if isinstance(node, _BINARY):
            return type(node)(go(node.left, env), go(node.right, env))
        new = supply.fresh(bound_stem) if supply is not None else node.var
        return type(node)(new, go(node.body, {**env, node.var: new}))

    return go(phi, {})


def rename_fresh(phi: Formula, supply: NameSupply, stem: str = "z") -> Formula:
    """Alpha-rename every bound variable of ``phi`` to a fresh name."""
    supply.reserve(free_vars(phi))
    return substitute(phi, {}, supply=supply, bound_stem=stem)


def instantiate(phi: Formula, params: Sequence[str], names: Sequence[str],
                supply: NameSupply, root_to: Term | None = None) -> Formula:
    """Copy of ``phi`` with ``params[i]`` renamed to ``names[i]`` and fresh bound variables."""
    if len(params) != len(names):
        raise ValueError("parameter/name length mismatch")
    mapping = {p: Var(n) for p, n in zip(params, names)}
    return substitute(phi, mapping, root_to=root_to, supply=supply)


class Derooted(NamedTuple):
    """A root-free formula whose last parameter ``y`` stands for the root."""

    formula: Formula
    xs: tuple[str, ...]
    y: str

    @property
    def params(self) -> tuple[str, ...]:
        return self.xs + (self.y,)

    def __str__(self) -> str:
        return to_text(self.formula)


def deroot(phi: Formula, stem: str = "y") -> Derooted:
    """Replace the root constant by a fresh variable appended as the last parameter.

    The slot variable is appended even when ``phi`` does not mention the root,
    so every derooted formula has arity ``p + 1``.
    """
    if isinstance(phi, Derooted):
        return phi
    taken = all_vars(phi)
    y = stem
    i = 0
    while y in taken:
        i += 1
        y = f"{stem}{i}"
    return Derooted(substitute(phi, {}, root_to=Var(y)), free_vars(phi), y)


def _as_derooted(phi) -> Derooted:
    if isinstance(phi, Derooted):
        return phi
    if uses_root(phi):
        raise ValueError("expected a root-free formula; call deroot() first")
    fv = free_vars(phi)
    if not fv:
        raise ValueError("derooted formula needs at least the root slot variable")
    return Derooted(phi, fv[:-1], fv[-1])


def build_psi(phi_minus: Derooted | Formula, xi: Formula, k: int, l: int,
              supply: NameSupply | None = None) -> Formula:
    """Formula whose Stone pairing is the probability that ``k`` random pushforward sets share ``l`` elements.

    Free variables are ``x1 .. x{k*p}`` (tuple ``i`` occupies positions
    ``(i-1)*p+1 .. i*p``); the witnesses ``y1 .. y{l}`` are existentially bound.
    A plain formula is read as ``phi_minus(xs, y)`` with ``y`` its last free variable.
    """
    dr = _as_derooted(phi_minus)
    if k < 1 or l < 1:
        raise ValueError("k and l must be positive")
    xi_free = free_vars(xi)
    if len(xi_free) != 1 or uses_root(xi):
        raise ValueError("xi must be a root-free formula with exactly one free variable")
    supply = supply or NameSupply()
    p = len(dr.xs)
    xs = [[supply.fresh("x") for _ in range(p)] for _ in range(k)]
    ys = [supply.fresh("y") for _ in range(l)]
    parts: list[Formula] = [instantiate(xi, xi_free, [y], supply) for y in ys]
    parts += [Not(Eq(Var(ys[i]), Var(ys[j]))) for i in range(l) for j in range(i + 1, l)]
    parts += [instantiate(dr.formula, dr.params, xs[i] + [ys[j]], supply)
              for i in range(k) for j in range(l)]
    node = conjoin(parts)
    for y in reversed(ys):
        node = Exists(y, node)
    return node


def build_power_conj(phis: Sequence[Formula], exponents: Sequence[int],
                     supply: NameSupply | None = None) -> Formula:
    """Conjunction of ``e_i`` copies of each ``phi_i`` on pairwise disjoint fresh variable tuples.

    The root constant is kept, so the Stone pairing of the result at any root
    factorizes into the product of the individual pairings.
    """
    if not phis:
        raise ValueError("empty formula list")
    if len(phis) != len(exponents):
        raise ValueError("phis and exponents differ in length")
    if any(int(e) < 1 for e in exponents):
        raise ValueError("exponents must be positive integers")
    supply = supply or NameSupply()
    parts = []
    for phi, e in zip(phis, exponents):
        fv = free_vars(phi)
        for _ in range(int(e)):
            parts.append(instantiate(phi, fv, [supply.fresh("x") for _ in fv], supply))
    return conjoin(parts)
