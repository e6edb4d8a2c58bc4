"""Candidate invariants: tree-to-formula conversion and simplification.

Atoms are ``w . x' REL c`` where ``x'`` is the augmented column vector
(program variables followed by any ``v mod k`` / ``a*b`` columns) and ``c``
is rational. Back-substitution into program terms happens only when a
formula is rendered or turned into a program predicate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product

from . import program as pm
from .dtlearn import GOOD, DecisionTree, Inner, Leaf
from .features import SlopeMatrix, Term, canonical

RELS = ("<=", "<", "=", "!=", ">=", ">")
_NEG = {"<=": ">", ">": "<=", "<": ">=", ">=": "<", "=": "!=", "!=": "="}
_FLIP = {"<=": ">=", ">=": "<=", "<": ">", ">": "<", "=": "=", "!=": "!="}


@dataclass(frozen=True)
class Const:
    value: bool


TRUE = Const(True)
FALSE = Const(False)


@dataclass(frozen=True)
class Atom:
    w: tuple
    rel: str
    c: Fraction

    def __post_init__(self):
        if self.rel not in RELS:
            raise ValueError(f"bad relation {self.rel!r}")
        object.__setattr__(self, "c", Fraction(self.c))
        object.__setattr__(self, "w", tuple(int(v) for v in self.w))

    def negate(self) -> "Atom":
        return Atom(self.w, _NEG[self.rel], self.c)

    def holds(self, x) -> bool:
        lhs = sum(a * int(b) for a, b in zip(self.w, x))
        return _compare(lhs, self.rel, self.c)


@dataclass(frozen=True)
class And:
    args: tuple


@dataclass(frozen=True)
class Or:
    args: tuple


@dataclass(frozen=True)
class Not:
    arg: object


Formula = Const | Atom | And | Or | Not


def _compare(lhs, rel, c) -> bool:
    if rel == "<=":
        return lhs <= c
    if rel == "<":
        return lhs < c
    if rel == "=":
        return lhs == c
    if rel == "!=":
        return lhs != c
    if rel == ">=":
        return lhs >= c
    return lhs > c


def holds(f: Formula, x) -> bool:
    """Truth value of ``f`` on one augmented state vector."""
    if isinstance(f, Atom):
        return f.holds(x)
    if isinstance(f, Const):
        return f.value
    if isinstance(f, And):
        return all(holds(g, x) for g in f.args)
    if isinstance(f, Or):
        return any(holds(g, x) for g in f.args)
    return not holds(f.arg, x)


def mk_and(*args) -> Formula:
    flat = []
    for a in args:
        if a == TRUE:
            continue
        if a == FALSE:
            return FALSE
        flat.extend(a.args if isinstance(a, And) else (a,))
    if not flat:
        return TRUE
    return flat[0] if len(flat) == 1 else And(tuple(flat))


def mk_or(*args) -> Formula:
    flat = []
    for a in args:
        if a == FALSE:
            continue
        if a == TRUE:
            return TRUE
        flat.extend(a.args if isinstance(a, Or) else (a,))
    if not flat:
        return FALSE
    return flat[0] if len(flat) == 1 else Or(tuple(flat))


def atoms(f: Formula):
    if isinstance(f, Atom):
        yield f
    elif isinstance(f, (And, Or)):
        for g in f.args:
            yield from atoms(g)
    elif isinstance(f, Not):
        yield from atoms(f.arg)


# ---------------------------------------------------------------------------
# Tree -> formula
# ---------------------------------------------------------------------------


def _cond(node: Inner, slopes: SlopeMatrix) -> Atom:
    return Atom(slopes.H[node.feature], "<=", node.threshold)


def dt_to_form(tree, slopes: SlopeMatrix) -> Formula:
    """Disjunction over good leaves of the conjunction of the path conditions.

    Each ``z_j <= t`` test becomes ``H[j] . x' <= t``; right turns become
    ``H[j] . x' > t``.
    """
    root = tree.root if isinstance(tree, DecisionTree) else tree
    paths = []
    stack = [(root, ())]
    while stack:
        node, path = stack.pop()
        if isinstance(node, Leaf):
            if node.label == GOOD:
                paths.append(mk_and(*path))
            continue
        cond = _cond(node, slopes)
        stack.append((node.right, path + (cond.negate(),)))
        stack.append((node.left, path + (cond,)))
    return mk_or(*paths)


def dt_to_form_recursive(node, slopes: SlopeMatrix) -> Formula:
    """The literal recursion (cond & left) | (!cond & right), without flattening."""
    if isinstance(node, DecisionTree):
        node = node.root
    if isinstance(node, Leaf):
        return TRUE if node.label == GOOD else FALSE
    cond = _cond(node, slopes)
    return Or((And((cond, dt_to_form_recursive(node.left, slopes))),
               And((Not(cond), dt_to_form_recursive(node.right, slopes)))))


# ---------------------------------------------------------------------------
# Integer sets on one linear form
# ---------------------------------------------------------------------------

# A set of integers is a sorted tuple of disjoint, non-adjacent closed
# intervals (lo, hi); None stands for -inf / +inf.

FULL = ((None, None),)
EMPTY = ()


def _lo_key(v):
    return -math.inf if v is None else v


def _hi_key(v):
    return math.inf if v is None else v


def iset_interval(lo, hi) -> tuple:
    if lo is not None and hi is not None and lo > hi:
        return EMPTY
    return ((lo, hi),)


def iset_normalize(ivs) -> tuple:
    ivs = sorted((iv for iv in ivs if iv[0] is None or iv[1] is None or iv[0] <= iv[1]),
                 key=lambda iv: _lo_key(iv[0]))
    out = []
    for lo, hi in ivs:
        if out:
            plo, phi = out[-1]
            if phi is None or (lo is not None and lo <= phi + 1) or lo is None:
                out[-1] = (plo, None if phi is None or hi is None else max(phi, hi))
                continue
        out.append((lo, hi))
    return tuple(out)


def iset_union(a, b) -> tuple:
    return iset_normalize(list(a) + list(b))


def iset_intersect(a, b) -> tuple:
    out = []
    for alo, ahi in a:
        for blo, bhi in b:
            lo = max(_lo_key(alo), _lo_key(blo))
            hi = min(_hi_key(ahi), _hi_key(bhi))
            if lo <= hi:
                out.append((None if lo == -math.inf else lo, None if hi == math.inf else hi))
    return iset_normalize(out)


def iset_subset(a, b) -> bool:
    return iset_intersect(a, b) == iset_normalize(a)


def _atom_iset(rel: str, c: Fraction) -> tuple:
    """Integers v with v REL c."""
    fl, ce = math.floor(c), math.ceil(c)
    if rel == "<=":
        return iset_interval(None, fl)
    if rel == "<":
        return iset_interval(None, ce - 1)
    if rel == ">=":
        return iset_interval(ce, None)
    if rel == ">":
        return iset_interval(fl + 1, None)
    if rel == "=":
        return iset_interval(fl, fl) if fl == c else EMPTY
    if fl != c:
        return FULL
    return iset_normalize([(None, fl - 1), (fl + 1, None)])


def integerize(atom: Atom):
    """(canonical primitive w, integer set of w . x') equivalent to ``atom``
    on integer-valued columns."""
    g = math.gcd(*atom.w)
    if g == 0:
        return None, (FULL if _compare(0, atom.rel, atom.c) else EMPTY)
    w = canonical(atom.w)
    sign = 1 if tuple(v // g for v in atom.w) == w else -1
    rel = atom.rel if sign > 0 else _FLIP[atom.rel]
    return w, _atom_iset(rel, atom.c / (g * sign))


def _domain(w, terms) -> tuple:
    if terms is None:
        return FULL
    nz = [i for i, v in enumerate(w) if v]
    if len(nz) == 1 and w[nz[0]] == 1:
        lo, hi = terms[nz[0]].value_range
        return iset_interval(lo, hi)
    return FULL


# ---------------------------------------------------------------------------
# Simplification
# ---------------------------------------------------------------------------


def to_nnf(f: Formula, neg: bool = False) -> Formula:
    if isinstance(f, Const):
        return Const(f.value != neg)
    if isinstance(f, Atom):
        return f.negate() if neg else f
    if isinstance(f, Not):
        return to_nnf(f.arg, not neg)
    parts = [to_nnf(g, neg) for g in f.args]
    if isinstance(f, And) != neg:
        return mk_and(*parts)
    return mk_or(*parts)


def to_dnf(f: Formula) -> list:
    """List of conjunctions (each a list of atoms)."""
    f = to_nnf(f)
    if f == TRUE:
        return [[]]
    if f == FALSE:
        return []
    if isinstance(f, Atom):
        return [[f]]
    if isinstance(f, Or):
        return [c for g in f.args for c in to_dnf(g)]
    out = [[]]
    for g in f.args:
        out = [a + b for a, b in product(out, to_dnf(g))]
    return out


def _fuse(conj, terms):
    """Per-path interval fusion: dict w -> integer set, or None if empty."""
    sets: dict = {}
    for a in conj:
        w, s = integerize(a)
        if w is None:
            if s == EMPTY:
                return None
            continue
        if w not in sets:
            sets[w] = _domain(w, terms)
        sets[w] = iset_intersect(sets[w], s)
        if not sets[w]:
            return None
    return {w: s for w, s in sets.items() if s != _domain(w, terms)}


def _implies(b: dict, a: dict) -> bool:
    """Conjunction b entails conjunction a."""
    return all(w in b and iset_subset(b[w], s) for w, s in a.items())


def _absorb(disjuncts: list) -> list:
    out = []
    for i, b in enumerate(disjuncts):
        if b in disjuncts[:i]:
            continue
        if any(j != i and a != b and _implies(b, a) for j, a in enumerate(disjuncts)):
            continue
        out.append(b)
    return out


def _render_set(w, s, terms) -> list:
    """Conjunctions of atoms (one per convex-with-point-holes piece)."""
    dom = _domain(w, terms)
    dlo, dhi = dom[0] if dom else (None, None)
    pieces = [[s[0]]]
    for iv in s[1:]:
        prev_hi = pieces[-1][-1][1]
        if iv[0] - prev_hi == 2:
            pieces[-1].append(iv)
        else:
            pieces.append([iv])
    out = []
    for piece in pieces:
        lo, hi = piece[0][0], piece[-1][1]
        conj = []
        if lo is not None and lo == hi:
            conj.append(Atom(w, "=", lo))
        else:
            if lo is not None and lo != dlo:
                conj.append(Atom(w, ">=", lo))
            if hi is not None and hi != dhi:
                conj.append(Atom(w, "<=", hi))
        for left, right in zip(piece, piece[1:]):
            conj.append(Atom(w, "!=", left[1] + 1))
        out.append(conj)
    return out


def simplify(f: Formula, terms=None) -> Formula:
    """Bounded, semantics-preserving simplification over integer points.

    Integerizes rational bounds, fuses the bounds on each linear form within a
    conjunction, drops empty conjunctions, absorbs subsumed disjuncts, merges
    disjuncts over a single common form (recognising ``!=`` and ``=``) and
    returns a disjunction of conjunctions. ``terms`` (column Terms) lets the
    known ranges of ``mod`` and square columns tighten the result.
    """
    terms = tuple(terms) if terms is not None else None
    disjuncts = []
    for conj in to_dnf(f):
        fused = _fuse(conj, terms)
        if fused is None:
            continue
        if not fused:
            return TRUE
        disjuncts.append(fused)
    disjuncts = _absorb(disjuncts)
    merged: list = []
    single: dict = {}
    for d in disjuncts:
        if len(d) == 1:
            (w, s), = d.items()
            if w in single:
                merged[single[w]][w] = iset_union(merged[single[w]][w], s)
                continue
            single[w] = len(merged)
            d = dict(d)
        merged.append(d)
    for d in merged:
        if len(d) == 1:
            (w, s), = d.items()
            if s == _domain(w, terms) or s == FULL:
                return TRUE
    merged = _absorb(merged)
    out = []
    for d in merged:
        pieces = [[]]
        for w, s in d.items():
            pieces = [p + q for p in pieces for q in _render_set(w, s, terms)]
        out.extend(mk_and(*p) for p in pieces)
    return mk_or(*out)


def count_predicates(f: Formula) -> int:
    """Distinct atoms; an atom and its negation count once."""
    keys = set()
    for a in atoms(f):
        w, rel, c = a.w, a.rel, a.c
        if rel in (">", "<"):
            rel = _NEG[rel]
        elif rel == "!=":
            rel = "="
        keys.add((w, rel, c))
    return len(keys)


# ---------------------------------------------------------------------------
# Back-substitution, printing, JSON
# ---------------------------------------------------------------------------


def _linear(coeffs) -> pm.Expr:
    expr = None
    for k, t in coeffs:
        mag = t if abs(k) == 1 else pm.Mul(pm.Const(abs(k)), t)
        if expr is None:
            expr = mag if k > 0 else pm.UMinus(mag)
        else:
            expr = pm.Add(expr, mag) if k > 0 else pm.Sub(expr, mag)
    return expr if expr is not None else pm.Const(0)


def _int_const(v: int) -> pm.Expr:
    return pm.Const(v) if v >= 0 else pm.UMinus(pm.Const(-v))


def atom_to_pred(a: Atom, terms) -> pm.Pred:
    w, c = list(a.w), a.c
    if c.denominator != 1:
        w = [v * c.denominator for v in w]
        c = Fraction(c.numerator)
    exprs = [t.expr if isinstance(t, Term) else pm.Var(t) for t in terms]
    coeffs = [(k, e) for k, e in zip(w, exprs) if k]
    pos = [(k, e) for k, e in coeffs if k > 0]
    neg = [(-k, e) for k, e in coeffs if k < 0]
    if c == 0 and pos and neg:
        return pm.Cmp(a.rel, _linear(pos), _linear(neg))
    return pm.Cmp(a.rel, _linear(coeffs), _int_const(int(c)))


def to_pred(f: Formula, terms) -> pm.Pred:
    """Program predicate with augmented columns replaced by their expressions."""
    if isinstance(f, Const):
        return pm.BoolLit(f.value)
    if isinstance(f, Atom):
        return atom_to_pred(f, terms)
    if isinstance(f, Not):
        return pm.Not(to_pred(f.arg, terms))
    parts = [to_pred(g, terms) for g in f.args]
    return pm.conj(*parts) if isinstance(f, And) else pm.disj(*parts)


def format_formula(f: Formula, terms) -> str:
    return pm.unparse_pred(to_pred(f, terms))


def to_json(f: Formula):
    if isinstance(f, Const):
        return f.value
    if isinstance(f, Atom):
        return {"w": list(f.w), "rel": f.rel, "c": str(f.c)}
    if isinstance(f, Not):
        return {"not": to_json(f.arg)}
    key = "and" if isinstance(f, And) else "or"
    return {key: [to_json(g) for g in f.args]}


def from_json(data) -> Formula:
    if isinstance(data, bool):
        return Const(data)
    if "w" in data:
        return Atom(tuple(data["w"]), data["rel"], Fraction(data["c"]))
    if "not" in data:
        return Not(from_json(data["not"]))
    if "and" in data:
        return And(tuple(from_json(g) for g in data["and"]))
    return Or(tuple(from_json(g) for g in data["or"]))
