"""Hyperplane slopes, nonlinear feature columns and the Z = X' H^T transform."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import program as pm

_SAFE = 2**62


# ---------------------------------------------------------------------------
# Feature columns
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Term:
    """A base column of the augmented sample: a variable, ``v mod k`` or ``a*b``."""

    kind: str  # 'var', 'mod', 'mul'
    args: tuple

    @classmethod
    def var(cls, name: str) -> "Term":
        return cls("var", (name,))

    @classmethod
    def mod(cls, name: str, k: int) -> "Term":
        if k <= 0:
            raise ValueError(f"mod divisor must be positive, got {k}")
        return cls("mod", (name, int(k)))

    @classmethod
    def mul(cls, a: str, b: str) -> "Term":
        return cls("mul", (a, b))

    @property
    def expr(self) -> pm.Expr:
        if self.kind == "var":
            return pm.Var(self.args[0])
        if self.kind == "mod":
            return pm.Mod(pm.Var(self.args[0]), self.args[1])
        return pm.Mul(pm.Var(self.args[0]), pm.Var(self.args[1]))

    @property
    def is_nonlinear(self) -> bool:
        return self.kind == "mul"

    @property
    def value_range(self):
        """Known (lo, hi) range of the column, None for unbounded ends."""
        if self.kind == "mod":
            return (0, self.args[1] - 1)
        if self.kind == "mul" and self.args[0] == self.args[1]:
            return (0, None)
        return (None, None)

    def __str__(self) -> str:
        return pm.unparse_expr(self.expr)

    def to_json(self) -> dict:
        if self.kind == "var":
            return {"var": self.args[0]}
        if self.kind == "mod":
            return {"mod": [self.args[0], self.args[1]]}
        return {"mul": list(self.args)}

    @classmethod
    def from_json(cls, data: dict) -> "Term":
        if "var" in data:
            return cls.var(data["var"])
        if "mod" in data:
            return cls.mod(*data["mod"])
        return cls.mul(*data["mul"])


def parse_augment(text: str) -> list:
    """Parse ``mod:x:2,square:i,mul:x:y`` into extra Terms."""
    out = []
    for item in filter(None, (t.strip() for t in text.split(","))):
        parts = item.split(":")
        kind = parts[0]
        if kind == "mod" and len(parts) == 3:
            out.append(Term.mod(parts[1], int(parts[2])))
        elif kind == "square" and len(parts) == 2:
            out.append(Term.mul(parts[1], parts[1]))
        elif kind in ("mul", "prod", "product") and len(parts) == 3:
            out.append(Term.mul(parts[1], parts[2]))
        else:
            raise ValueError(f"bad augmentation term {item!r}; use mod:v:k, square:v or mul:a:b")
    return out


def default_augment(ts: pm.TransitionSystem) -> list:
    """mod(v, k) for every ``v mod k`` in the program with 2 <= k <= 10."""
    return [Term.mod(v, k) for v, k in ts.mod_terms() if 2 <= k <= 10]


def augment_nonlinear(X: np.ndarray, vars: tuple, extra: list):
    """Append one column per extra Term. Returns (X', terms) with terms
    covering every column of X' (original variables first)."""
    X = np.asarray(X, dtype=np.int64)
    index = {v: i for i, v in enumerate(vars)}
    terms = [Term.var(v) for v in vars]
    cols = [X]
    for t in extra:
        for name in t.args[:1] if t.kind == "mod" else t.args:
            if name not in index:
                raise ValueError(f"augmentation refers to unknown variable {name!r}")
        if t.kind == "var":
            col = X[:, index[t.args[0]]]
        elif t.kind == "mod":
            col = np.mod(X[:, index[t.args[0]]], t.args[1])
        else:
            a = X[:, index[t.args[0]]]
            b = X[:, index[t.args[1]]]
            if len(a) and int(np.abs(a).max()) * int(np.abs(b).max()) > pm.INT64_MAX:
                raise pm.ArithmeticOverflow(f"product column {t} overflows 64 bits")
            col = a * b
        cols.append(col.reshape(-1, 1))
        terms.append(t)
    return np.hstack(cols).astype(np.int64), tuple(terms)


def augment_state(s: tuple, terms: tuple, vars: tuple) -> tuple:
    """Values of every term column for a single state."""
    env = dict(zip(vars, s))
    out = []
    for t in terms:
        if t.kind == "var":
            out.append(env[t.args[0]])
        elif t.kind == "mod":
            out.append(env[t.args[0]] % t.args[1])
        else:
            out.append(env[t.args[0]] * env[t.args[1]])
    return tuple(out)


# ---------------------------------------------------------------------------
# Slopes
# ---------------------------------------------------------------------------


def canonical(w) -> tuple:
    """Primitive integer vector with first nonzero entry positive."""
    w = [int(v) for v in w]
    g = math.gcd(*w)
    if g == 0:
        raise ValueError("zero slope")
    w = [v // g for v in w]
    first = next(v for v in w if v)
    return tuple(-v for v in w) if first < 0 else tuple(w)


@dataclass(frozen=True)
class SlopeMatrix:
    H: tuple  # rows of ints, each of length len(terms)
    terms: tuple  # Term per base column

    def __post_init__(self):
        if not self.H:
            raise ValueError("slope matrix needs at least one row")
        seen = set()
        for row in self.H:
            if len(row) != len(self.terms):
                raise ValueError("slope row length does not match column count")
            if not any(row):
                raise ValueError("zero slope row")
            key = canonical(row)
            if key in seen:
                raise ValueError(f"duplicate slope {row} (up to sign)")
            seen.add(key)

    @property
    def m(self) -> int:
        return len(self.H)

    def array(self) -> np.ndarray:
        return np.array(self.H, dtype=np.int64).reshape(self.m, len(self.terms))

    def describe(self, j: int) -> str:
        return linear_text(self.H[j], self.terms)

    def to_json(self) -> dict:
        return {"H": [list(r) for r in self.H], "terms": [t.to_json() for t in self.terms],
                "features": [self.describe(j) for j in range(self.m)]}

    @classmethod
    def from_json(cls, data: dict) -> "SlopeMatrix":
        return cls(tuple(tuple(r) for r in data["H"]), tuple(Term.from_json(t) for t in data["terms"]))


def linear_text(w, terms) -> str:
    parts = []
    for c, t in zip(w, terms):
        if not c:
            continue
        name = str(t)
        if t.kind == "mod" and abs(c) != 1:
            name = f"({name})"
        mag = name if abs(c) == 1 else f"{abs(c)}*{name}"
        if not parts:
            parts.append(mag if c > 0 else f"-{mag}")
        else:
            parts.append(f"+ {mag}" if c > 0 else f"- {mag}")
    return " ".join(parts) or "0"


def _dedupe(rows) -> tuple:
    out = {}
    for r in rows:
        if any(r):
            out.setdefault(canonical(r), None)
    return tuple(out)


def octagon_rows(d: int) -> tuple:
    if d < 1:
        raise ValueError("dimension must be >= 1")
    rows = []
    for i in range(d):
        rows.append(tuple(int(k == i) for k in range(d)))
    for i, j in itertools.combinations(range(d), 2):
        for sign in (-1, 1):
            w = [0] * d
            w[i], w[j] = 1, sign
            rows.append(tuple(w))
    return tuple(rows)


def octagon_slopes(terms) -> SlopeMatrix:
    """Unit vectors and e_i -/+ e_j for i < j: d^2 rows up to negation."""
    terms = _as_terms(terms)
    return SlopeMatrix(octagon_rows(len(terms)), terms)


def constant_slopes(ts: pm.TransitionSystem, terms=None) -> SlopeMatrix:
    """Vectors over C = {+-c : c literal in ts} U {+-1} with at most two nonzeros,
    deduplicated up to positive scaling and negation."""
    terms = _as_terms(terms if terms is not None else ts.vars)
    d = len(terms)
    mags = sorted(ts.literals() | {1})
    coeffs = sorted({c for m in mags for c in (m, -m)})
    rows = list(octagon_rows(d))
    for i in range(d):
        for a in mags:
            w = [0] * d
            w[i] = a
            rows.append(tuple(w))
    for i, j in itertools.combinations(range(d), 2):
        for a in mags:
            for b in coeffs:
                w = [0] * d
                w[i], w[j] = a, b
                rows.append(tuple(w))
    return SlopeMatrix(_dedupe(rows), terms)


def rationalize(v, max_den: int = 10) -> tuple:
    """Real direction -> primitive integer slope.

    Scale so the largest-magnitude entry is 1, approximate each entry by a
    continued fraction with denominator <= max_den, clear denominators.
    """
    v = np.asarray(v, dtype=float)
    big = v[np.argmax(np.abs(v))]
    if big == 0:
        raise ValueError("zero direction")
    fr = [Fraction(float(x / big)).limit_denominator(max_den) for x in v]
    lcm = math.lcm(*(f.denominator for f in fr))
    return canonical([int(f * lcm) for f in fr])


class DegenerateSample(ValueError):
    pass


def pca_directions(good) -> tuple:
    """Eigenvalues (descending) and unit eigenvectors of the good-state covariance."""
    P = np.asarray(sorted(set(map(tuple, good))), dtype=float)
    if len(P) < 2:
        raise DegenerateSample("degenerate sample: need at least two distinct good states")
    C = np.cov(P - P.mean(axis=0), rowvar=False, bias=True).reshape(P.shape[1], P.shape[1])
    vals, vecs = np.linalg.eigh(C)
    order = np.argsort(-vals, kind="stable")
    return vals[order], vecs[:, order].T


def pca_slopes(good, k: int | None = None, terms=None, null_tol: float = 1e-6) -> SlopeMatrix:
    """Top-k principal directions of the good states, rationalized, followed
    by the near-zero-variance (equality) directions."""
    vals, vecs = pca_directions(good)
    d = len(vals)
    k = d if k is None else k
    if not 1 <= k <= d:
        raise ValueError(f"k must be in [1, {d}]")
    total = float(vals.sum())
    rows = [rationalize(vecs[i]) for i in range(k)]
    rows += [rationalize(vecs[i]) for i in range(k, d) if vals[i] < null_tol * total]
    terms = _as_terms(terms if terms is not None else [f"x{i}" for i in range(d)])
    return SlopeMatrix(_dedupe(rows), terms)


def _as_terms(terms) -> tuple:
    if isinstance(terms, int):
        terms = [f"x{i}" for i in range(terms)]
    return tuple(t if isinstance(t, Term) else Term.var(t) for t in terms)


def restrict(slopes: SlopeMatrix, rows) -> SlopeMatrix:
    return SlopeMatrix(tuple(tuple(r) for r in rows), slopes.terms)


def combine(*mats: SlopeMatrix) -> SlopeMatrix:
    terms = mats[0].terms
    if any(m.terms != terms for m in mats):
        raise ValueError("slope matrices over different columns")
    return SlopeMatrix(_dedupe(r for m in mats for r in m.H), terms)


# ---------------------------------------------------------------------------
# Transform
# ---------------------------------------------------------------------------


def transform(X: np.ndarray, slopes) -> np.ndarray:
    """Exact Z = X' H^T; raises ArithmeticOverflow rather than wrapping."""
    H = slopes.array() if isinstance(slopes, SlopeMatrix) else np.asarray(slopes, dtype=np.int64)
    X = np.asarray(X, dtype=np.int64)
    if X.ndim != 2 or X.shape[1] != H.shape[1]:
        raise ValueError(f"X has {X.shape[-1]} columns but slopes expect {H.shape[1]}")
    if X.size:
        bound = int(np.abs(X).max()) * int(np.abs(H).sum(axis=1).max())
        if bound > _SAFE:
            Z = np.array([[sum(int(a) * int(b) for a, b in zip(x, h)) for h in H] for x in X], dtype=object)
            if any(v > pm.INT64_MAX or v < pm.INT64_MIN for v in Z.flat):
                raise pm.ArithmeticOverflow("transformed feature overflows 64 bits")
            return Z.astype(np.int64)
    return X @ H.T
